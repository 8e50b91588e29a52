import random

import pytest

from skymission.evaluation import trajectory_length_m
from skymission.geo import GeoPoint, GeoReference, PixelPoint, pixel_to_geo
from skymission.mission import (
    ActionKind,
    EmptyMissionError,
    FRAME_GLOBAL,
    MissionItem,
    MissionPlan,
    PlanValidationError,
    SequenceError,
    WaypointFormatError,
    build_survey_plan,
    extract_trajectory,
    make_home,
    parse_wpl,
    serialize_wpl,
    validate_flight_shape,
)

from conftest import random_valid_plan, sample_ref  # noqa: F401

HOME = GeoPoint(40.0, -100.0)
ZERO = (0.0, 0.0, 0.0, 0.0)


def targets(n: int) -> list[GeoPoint]:
    return [GeoPoint(39.995 - 0.0002 * k, -99.995 + 0.0004 * k) for k in range(n)]


class TestMakeHome:
    def test_ten_percent_rule_square_image(self, sample_ref):
        assert make_home(sample_ref) == pixel_to_geo(PixelPoint(100.0, 100.0), sample_ref)

    def test_interpolated_value(self, sample_ref):
        home = make_home(sample_ref)
        assert home.lat == pytest.approx(39.9990, abs=1e-9)
        assert home.lon == pytest.approx(-99.99870, abs=1e-9)

    def test_small_image(self):
        ref = GeoReference(GeoPoint(40.0, -100.0), GeoPoint(39.99, -99.987), 10, 10)
        assert make_home(ref) == pixel_to_geo(PixelPoint(1.0, 1.0), ref)


class TestBuildSurveyPlan:
    def test_shape_for_five_targets(self):
        plan = build_survey_plan(targets(5), HOME, 100.0)
        assert len(plan.items) == 9
        kinds = [it.command for it in plan.items]
        assert kinds[0] is ActionKind.HOME
        assert kinds[1] is ActionKind.TAKEOFF
        assert kinds[2:7] == [ActionKind.WAYPOINT] * 5
        assert kinds[7] is ActionKind.RETURN_TO_LAUNCH
        assert kinds[8] is ActionKind.LAND

    def test_single_target_is_five_items(self):
        assert len(build_survey_plan(targets(1), HOME, 100.0).items) == 5

    def test_altitude_propagates_to_every_waypoint(self):
        plan = build_survey_plan(targets(4), HOME, 100.0)
        assert all(w.altitude == 100.0 for w in plan.waypoints())
        assert plan.items[1].altitude == 100.0  # takeoff climbs to mission altitude

    def test_empty_targets_rejected(self):
        with pytest.raises(EmptyMissionError):
            build_survey_plan([], HOME, 100.0)

    def test_nonpositive_altitude_rejected(self):
        with pytest.raises(ValueError):
            build_survey_plan(targets(1), HOME, 0.0)

    def test_output_passes_validator(self):
        rng = random.Random(1)
        for _ in range(25):
            plan = build_survey_plan(targets(rng.randint(1, 10)), HOME, rng.uniform(1, 200))
            validate_flight_shape(plan)  # must not raise


class TestPlanInvariants:
    def test_seq_must_be_contiguous(self):
        items = (
            MissionItem(0, True, 0, ActionKind.HOME, ZERO, HOME, 0.0),
            MissionItem(2, False, 3, ActionKind.LAND, ZERO, HOME, 0.0),
        )
        with pytest.raises(SequenceError):
            MissionPlan(items, HOME)

    def test_only_first_item_current(self):
        items = (
            MissionItem(0, True, 0, ActionKind.HOME, ZERO, HOME, 0.0),
            MissionItem(1, True, 3, ActionKind.LAND, ZERO, HOME, 0.0),
        )
        with pytest.raises(PlanValidationError):
            MissionPlan(items, HOME)

    def test_item_zero_must_be_home_at_home(self):
        items = (MissionItem(0, True, 0, ActionKind.HOME, ZERO, HOME, 0.0),)
        with pytest.raises(PlanValidationError):
            MissionPlan(items, GeoPoint(41.0, -100.0))

    def test_negative_altitude_rejected(self):
        with pytest.raises(PlanValidationError):
            MissionItem(1, False, 3, ActionKind.WAYPOINT, ZERO, HOME, -5.0)

    def test_flight_shape_requires_takeoff_before_waypoints(self):
        items = (
            MissionItem(0, True, 0, ActionKind.HOME, ZERO, HOME, 0.0),
            MissionItem(1, False, 3, ActionKind.WAYPOINT, ZERO, targets(1)[0], 100.0),
            MissionItem(2, False, 3, ActionKind.LAND, ZERO, HOME, 0.0),
        )
        with pytest.raises(PlanValidationError, match="TAKEOFF"):
            validate_flight_shape(MissionPlan(items, HOME))

    def test_flight_shape_requires_land_last(self):
        items = (
            MissionItem(0, True, 0, ActionKind.HOME, ZERO, HOME, 0.0),
            MissionItem(1, False, 3, ActionKind.TAKEOFF, ZERO, HOME, 100.0),
            MissionItem(2, False, 3, ActionKind.WAYPOINT, ZERO, targets(1)[0], 100.0),
        )
        with pytest.raises(PlanValidationError, match="LAND"):
            validate_flight_shape(MissionPlan(items, HOME))


class TestSerialize:
    def test_home_only_plan_exact_bytes(self):
        plan = MissionPlan(
            (MissionItem(0, True, FRAME_GLOBAL, ActionKind.HOME, ZERO, HOME, 0.0),), HOME
        )
        expected = (
            "QGC WPL 110\n"
            "0\t1\t0\t16\t0.000000\t0.000000\t0.000000\t0.000000"
            "\t40.00000000\t-100.00000000\t0.000000\t1\n"
        )
        assert serialize_wpl(plan) == expected

    def test_byte_deterministic(self):
        plan = build_survey_plan(targets(3), HOME, 100.0)
        assert serialize_wpl(plan) == serialize_wpl(plan)

    def test_roundtrip_field_exact_and_byte_exact(self):
        rng = random.Random(99)
        for _ in range(200):
            plan = random_valid_plan(rng)
            text = serialize_wpl(plan)
            parsed = parse_wpl(text)
            assert parsed == plan
            assert serialize_wpl(parsed) == text


class TestParse:
    def test_wrong_version_rejected(self):
        with pytest.raises(WaypointFormatError, match="120"):
            parse_wpl("QGC WPL 120\n0\t1\t0\t16\t0\t0\t0\t0\t40.0\t-100.0\t0\t1\n")

    def test_missing_header_rejected(self):
        with pytest.raises(WaypointFormatError, match="line 1"):
            parse_wpl("0\t1\t0\t16\t0\t0\t0\t0\t40.0\t-100.0\t0\t1\n")

    def test_nine_line_file(self):
        text = serialize_wpl(build_survey_plan(targets(5), HOME, 100.0))
        assert len(text.strip().splitlines()) == 10  # header + 9 items
        plan = parse_wpl(text)
        assert len(plan.items) == 9
        assert plan.home == HOME

    def test_wrong_column_count_names_line(self):
        text = "QGC WPL 110\n0\t1\t0\t16\t0\t0\t0\t0\t40.0\t-100.0\t0\n"
        with pytest.raises(WaypointFormatError, match="line 2"):
            parse_wpl(text)

    def test_sequence_gap_names_missing_seq(self):
        lines = [
            "QGC WPL 110",
            "0\t1\t0\t16\t0\t0\t0\t0\t40.0\t-100.0\t0\t1",
            "1\t0\t3\t16\t0\t0\t0\t0\t40.0\t-100.0\t100\t1",
            "3\t0\t3\t16\t0\t0\t0\t0\t40.0\t-100.0\t100\t1",
        ]
        with pytest.raises(SequenceError, match="2"):
            parse_wpl("\n".join(lines) + "\n")

    def test_unknown_code_rejected_by_default(self):
        lines = [
            "QGC WPL 110",
            "0\t1\t0\t16\t0\t0\t0\t0\t40.0\t-100.0\t0\t1",
            "1\t0\t3\t177\t0\t0\t0\t0\t40.0\t-100.0\t100\t1",
        ]
        text = "\n".join(lines) + "\n"
        with pytest.raises(WaypointFormatError, match="177"):
            parse_wpl(text)

    def test_lenient_keeps_opaque_code(self):
        lines = [
            "QGC WPL 110",
            "0\t1\t0\t16\t0\t0\t0\t0\t40.0\t-100.0\t0\t1",
            "1\t0\t3\t177\t0\t0\t0\t0\t40.0\t-100.0\t100\t1",
        ]
        text = "\n".join(lines) + "\n"
        plan = parse_wpl(text, lenient=True)
        item = plan.items[1]
        assert item.command is ActionKind.WAYPOINT
        assert item.opaque_code == 177
        assert "\t177\t" in serialize_wpl(plan)

    def test_unparseable_number_names_line(self):
        lines = [
            "QGC WPL 110",
            "0\t1\t0\t16\t0\t0\t0\t0\t40.0\t-100.0\t0\t1",
            "1\t0\t3\t16\t0\t0\t0\t0\tnorth\t-100.0\t100\t1",
        ]
        with pytest.raises(WaypointFormatError, match="line 3"):
            parse_wpl("\n".join(lines) + "\n")

    def test_accepts_waypoint_only_human_plan(self):
        lines = [
            "QGC WPL 110",
            "0\t1\t0\t16\t0\t0\t0\t0\t40.0\t-100.0\t0\t1",
            "1\t0\t3\t16\t0\t0\t0\t0\t39.999\t-99.999\t0\t1",
            "2\t0\t3\t16\t0\t0\t0\t0\t39.998\t-99.998\t0\t1",
        ]
        plan = parse_wpl("\n".join(lines) + "\n")
        assert len(plan.waypoints()) == 2


class TestExtractTrajectory:
    def test_survey_plan_collapses_home_takeoff(self):
        plan = build_survey_plan(targets(3), HOME, 100.0)
        t = extract_trajectory(plan)
        # home+takeoff collapse to one point, then 3 waypoints, then the
        # return-to-launch leg back home
        assert len(t) == 5
        assert t.points[0] == HOME
        assert t.points[-1] == HOME

    def test_home_only_plan(self):
        plan = MissionPlan(
            (MissionItem(0, True, FRAME_GLOBAL, ActionKind.HOME, ZERO, HOME, 0.0),), HOME
        )
        t = extract_trajectory(plan)
        assert t.points == (HOME,)

    def test_no_consecutive_duplicates(self):
        rng = random.Random(7)
        for _ in range(50):
            t = extract_trajectory(random_valid_plan(rng))
            for a, b in zip(t.points, t.points[1:]):
                assert a != b

    def test_square_path_length(self):
        # 100 m sides around the home point; legs measured by haversine
        side_deg_lat = 100.0 / 111_194.92664455874
        import math

        side_deg_lon = side_deg_lat / math.cos(math.radians(40.0))
        corners = [
            HOME,
            GeoPoint(HOME.lat, HOME.lon + side_deg_lon),
            GeoPoint(HOME.lat - side_deg_lat, HOME.lon + side_deg_lon),
            GeoPoint(HOME.lat - side_deg_lat, HOME.lon),
        ]
        plan = build_survey_plan(corners[1:], HOME, 50.0)
        length = trajectory_length_m(extract_trajectory(plan))
        assert length == pytest.approx(400.0, abs=0.5)
