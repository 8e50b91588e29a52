"""Mission plan data model and `QGC WPL 110` waypoint-file serialization.

The on-disk format is the tab-separated plain-text interchange understood
by Mission Planner, QGroundControl and MAVProxy: a `QGC WPL 110` header
followed by one line per mission item. Command numbers follow MAVLink
common numbering (16 waypoint, 20 return-to-launch, 21 land, 22 takeoff);
the seq-0 line is the home position by convention.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .evaluation import Trajectory
from .geo import GeoPoint, GeoReference, PixelPoint, pixel_to_geo

WPL_HEADER = "QGC WPL 110"


class WaypointFormatError(ValueError):
    """Waypoint file violates the wire grammar."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class SequenceError(ValueError):
    """Mission item sequence numbers are not contiguous from zero."""


class PlanValidationError(ValueError):
    """Mission plan violates a structural or flight-shape invariant."""


class EmptyMissionError(ValueError):
    """No targets to visit, so no mission can be built."""


class ActionKind(Enum):
    """Base action vocabulary. HOME is the pseudo-item stored at seq 0."""

    HOME = "home"
    TAKEOFF = "takeoff"
    WAYPOINT = "waypoint"
    RETURN_TO_LAUNCH = "return_to_launch"
    LAND = "land"

    @property
    def code(self) -> int:
        return _WIRE_CODES[self]


_WIRE_CODES = {
    ActionKind.HOME: 16,  # home lines are written as a plain waypoint entry
    ActionKind.TAKEOFF: 22,
    ActionKind.WAYPOINT: 16,
    ActionKind.RETURN_TO_LAUNCH: 20,
    ActionKind.LAND: 21,
}

_CODE_TO_KIND = {
    16: ActionKind.WAYPOINT,
    20: ActionKind.RETURN_TO_LAUNCH,
    21: ActionKind.LAND,
    22: ActionKind.TAKEOFF,
}

FRAME_GLOBAL = 0
FRAME_GLOBAL_RELATIVE_ALT = 3


@dataclass(frozen=True)
class MissionItem:
    """One line of a mission: a command at a position with four parameters.

    ``opaque_code`` preserves an unrecognised wire command when a file was
    parsed leniently; such items behave like waypoints but re-serialize
    with their original code.
    """

    seq: int
    is_current: bool
    frame: int
    command: ActionKind
    params: tuple[float, float, float, float]
    position: GeoPoint
    altitude: float
    opaque_code: int | None = None

    def __post_init__(self) -> None:
        if self.seq < 0:
            raise ValueError(f"seq must be >= 0, got {self.seq}")
        if self.altitude < 0:
            raise PlanValidationError(f"item {self.seq}: altitude must be >= 0, got {self.altitude}")
        if len(self.params) != 4:
            raise ValueError("params must hold exactly 4 values")

    @property
    def wire_code(self) -> int:
        return self.opaque_code if self.opaque_code is not None else self.command.code


@dataclass(frozen=True)
class MissionPlan:
    """Ordered mission items with the home position of the seq-0 entry.

    Construction enforces the structural invariants every plan must hold
    (contiguous seq, single current flag on the first item, HOME at seq 0
    located at ``home``). The full flight-shape rules for generated plans
    live in :func:`validate_flight_shape`, since parsed human plans may
    legitimately omit takeoff and landing items.
    """

    items: tuple[MissionItem, ...]
    home: GeoPoint

    def __post_init__(self) -> None:
        if not self.items:
            raise PlanValidationError("plan has no items")
        for i, item in enumerate(self.items):
            if item.seq != i:
                raise SequenceError(f"expected seq {i}, found {item.seq}")
        if not self.items[0].is_current:
            raise PlanValidationError("first item must carry the current flag")
        for item in self.items[1:]:
            if item.is_current:
                raise PlanValidationError(f"item {item.seq} must not carry the current flag")
        first = self.items[0]
        if first.command is not ActionKind.HOME:
            raise PlanValidationError("item 0 must be the HOME entry")
        if first.position != self.home:
            raise PlanValidationError("item 0 position differs from the plan home")

    def waypoints(self) -> list[MissionItem]:
        return [it for it in self.items if it.command is ActionKind.WAYPOINT]


def validate_flight_shape(plan: MissionPlan) -> None:
    """Check the flight-shape invariants required of generated plans.

    Raises :class:`PlanValidationError` naming the violated rule: a TAKEOFF
    must precede any WAYPOINT, and the plan must end with
    RETURN_TO_LAUNCH followed by LAND, or with LAND alone.
    """
    seen_takeoff = False
    for item in plan.items:
        if item.command is ActionKind.TAKEOFF:
            seen_takeoff = True
        elif item.command is ActionKind.WAYPOINT and not seen_takeoff:
            raise PlanValidationError(f"WAYPOINT at seq {item.seq} precedes any TAKEOFF")
    if plan.items[-1].command is not ActionKind.LAND:
        raise PlanValidationError("plan must end with LAND")
    for item in plan.items[:-2]:
        if item.command is ActionKind.RETURN_TO_LAUNCH:
            raise PlanValidationError("RETURN_TO_LAUNCH must immediately precede the final LAND")


def make_home(ref: GeoReference) -> GeoPoint:
    """Home position convention: 10% of width and height from the top-left corner."""
    return pixel_to_geo(PixelPoint(0.10 * ref.width_px, 0.10 * ref.height_px), ref)


def build_survey_plan(targets: list[GeoPoint], home: GeoPoint, altitude_m: float) -> MissionPlan:
    """HOME, TAKEOFF, one WAYPOINT per target in order, RETURN_TO_LAUNCH, LAND."""
    if not targets:
        raise EmptyMissionError("no targets to visit")
    if altitude_m <= 0:
        raise ValueError(f"altitude must be positive, got {altitude_m}")
    zero = (0.0, 0.0, 0.0, 0.0)
    items = [
        MissionItem(0, True, FRAME_GLOBAL, ActionKind.HOME, zero, home, 0.0),
        MissionItem(1, False, FRAME_GLOBAL_RELATIVE_ALT, ActionKind.TAKEOFF, zero, home, altitude_m),
    ]
    for target in targets:
        items.append(
            MissionItem(
                len(items), False, FRAME_GLOBAL_RELATIVE_ALT, ActionKind.WAYPOINT, zero, target, altitude_m
            )
        )
    items.append(
        MissionItem(
            len(items), False, FRAME_GLOBAL_RELATIVE_ALT, ActionKind.RETURN_TO_LAUNCH, zero, home, 0.0
        )
    )
    items.append(
        MissionItem(len(items), False, FRAME_GLOBAL_RELATIVE_ALT, ActionKind.LAND, zero, home, 0.0)
    )
    plan = MissionPlan(tuple(items), home)
    validate_flight_shape(plan)
    return plan


def serialize_wpl(plan: MissionPlan) -> str:
    """Render a plan as `QGC WPL 110` text.

    Latitude/longitude are printed with 8 decimal places, every other float
    with 6; autocontinue is always 1. Output is byte-deterministic.
    """
    lines = [WPL_HEADER]
    for item in plan.items:
        p1, p2, p3, p4 = item.params
        lines.append(
            "\t".join(
                (
                    str(item.seq),
                    "1" if item.is_current else "0",
                    str(item.frame),
                    str(item.wire_code),
                    f"{p1:.6f}",
                    f"{p2:.6f}",
                    f"{p3:.6f}",
                    f"{p4:.6f}",
                    f"{item.position.lat:.8f}",
                    f"{item.position.lon:.8f}",
                    f"{item.altitude:.6f}",
                    "1",
                )
            )
        )
    return "\n".join(lines) + "\n"


def parse_wpl(text: str, lenient: bool = False) -> MissionPlan:
    """Parse `QGC WPL 110` text into a MissionPlan.

    Unknown command codes are rejected unless ``lenient`` is set, in which
    case they are kept as opaque waypoint-like items that re-serialize with
    their original code.
    """
    lines = text.splitlines()
    if not lines or lines[0].strip() != WPL_HEADER:
        found = lines[0].strip() if lines else "<empty file>"
        raise WaypointFormatError(1, f"expected header {WPL_HEADER!r}, found {found!r}")

    items: list[MissionItem] = []
    expected_seq = 0
    for line_no, raw in enumerate(lines[1:], start=2):
        if not raw.strip():
            continue
        cols = raw.split("\t")
        if len(cols) != 12:
            raise WaypointFormatError(line_no, f"expected 12 tab-separated columns, found {len(cols)}")
        try:
            seq = int(cols[0])
            is_current = bool(int(cols[1]))
            frame = int(cols[2])
            code = int(cols[3])
            params = tuple(float(c) for c in cols[4:8])
            lat = float(cols[8])
            lon = float(cols[9])
            alt = float(cols[10])
            int(cols[11])  # autocontinue, unused
        except ValueError as exc:
            raise WaypointFormatError(line_no, f"unparseable field: {exc}") from exc
        if seq != expected_seq:
            raise SequenceError(f"non-contiguous sequence: expected seq {expected_seq}, found {seq}")
        expected_seq += 1

        opaque_code = None
        if seq == 0:
            if code != ActionKind.HOME.code:
                raise WaypointFormatError(line_no, f"seq 0 must be the home entry (command 16), found {code}")
            kind = ActionKind.HOME
        elif code in _CODE_TO_KIND:
            kind = _CODE_TO_KIND[code]
        elif lenient:
            kind = ActionKind.WAYPOINT
            opaque_code = code
        else:
            raise WaypointFormatError(line_no, f"unknown command code {code}")

        items.append(
            MissionItem(seq, is_current, frame, kind, params, GeoPoint(lat, lon), alt, opaque_code)
        )

    if not items:
        raise WaypointFormatError(2, "file contains no mission items")
    return MissionPlan(tuple(items), items[0].position)


def extract_trajectory(plan: MissionPlan) -> Trajectory:
    """Geographic path the vehicle flies: position-bearing items in order.

    HOME, TAKEOFF and WAYPOINT items contribute their positions;
    RETURN_TO_LAUNCH contributes the home point (the vehicle flies back);
    LAND adds nothing new. Consecutive duplicates collapse to one point so
    zero-length segments never reach the metrics.
    """
    points: list[GeoPoint] = []
    for item in plan.items:
        if item.command in (ActionKind.HOME, ActionKind.TAKEOFF, ActionKind.WAYPOINT):
            points.append(item.position)
        elif item.command is ActionKind.RETURN_TO_LAUNCH:
            points.append(plan.home)
    return Trajectory.from_points(points)
