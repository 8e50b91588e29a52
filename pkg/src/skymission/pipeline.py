"""End-to-end mission generation.

Chains instruction parsing, image grounding, georeferencing and action
generation into one run: the instruction yields goal categories, the
grounding model marks them on the image, pixel marks become geographic
targets, and the targets become an executable survey plan.

Action generation defaults to a deterministic template (takeoff, ordered
waypoints, return to launch, land) so runs are reproducible offline; an
LLM-backed generator can be opted into per request, with its output parsed
and validated before acceptance.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from pathlib import Path

from .geo import GeoPoint, GeoReference, haversine_m, pixel_to_geo
from .mission import (
    ActionKind,
    EmptyMissionError,
    MissionPlan,
    PlanValidationError,
    build_survey_plan,
    make_home,
    parse_wpl,
    validate_flight_shape,
)
from .providers import (
    GoalSet,
    GroundedPoints,
    Instruction,
    NoGoalsError,
    Provider,
    ProviderConfig,
    ProviderError,
    ResponseParseError,
    build_provider,
    extract_goals,
    locate_objects,
)

ACTION_MODES = ("template", "llm")

DEFAULT_VOCABULARY = (
    ActionKind.HOME,
    ActionKind.TAKEOFF,
    ActionKind.WAYPOINT,
    ActionKind.RETURN_TO_LAUNCH,
    ActionKind.LAND,
)

# how closely an externally generated waypoint must match a requested target
_TARGET_MATCH_TOL_DEG = 1e-6


class StageError(RuntimeError):
    """A pipeline stage failed; carries the stage name and the cause."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"{stage} stage failed: {cause}")
        self.stage = stage
        self.cause = cause


class ActionGenerationError(RuntimeError):
    """The action model emitted something that is not a mission file."""

    def __init__(self, message: str, raw: str):
        super().__init__(message)
        self.raw = raw


class RejectedPlanError(RuntimeError):
    """The action model emitted a parseable but invalid plan."""


@dataclass
class MissionRequest:
    """Everything one generation run needs."""

    instruction: Instruction
    image_path: Path
    ref: GeoReference
    altitude_m: float = 100.0
    goal_provider: ProviderConfig = field(default_factory=ProviderConfig)
    grounding_provider: ProviderConfig = field(default_factory=ProviderConfig)
    action_provider: ProviderConfig = field(default_factory=ProviderConfig)
    action_mode: str = "template"

    def __post_init__(self) -> None:
        self.image_path = Path(self.image_path)
        if self.altitude_m <= 0:
            raise ValueError(f"altitude_m must be positive, got {self.altitude_m}")
        if self.action_mode not in ACTION_MODES:
            raise ValueError(f"action_mode must be one of {ACTION_MODES}, got {self.action_mode!r}")


@dataclass
class PipelineTrace:
    """Intermediate products of one run, for audit and export."""

    goals: GoalSet
    grounded: GroundedPoints
    geo_points: tuple[GeoPoint, ...]
    plan: MissionPlan
    durations_s: dict[str, float]

    def to_json_dict(self) -> dict:
        return {
            "goals": list(self.goals.goals),
            "detections": {
                goal: {
                    "pixels": [[p.x, p.y] for p in pts],
                    "rejected_pct": [list(r) for r in self.grounded.rejected.get(goal, [])],
                }
                for goal, pts in self.grounded.by_goal.items()
            },
            "geo_points": [[p.lat, p.lon] for p in self.geo_points],
            "home": [self.plan.home.lat, self.plan.home.lon],
            "plan_items": len(self.plan.items),
            "durations_s": self.durations_s,
        }


def detections_fixture_path(image_path: str | Path) -> Path:
    """Per-image mock fixture convention: `<image-stem>.detections.json`."""
    return Path(image_path).with_suffix(".detections.json")


def order_waypoints(points: list[GeoPoint], home: GeoPoint) -> list[GeoPoint]:
    """Greedy nearest-neighbour tour over great-circle distance, from home.

    Ties go to the point with the lower original index. No optimality is
    claimed; the rule exists to make template plans deterministic.
    """
    if not points:
        raise EmptyMissionError("no waypoints to order")
    remaining = list(enumerate(points))
    ordered: list[GeoPoint] = []
    cursor = home
    while remaining:
        k = min(range(len(remaining)), key=lambda i: (haversine_m(cursor, remaining[i][1]), remaining[i][0]))
        _, cursor = remaining.pop(k)
        ordered.append(cursor)
    return ordered


def _action_prompt(
    geo_points: list[GeoPoint],
    home: GeoPoint,
    altitude_m: float,
    vocabulary: tuple[ActionKind, ...],
) -> str:
    vocab = ", ".join(f"{kind.value}={kind.code}" for kind in vocabulary if kind is not ActionKind.HOME)
    targets = "\n".join(f"{p.lat:.8f} {p.lon:.8f}" for p in geo_points)
    return (
        "You command a quadcopter. Produce a mission as a QGC WPL 110 file.\n"
        "Rules:\n"
        "- first line exactly: QGC WPL 110\n"
        "- one tab-separated line per item: seq current frame command p1 p2 p3 p4 lat lon alt autocontinue\n"
        "- seq starts at 0 and increments by 1; current is 1 only on the first line; autocontinue is 1\n"
        "- item 0 is the home position (frame 0, command 16, altitude 0)\n"
        f"- command codes: {vocab}\n"
        "- take off from home, visit each target exactly once at the given altitude, "
        "then return to launch and land\n"
        "Answer with the file content only.\n"
        f"\nHome: {home.lat:.8f} {home.lon:.8f}\n"
        f"Altitude: {altitude_m} m\n"
        f"Targets (lat lon):\n{targets}\n"
    )


def generate_actions_llm(
    geo_points: list[GeoPoint],
    home: GeoPoint,
    altitude_m: float,
    provider: Provider,
    vocabulary: tuple[ActionKind, ...] = DEFAULT_VOCABULARY,
) -> MissionPlan:
    """Ask a language model to emit the mission file, then parse and vet it."""
    raw = provider.complete_text(_action_prompt(geo_points, home, altitude_m, vocabulary))
    try:
        plan = parse_wpl(raw)
    except ValueError as exc:
        raise ActionGenerationError(f"model did not emit a valid mission file: {exc}", raw) from exc
    try:
        validate_flight_shape(plan)
    except PlanValidationError as exc:
        raise RejectedPlanError(f"generated plan rejected: {exc}") from exc
    _require_targets_covered(plan, geo_points)
    return plan


def _require_targets_covered(plan: MissionPlan, geo_points: list[GeoPoint]) -> None:
    """Every requested target must appear exactly once as a plan waypoint."""
    unmatched = [(w.position.lat, w.position.lon) for w in plan.waypoints()]
    for target in geo_points:
        hit = None
        for i, (lat, lon) in enumerate(unmatched):
            if abs(lat - target.lat) <= _TARGET_MATCH_TOL_DEG and abs(lon - target.lon) <= _TARGET_MATCH_TOL_DEG:
                hit = i
                break
        if hit is None:
            raise RejectedPlanError(
                f"generated plan rejected: target ({target.lat}, {target.lon}) is not visited"
            )
        unmatched.pop(hit)
    if unmatched:
        raise RejectedPlanError(
            f"generated plan rejected: {len(unmatched)} waypoint(s) do not match any target"
        )


def run_pipeline(req: MissionRequest) -> PipelineTrace:
    """Run all stages and return the full trace.

    Provider and response-parse failures are re-raised as
    :class:`StageError` tagged with the failing stage; an instruction or
    image that yields nothing to visit raises
    :class:`~skymission.mission.EmptyMissionError` and no plan exists.
    """
    fixture = detections_fixture_path(req.image_path)
    durations: dict[str, float] = {}

    t0 = time.perf_counter()
    provider = build_provider(req.goal_provider, fixture)
    try:
        goals = extract_goals(req.instruction, provider)
    except (ProviderError, ResponseParseError) as exc:
        raise StageError("goals", exc) from exc
    durations["goals"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    image = req.image_path.read_bytes()
    provider = build_provider(req.grounding_provider, fixture)
    try:
        grounded = locate_objects(goals, image, req.ref, provider)
    except (ProviderError, ResponseParseError) as exc:
        raise StageError("grounding", exc) from exc
    durations["grounding"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    raw_points = [pixel_to_geo(p, req.ref) for _, p in grounded.in_order()]
    if not raw_points:
        raise EmptyMissionError("no objects were detected, nothing to fly to")
    home = make_home(req.ref)
    geo_points = order_waypoints(raw_points, home)
    durations["georeference"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    if req.action_mode == "llm":
        provider = build_provider(req.action_provider, fixture)
        plan = generate_actions_llm(geo_points, home, req.altitude_m, provider)
    else:
        plan = build_survey_plan(geo_points, home, req.altitude_m)
    durations["actions"] = time.perf_counter() - t0

    return PipelineTrace(
        goals=goals,
        grounded=grounded,
        geo_points=tuple(geo_points),
        plan=plan,
        durations_s=durations,
    )
