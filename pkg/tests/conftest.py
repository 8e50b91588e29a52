from __future__ import annotations

import random
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))  # make tests/oracles.py importable

from skymission.evaluation import Trajectory
from skymission.geo import GeoPoint, GeoReference
from skymission.mission import (
    ActionKind,
    FRAME_GLOBAL,
    FRAME_GLOBAL_RELATIVE_ALT,
    MissionItem,
    MissionPlan,
)

DATA_DIR = Path(__file__).parent.parent / "data" / "mini_benchmark"
GOLDEN_DIR = Path(__file__).parent / "golden"


@pytest.fixture
def mini_benchmark_dir() -> Path:
    return DATA_DIR


@pytest.fixture
def golden_dir() -> Path:
    return GOLDEN_DIR


@pytest.fixture
def sample_ref() -> GeoReference:
    return GeoReference(
        top_left=GeoPoint(40.0, -100.0),
        bottom_right=GeoPoint(39.99, -99.987),
        width_px=1000,
        height_px=1000,
    )


def random_geopoint(rng: random.Random, lat0: float = 40.0, lon0: float = -100.0,
                    spread_deg: float = 0.005) -> GeoPoint:
    return GeoPoint(
        lat0 + rng.uniform(-spread_deg, spread_deg),
        lon0 + rng.uniform(-spread_deg, spread_deg),
    )


def random_trajectory(rng: random.Random, max_len: int = 20, lat0: float = 40.0,
                      lon0: float = -100.0) -> Trajectory:
    n = rng.randint(1, max_len)
    return Trajectory.from_points(
        [random_geopoint(rng, lat0, lon0) for _ in range(n)]
    )


def quantized(value: float, decimals: int) -> float:
    return round(value, decimals)


def random_valid_plan(rng: random.Random) -> MissionPlan:
    """Random structurally valid plan with wire-precision coordinates.

    Roughly half are full survey shapes, the rest home+waypoints only
    (the parser must accept human plans without takeoff/land items).
    Coordinates carry at most 8 decimals and other floats at most 6 so
    a serialize/parse roundtrip is field-exact.
    """
    lat0 = quantized(rng.uniform(-60, 60), 4)
    lon0 = quantized(rng.uniform(-170, 170), 4)
    home = GeoPoint(lat0, lon0)
    altitude = quantized(rng.uniform(10, 150), 6)
    zero = (0.0, 0.0, 0.0, 0.0)

    def point() -> GeoPoint:
        return GeoPoint(
            quantized(lat0 + rng.uniform(-0.005, 0.005), 8),
            quantized(lon0 + rng.uniform(-0.005, 0.005), 8),
        )

    items = [MissionItem(0, True, FRAME_GLOBAL, ActionKind.HOME, zero, home, 0.0)]
    survey_shape = rng.random() < 0.5
    if survey_shape:
        items.append(
            MissionItem(1, False, FRAME_GLOBAL_RELATIVE_ALT, ActionKind.TAKEOFF, zero, home, altitude)
        )
    for _ in range(rng.randint(1, 12)):
        params = tuple(quantized(rng.uniform(0, 5), 6) for _ in range(4))
        items.append(
            MissionItem(
                len(items), False, FRAME_GLOBAL_RELATIVE_ALT, ActionKind.WAYPOINT,
                params, point(), altitude,
            )
        )
    if survey_shape:
        items.append(
            MissionItem(
                len(items), False, FRAME_GLOBAL_RELATIVE_ALT,
                ActionKind.RETURN_TO_LAUNCH, zero, home, 0.0,
            )
        )
        items.append(
            MissionItem(len(items), False, FRAME_GLOBAL_RELATIVE_ALT, ActionKind.LAND, zero, home, 0.0)
        )
    return MissionPlan(tuple(items), home)
