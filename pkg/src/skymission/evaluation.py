"""Trajectory similarity metrics and benchmark report aggregation.

Three alignment strategies compare a generated trajectory against a ground
truth one, each reporting a root-mean-square error in metres:

* ``sequential`` pairs points index by index (truncating to the shorter
  trajectory), so it penalises ordering differences heavily.
* ``dtw`` finds the minimum-cost monotone warping between the sequences,
  absorbing repetitions and local re-timing.
* ``knn`` pairs every generated point with its nearest truth point,
  ignoring order entirely.

All point-to-point distances are planar, computed on a local tangent plane
anchored at the first ground-truth point; great-circle distances are used
only for trajectory lengths.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geo import GeoPoint, haversine_m, local_xy_m

METHODS = ("sequential", "dtw", "knn")


@dataclass(frozen=True)
class Trajectory:
    """Ordered sequence of geographic points with no consecutive duplicates."""

    points: tuple[GeoPoint, ...]

    def __post_init__(self) -> None:
        if len(self.points) < 1:
            raise ValueError("trajectory must contain at least one point")
        for prev, cur in zip(self.points, self.points[1:]):
            if prev == cur:
                raise ValueError(f"consecutive duplicate point {cur}")

    def __len__(self) -> int:
        return len(self.points)

    @classmethod
    def from_points(cls, points: list[GeoPoint] | tuple[GeoPoint, ...]) -> "Trajectory":
        """Build a trajectory, collapsing runs of identical consecutive points."""
        collapsed: list[GeoPoint] = []
        for p in points:
            if not collapsed or collapsed[-1] != p:
                collapsed.append(p)
        return cls(tuple(collapsed))


@dataclass(frozen=True)
class MetricResult:
    """Outcome of one alignment method.

    ``details`` holds the alignment path as (generated index, truth index)
    pairs where the method produces one; ``length_mismatch`` is set by the
    sequential method when the trajectories had to be truncated.
    """

    method: str
    rmse_m: float
    matched_pairs: int
    details: tuple[tuple[int, int], ...] | None = None
    length_mismatch: bool = False

    def __post_init__(self) -> None:
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if not math.isfinite(self.rmse_m) or self.rmse_m < 0:
            raise ValueError(f"rmse_m must be finite and >= 0, got {self.rmse_m}")
        if self.matched_pairs < 1:
            raise ValueError("matched_pairs must be >= 1")


def _planar(t: Trajectory, origin: GeoPoint) -> list[tuple[float, float]]:
    return [local_xy_m(p, origin) for p in t.points]


def trajectory_length_m(t: Trajectory) -> float:
    """Great-circle length of the trajectory; 0 for a single point."""
    return sum(haversine_m(a, b) for a, b in zip(t.points, t.points[1:]))


def sequential_rmse(gen: Trajectory, truth: Trajectory) -> MetricResult:
    """Index-by-index RMSE over the first min(|gen|, |truth|) points."""
    origin = truth.points[0]
    g = _planar(gen, origin)
    h = _planar(truth, origin)
    n = min(len(g), len(h))
    total = 0.0
    for i in range(n):
        dx = g[i][0] - h[i][0]
        dy = g[i][1] - h[i][1]
        total += dx * dx + dy * dy
    return MetricResult(
        method="sequential",
        rmse_m=math.sqrt(total / n),
        matched_pairs=n,
        details=tuple((i, i) for i in range(n)),
        length_mismatch=len(gen) != len(truth),
    )


def dtw_rmse(gen: Trajectory, truth: Trajectory) -> MetricResult:
    """RMSE along the optimal dynamic-time-warping path.

    Dynamic programming over the full cost matrix with squared planar
    distance as step cost and moves (1,0), (0,1), (1,1). The accumulated
    optimum C* is normalised by the warping path length L, so the result
    is sqrt(C*/L) and reduces to the sequential RMSE on the diagonal path.
    """
    origin = truth.points[0]
    a = _planar(gen, origin)
    b = _planar(truth, origin)
    n, m = len(a), len(b)

    cost = [[0.0] * m for _ in range(n)]
    for i in range(n):
        ax, ay = a[i]
        row = cost[i]
        for j in range(m):
            dx = ax - b[j][0]
            dy = ay - b[j][1]
            row[j] = dx * dx + dy * dy

    acc = [[0.0] * m for _ in range(n)]
    acc[0][0] = cost[0][0]
    for i in range(1, n):
        acc[i][0] = acc[i - 1][0] + cost[i][0]
    for j in range(1, m):
        acc[0][j] = acc[0][j - 1] + cost[0][j]
    for i in range(1, n):
        for j in range(1, m):
            acc[i][j] = cost[i][j] + min(acc[i - 1][j - 1], acc[i - 1][j], acc[i][j - 1])

    # backtrack, preferring diagonal moves so the path is deterministic
    path = [(n - 1, m - 1)]
    i, j = n - 1, m - 1
    while (i, j) != (0, 0):
        if i == 0:
            j -= 1
        elif j == 0:
            i -= 1
        else:
            diag, up, left = acc[i - 1][j - 1], acc[i - 1][j], acc[i][j - 1]
            if diag <= up and diag <= left:
                i, j = i - 1, j - 1
            elif up <= left:
                i -= 1
            else:
                j -= 1
        path.append((i, j))
    path.reverse()

    total = acc[n - 1][m - 1]
    return MetricResult(
        method="dtw",
        rmse_m=math.sqrt(total / len(path)),
        matched_pairs=len(path),
        details=tuple(path),
    )


def knn_rmse(gen: Trajectory, truth: Trajectory) -> MetricResult:
    """RMSE of each generated point against its nearest truth point.

    Matching is many-to-one and ignores ordering; the denominator is the
    number of generated points.
    """
    origin = truth.points[0]
    g = np.asarray(_planar(gen, origin), dtype=np.float64).reshape(len(gen), 2)
    h = np.asarray(_planar(truth, origin), dtype=np.float64).reshape(len(truth), 2)
    dx = g[:, 0][:, None] - h[:, 0][None, :]
    dy = g[:, 1][:, None] - h[:, 1][None, :]
    d2 = dx * dx + dy * dy
    nearest = d2.min(axis=1)
    total = 0.0
    for v in nearest.tolist():  # sequential sum keeps the result reproducible
        total += v
    return MetricResult(method="knn", rmse_m=math.sqrt(total / len(g)), matched_pairs=len(g))


def evaluate_pair(gen: Trajectory, truth: Trajectory) -> dict[str, MetricResult]:
    """All three metrics for one generated/truth trajectory pair."""
    return {
        "sequential": sequential_rmse(gen, truth),
        "dtw": dtw_rmse(gen, truth),
        "knn": knn_rmse(gen, truth),
    }


def length_delta_pct(generated_total_m: float, truth_total_m: float) -> float:
    """Signed percentage by which the generated total exceeds the truth total."""
    return (generated_total_m - truth_total_m) / truth_total_m * 100.0


@dataclass(frozen=True)
class SampleResult:
    """Per-image evaluation row."""

    name: str
    generated_length_m: float
    truth_length_m: float
    metrics: dict[str, MetricResult]


@dataclass
class EvalReport:
    """Per-image rows plus mean/median/max aggregates per method."""

    samples: list[SampleResult]
    aggregates: dict[str, dict[str, float]]
    generated_total_m: float
    truth_total_m: float
    delta_pct: float
    failures: dict[str, str] = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return {
            "samples": [
                {
                    "name": s.name,
                    "generated_length_m": s.generated_length_m,
                    "truth_length_m": s.truth_length_m,
                    "rmse_m": {m: s.metrics[m].rmse_m for m in METHODS},
                    "matched_pairs": {m: s.metrics[m].matched_pairs for m in METHODS},
                    "length_mismatch": s.metrics["sequential"].length_mismatch,
                }
                for s in self.samples
            ],
            "aggregates": self.aggregates,
            "totals": {
                "generated_m": self.generated_total_m,
                "truth_m": self.truth_total_m,
                "delta_pct": self.delta_pct,
            },
            "failures": self.failures,
        }

    def to_csv(self) -> str:
        """Aggregate table: one row per statistic, one column per method."""
        lines = ["metric_rmse,knn_m,dtw_m,sequential_m"]
        for stat in ("mean", "median", "max"):
            cells = [f"{self.aggregates[m][stat]:.2f}" for m in ("knn", "dtw", "sequential")]
            lines.append(f"{stat}," + ",".join(cells))
        return "\n".join(lines) + "\n"


def _median(values: list[float]) -> float:
    ordered = sorted(values)
    k = len(ordered)
    mid = k // 2
    if k % 2:
        return ordered[mid]
    return (ordered[mid - 1] + ordered[mid]) / 2.0


def aggregate(samples: list[SampleResult], failures: dict[str, str] | None = None) -> EvalReport:
    """Fold per-image rows into an EvalReport.

    Rows are ordered by sample name so reports are deterministic regardless
    of evaluation order. Mean is the plain sum/count over rows, median the
    midpoint of the two middle values for even counts.
    """
    if not samples:
        raise ValueError("aggregate requires at least one sample result")
    rows = sorted(samples, key=lambda s: s.name)
    aggregates: dict[str, dict[str, float]] = {}
    for method in METHODS:
        values = [s.metrics[method].rmse_m for s in rows]
        aggregates[method] = {
            "mean": sum(values) / len(values),
            "median": _median(values),
            "max": max(values),
        }
    gen_total = sum(s.generated_length_m for s in rows)
    truth_total = sum(s.truth_length_m for s in rows)
    return EvalReport(
        samples=rows,
        aggregates=aggregates,
        generated_total_m=gen_total,
        truth_total_m=truth_total,
        delta_pct=length_delta_pct(gen_total, truth_total),
        failures=dict(failures or {}),
    )
