"""Georeferencing math for north-up satellite tiles.

A tile is described by the geographic coordinates of its top-left and
bottom-right corners plus its pixel dimensions; pixel positions map to
latitude/longitude by bilinear interpolation between the corners.
Distances use a spherical Earth (mean radius), which is accurate to well
under 0.5% at the sub-kilometre scale of survey imagery.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

EARTH_RADIUS_M = 6_371_000.0

_DEG_TO_RAD = math.pi / 180.0


class BoundsError(ValueError):
    """A coordinate lies outside the image or its geographic bounding box."""


class ProjectionDomainError(ValueError):
    """Points are too far apart for the local planar approximation."""


def _require_finite(name: str, value: float) -> None:
    if not isinstance(value, (int, float)) or not math.isfinite(value):
        raise ValueError(f"{name} must be a finite number, got {value!r}")


@dataclass(frozen=True)
class GeoPoint:
    """WGS-84 coordinate in decimal degrees."""

    lat: float
    lon: float

    def __post_init__(self) -> None:
        _require_finite("lat", self.lat)
        _require_finite("lon", self.lon)
        if not -90.0 <= self.lat <= 90.0:
            raise ValueError(f"lat {self.lat} outside [-90, 90]")
        if not -180.0 <= self.lon <= 180.0:
            raise ValueError(f"lon {self.lon} outside [-180, 180]")


@dataclass(frozen=True)
class PixelPoint:
    """Image coordinate: x is the column (rightward), y the row (downward)."""

    x: float
    y: float

    def __post_init__(self) -> None:
        _require_finite("x", self.x)
        _require_finite("y", self.y)
        if self.x < 0 or self.y < 0:
            raise ValueError(f"pixel coordinates must be >= 0, got ({self.x}, {self.y})")


@dataclass(frozen=True)
class GeoReference:
    """Binds an image's pixel grid to geographic space via its corner coordinates.

    North-up is required: the top-left corner must be strictly north of the
    bottom-right corner. Rotated or oblique imagery is not supported.
    """

    top_left: GeoPoint
    bottom_right: GeoPoint
    width_px: int
    height_px: int

    def __post_init__(self) -> None:
        if not isinstance(self.width_px, int) or self.width_px <= 0:
            raise ValueError(f"width_px must be a positive integer, got {self.width_px!r}")
        if not isinstance(self.height_px, int) or self.height_px <= 0:
            raise ValueError(f"height_px must be a positive integer, got {self.height_px!r}")
        if not self.top_left.lat > self.bottom_right.lat:
            raise ValueError("reference is not north-up: top_left.lat must exceed bottom_right.lat")
        if self.top_left.lon == self.bottom_right.lon:
            raise ValueError("degenerate reference: corner longitudes are equal")

    @property
    def lat_span(self) -> float:
        return self.bottom_right.lat - self.top_left.lat  # negative (southward)

    @property
    def lon_span(self) -> float:
        return self.bottom_right.lon - self.top_left.lon

    @classmethod
    def from_dict(cls, data: dict) -> "GeoReference":
        try:
            return cls(
                top_left=GeoPoint(float(data["top_left"]["lat"]), float(data["top_left"]["lon"])),
                bottom_right=GeoPoint(
                    float(data["bottom_right"]["lat"]), float(data["bottom_right"]["lon"])
                ),
                width_px=int(data["width_px"]),
                height_px=int(data["height_px"]),
            )
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed georeference metadata: {exc}") from exc

    @classmethod
    def from_json(cls, text: str) -> "GeoReference":
        return cls.from_dict(json.loads(text))

    @classmethod
    def load(cls, path: str | Path) -> "GeoReference":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))

    def to_dict(self) -> dict:
        return {
            "top_left": {"lat": self.top_left.lat, "lon": self.top_left.lon},
            "bottom_right": {"lat": self.bottom_right.lat, "lon": self.bottom_right.lon},
            "width_px": self.width_px,
            "height_px": self.height_px,
        }


def pixel_to_geo(p: PixelPoint, ref: GeoReference) -> GeoPoint:
    """Map an in-bounds pixel to latitude/longitude.

    Bilinear interpolation between the reference corners: (0, 0) maps to the
    top-left corner, (width_px, height_px) to the bottom-right corner.
    """
    if not 0.0 <= p.x <= ref.width_px:
        raise BoundsError(f"pixel x={p.x} outside [0, {ref.width_px}]")
    if not 0.0 <= p.y <= ref.height_px:
        raise BoundsError(f"pixel y={p.y} outside [0, {ref.height_px}]")
    lat = ref.top_left.lat + (p.y / ref.height_px) * ref.lat_span
    lon = ref.top_left.lon + (p.x / ref.width_px) * ref.lon_span
    return GeoPoint(lat, lon)


def geo_to_pixel(g: GeoPoint, ref: GeoReference, tol_deg: float = 1e-9) -> PixelPoint:
    """Exact algebraic inverse of :func:`pixel_to_geo`.

    The point must lie inside the reference bounding box (within ``tol_deg``
    of the edges to absorb float noise).
    """
    lat_lo = min(ref.top_left.lat, ref.bottom_right.lat)
    lat_hi = max(ref.top_left.lat, ref.bottom_right.lat)
    lon_lo = min(ref.top_left.lon, ref.bottom_right.lon)
    lon_hi = max(ref.top_left.lon, ref.bottom_right.lon)
    if not lat_lo - tol_deg <= g.lat <= lat_hi + tol_deg:
        raise BoundsError(f"lat={g.lat} outside [{lat_lo}, {lat_hi}]")
    if not lon_lo - tol_deg <= g.lon <= lon_hi + tol_deg:
        raise BoundsError(f"lon={g.lon} outside [{lon_lo}, {lon_hi}]")
    x = (g.lon - ref.top_left.lon) / ref.lon_span * ref.width_px
    y = (g.lat - ref.top_left.lat) / ref.lat_span * ref.height_px
    # tolerance may admit points a hair outside; clamp back onto the grid
    x = min(max(x, 0.0), float(ref.width_px))
    y = min(max(y, 0.0), float(ref.height_px))
    return PixelPoint(x, y)


def haversine_m(a: GeoPoint, b: GeoPoint) -> float:
    """Great-circle distance in metres on a sphere of mean Earth radius."""
    dlat = math.radians(b.lat - a.lat)
    dlon = math.radians(b.lon - a.lon)
    s = (
        math.sin(dlat / 2.0) ** 2
        + math.cos(math.radians(a.lat)) * math.cos(math.radians(b.lat)) * math.sin(dlon / 2.0) ** 2
    )
    return 2.0 * EARTH_RADIUS_M * math.asin(min(1.0, math.sqrt(s)))


def local_xy_m(g: GeoPoint, origin: GeoPoint) -> tuple[float, float]:
    """Project a nearby point onto a local tangent plane anchored at ``origin``.

    Equirectangular approximation: returns (metres east, metres north).
    Valid only for separations under one degree in each axis; the error
    against the great-circle distance stays below 0.1% for points within
    a couple of kilometres.
    """
    if abs(g.lat - origin.lat) >= 1.0 or abs(g.lon - origin.lon) >= 1.0:
        raise ProjectionDomainError(
            f"separation too large for planar projection: "
            f"dlat={g.lat - origin.lat}, dlon={g.lon - origin.lon}"
        )
    x = (g.lon - origin.lon) * _DEG_TO_RAD * EARTH_RADIUS_M * math.cos(math.radians(origin.lat))
    y = (g.lat - origin.lat) * _DEG_TO_RAD * EARTH_RADIUS_M
    return x, y
