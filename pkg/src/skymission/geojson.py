"""GeoJSON export of mission plans for map overlays.

Each plan contributes one LineString tracing its flight trajectory plus one
Point per mission item. GeoJSON mandates [longitude, latitude] coordinate
order, the reverse of the mission file's lat-first layout.
"""

from __future__ import annotations

from .mission import MissionPlan, extract_trajectory


def _coords(lat: float, lon: float) -> list[float]:
    return [lon, lat]


def plans_to_feature_collection(named_plans: list[tuple[str, MissionPlan]]) -> dict:
    """Build a FeatureCollection from (source name, plan) pairs."""
    features: list[dict] = []
    for source, plan in named_plans:
        trajectory = extract_trajectory(plan)
        features.append(
            {
                "type": "Feature",
                "geometry": {
                    "type": "LineString",
                    "coordinates": [_coords(p.lat, p.lon) for p in trajectory.points],
                },
                "properties": {"source": source, "kind": "trajectory"},
            }
        )
        for item in plan.items:
            features.append(
                {
                    "type": "Feature",
                    "geometry": {
                        "type": "Point",
                        "coordinates": _coords(item.position.lat, item.position.lon),
                    },
                    "properties": {
                        "source": source,
                        "seq": item.seq,
                        "command": item.command.name,
                    },
                }
            )
    return {"type": "FeatureCollection", "features": features}
