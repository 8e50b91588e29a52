#!/usr/bin/env python3
"""Regenerate the bundled mini benchmark under data/mini_benchmark/.

Three synthetic satellite tiles with georeference metadata, detection
fixtures for the mock provider, and hand-authored ground-truth plans
(waypoints offset a little from the buildings, visited in a human-ish
order). Deterministic: rerunning produces identical files.
"""

from __future__ import annotations

import json
import math
import sys
from pathlib import Path

from PIL import Image, ImageDraw

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from skymission.geo import GeoPoint, GeoReference, PixelPoint, pixel_to_geo
from skymission.mission import (
    ActionKind,
    FRAME_GLOBAL,
    FRAME_GLOBAL_RELATIVE_ALT,
    MissionItem,
    MissionPlan,
    build_survey_plan,
    make_home,
    serialize_wpl,
)

OUT = Path(__file__).resolve().parent.parent / "data" / "mini_benchmark"

PROMPT = (
    "Create a flight plan for the quadcopter to fly around each building "
    "at a height of 100 m, return to home, and land at the take-off point.\n"
)

# name -> (size, corner coordinates, building detections in percent,
#          truth visiting order, per-waypoint truth offset in metres,
#          whether the human plan carries takeoff/land items)
SAMPLES = {
    "austin": dict(
        size=(200, 200),
        ref=dict(tl=(30.2800, -97.7450), br=(30.2773, -97.7419)),
        buildings=[(22.0, 18.5), (48.0, 22.0), (71.5, 30.0), (35.0, 62.0), (76.0, 71.0)],
        order=[0, 1, 2, 4, 3],
        offsets_m=[(8.0, -6.0), (-10.0, 5.0), (6.0, 9.0), (-7.0, -8.0), (11.0, 4.0)],
        full_shape=True,
    ),
    "boise": dict(
        size=(240, 180),
        ref=dict(tl=(43.6150, -116.2050), br=(43.6126, -116.2005)),
        buildings=[(15.0, 25.0), (40.0, 40.0), (65.0, 30.0), (80.0, 75.0)],
        order=[2, 1, 0, 3],
        offsets_m=[(5.0, 12.0), (-9.0, -4.0), (10.0, 7.0), (-6.0, 10.0)],
        full_shape=True,
        # the operator flagged an extra structure the fixture does not know about
        extra_pct=[(52.0, 78.0)],
    ),
    "mesa": dict(
        size=(160, 160),
        ref=dict(tl=(33.4152, -111.8315), br=(33.4130, -111.8289)),
        buildings=[(30.0, 35.0), (55.0, 50.0), (75.0, 20.0)],
        order=[0, 2, 1],
        offsets_m=[(-8.0, 6.0), (9.0, -5.0), (4.0, 11.0)],
        full_shape=False,  # waypoint-only plan, no takeoff/land items
    ),
}

DEG = math.pi / 180.0
R = 6_371_000.0


def offset_geo(p: GeoPoint, east_m: float, north_m: float) -> GeoPoint:
    lat = p.lat + north_m / (DEG * R)
    lon = p.lon + east_m / (DEG * R * math.cos(math.radians(p.lat)))
    return GeoPoint(round(lat, 8), round(lon, 8))


def draw_tile(size: tuple[int, int], buildings_px: list[tuple[float, float]]) -> Image.Image:
    img = Image.new("RGB", size, (116, 134, 98))
    draw = ImageDraw.Draw(img)
    w, h = size
    # a road across the tile for texture
    draw.line([(0, int(h * 0.82)), (w, int(h * 0.70))], fill=(92, 92, 92), width=max(3, w // 40))
    for x, y in buildings_px:
        half = max(4, int(min(w, h) * 0.035))
        box = (int(x - half), int(y - half), int(x + half), int(y + half))
        draw.rectangle(box, fill=(168, 152, 128), outline=(70, 60, 50))
    return img


def truth_plan(spec: dict, ref: GeoReference) -> MissionPlan:
    home = make_home(ref)
    home = GeoPoint(round(home.lat, 8), round(home.lon, 8))
    w, h = spec["size"]
    building_geo = [
        pixel_to_geo(PixelPoint(xp / 100.0 * w, yp / 100.0 * h), ref)
        for xp, yp in spec["buildings"]
    ]
    targets = [
        offset_geo(building_geo[i], *spec["offsets_m"][i]) for i in spec["order"]
    ]
    for xp, yp in spec.get("extra_pct", []):
        targets.append(
            GeoPoint(
                round(pixel_to_geo(PixelPoint(xp / 100.0 * w, yp / 100.0 * h), ref).lat, 8),
                round(pixel_to_geo(PixelPoint(xp / 100.0 * w, yp / 100.0 * h), ref).lon, 8),
            )
        )
    if spec["full_shape"]:
        return build_survey_plan(targets, home, 100.0)
    zero = (0.0, 0.0, 0.0, 0.0)
    items = [MissionItem(0, True, FRAME_GLOBAL, ActionKind.HOME, zero, home, 0.0)]
    for t in targets:
        items.append(
            MissionItem(len(items), False, FRAME_GLOBAL_RELATIVE_ALT, ActionKind.WAYPOINT, zero, t, 0.0)
        )
    return MissionPlan(tuple(items), home)


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    (OUT / "prompt.txt").write_text(PROMPT, encoding="utf-8")
    for name, spec in SAMPLES.items():
        w, h = spec["size"]
        ref = GeoReference(
            top_left=GeoPoint(*spec["ref"]["tl"]),
            bottom_right=GeoPoint(*spec["ref"]["br"]),
            width_px=w,
            height_px=h,
        )
        (OUT / f"{name}.meta.json").write_text(
            json.dumps(ref.to_dict(), indent=2) + "\n", encoding="utf-8"
        )
        (OUT / f"{name}.detections.json").write_text(
            json.dumps({"building": [list(b) for b in spec["buildings"]]}, indent=2) + "\n",
            encoding="utf-8",
        )
        buildings_px = [(xp / 100.0 * w, yp / 100.0 * h) for xp, yp in spec["buildings"]]
        draw_tile(spec["size"], buildings_px).save(OUT / f"{name}.png")
        (OUT / f"{name}.truth.waypoints").write_text(
            serialize_wpl(truth_plan(spec, ref)), encoding="utf-8"
        )
        print(f"wrote sample {name} ({len(spec['buildings'])} buildings)")


if __name__ == "__main__":
    main()
