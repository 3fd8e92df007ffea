#!/usr/bin/env python3
"""Writes the shipped test fixtures under tests/data (deterministic)."""

import argparse
import json
import math
import random
from pathlib import Path

CANVAS = (513, 750)
MAP_SIZE = (54, 79)
EMBED_DIM = 8


def write_pgm(path, width, height, pixel):
    data = bytearray()
    for y in range(height):
        for x in range(width):
            data.append(pixel(x, y))
    path.write_bytes(b"P5\n%d %d\n255\n" % (width, height) + bytes(data))


def rect(x, y, w, h):
    return {"kind": "rect", "x": x, "y": y, "w": w, "h": h}


def make_record(rng, index):
    W, H = CANVAS
    elements = []
    top = rng.randint(20, 80)
    # Headline on an underlay, sometimes wrapped twice.
    ux, uw = rng.randint(20, 60), rng.randint(300, 420)
    uh = rng.randint(90, 140)
    elements.append({"category": "underlay", "shape": rect(ux, top, uw, uh)})
    if index % 4 == 0:
        elements.append({"category": "underlay", "shape": rect(ux + 3, top + 3, uw - 6, uh - 6)})
        elements.append({"category": "text", "shape": rect(ux + 6, top + 6, uw - 12, uh - 12)})
    else:
        elements.append({"category": "text", "shape": rect(ux + 2, top + 2, uw - 4, uh - 4)})
    y = top + uh + rng.randint(30, 80)
    for _ in range(rng.randint(1, 3)):
        h = rng.randint(30, 60)
        elements.append({"category": "text", "shape": rect(rng.randint(20, 120), y, rng.randint(150, 360), h)})
        y += h + rng.randint(10, 40)
    if index % 3 == 0:
        elements.append({"category": "logo", "shape": rect(W - 110, H - 100, 80, 60)})
    if index % 5 == 1:
        elements.append({"category": "textv", "shape": rect(W - 60, 200, 36, 240)})
    if index % 5 == 2:
        elements.append({"category": "textr", "shape": {"kind": "rotated_rect", "x": 60, "y": H - 200,
                                                         "w": 220, "h": 40, "angle_deg": -12}})
    if index % 5 == 3:
        elements.append({"category": "texts", "shape": {"kind": "ellipse", "cx": W / 2, "cy": H - 140,
                                                        "rx": 120, "ry": 60}})
    if index % 5 == 4:
        elements.append({"category": "textc", "shape": {"kind": "path", "start": [60, H - 150],
                                                        "segments": [[160, H - 230, 340, H - 70, 450, H - 150]],
                                                        "closed": False}})
    if index % 7 == 0:
        elements.append({"category": "embellishment", "shape": rect(rng.randint(0, 300), H - 40, 200, 30)})
    return elements


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default=str(Path(__file__).resolve().parent.parent / "tests" / "data"))
    parser.add_argument("--seed", type=int, default=20)
    args = parser.parse_args()
    out = Path(args.out)
    maps = out / "fixture20_maps"
    maps.mkdir(parents=True, exist_ok=True)
    rng = random.Random(args.seed)
    mw, mh = MAP_SIZE
    records = []
    for i in range(20):
        rid = "f%02d" % i
        records.append({"id": rid, "canvas": {"width": CANVAS[0], "height": CANVAS[1]},
                        "elements": make_record(rng, i), "saliency": "fixture20_maps/%s.saliency.pgm" % rid})
        # Intent: one or two free regions in map pixels.
        boxes = []
        for _ in range(rng.randint(1, 2)):
            x0, y0 = rng.randint(2, mw // 2), rng.randint(2, mh // 2)
            boxes.append((x0, y0, x0 + rng.randint(10, mw // 2), y0 + rng.randint(10, mh // 2)))
        write_pgm(maps / (rid + ".intent.pgm"), mw, mh,
                  lambda x, y, b=boxes: 255 if any(x0 <= x < x1 and y0 <= y < y1 for x0, y0, x1, y1 in b) else 0)
        cx, cy, s = rng.uniform(0.3, 0.7) * mw, rng.uniform(0.3, 0.7) * mh, rng.uniform(6, 14)
        write_pgm(maps / (rid + ".saliency.pgm"), mw, mh,
                  lambda x, y, cx=cx, cy=cy, s=s: int(round(255 * math.exp(-((x - cx) ** 2 + (y - cy) ** 2) / (2 * s * s)))))
        fx, fy = rng.uniform(0.1, 0.5), rng.uniform(0.1, 0.5)
        write_pgm(maps / (rid + ".image.pgm"), mw, mh,
                  lambda x, y, fx=fx, fy=fy: int(127 + 120 * math.sin(fx * x) * math.cos(fy * y)))
        values = [round(rng.uniform(-1, 1), 4) for _ in range(EMBED_DIM)]
        (maps / (rid + ".embed.json")).write_text(json.dumps({"dim": EMBED_DIM, "values": values}) + "\n")
    (out / "fixture20.json").write_text(json.dumps({"records": records}, indent=1) + "\n")

    depth3 = {"records": [{"id": "depth3", "canvas": {"width": 500, "height": 400}, "elements": [
        {"category": "underlay", "shape": rect(0, 0, 200, 100)},
        {"category": "underlay", "shape": rect(2, 2, 196, 96)},
        {"category": "text", "shape": rect(4, 4, 192, 92)}]}]}
    (out / "depth3.json").write_text(json.dumps(depth3, indent=1) + "\n")

    # Keyed to the ids of the f01 tree.
    materials = {"text_1": "Summer Sale", "text_2": {"text": "Up to 50% off", "fill": "#c00"},
                 "textv_3": {"text": "NEW", "font_family": "Serif"}}
    (out / "materials.json").write_text(json.dumps(materials, indent=1) + "\n")


if __name__ == "__main__":
    main()
