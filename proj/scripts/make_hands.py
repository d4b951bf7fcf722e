#!/usr/bin/env python3
"""Generates the bundled hand descriptions (assets/hands/*.json).

Units are meters and radians throughout. Finger link frames keep the palm
orientation (no rpy), so each finger's hinge axis is simply the tangent
direction written in the link frame; fingers extend along +z and negative
joint angles curl them toward the palm axis.
"""

import json
import math
import os

CAPSULE_RADIUS = 0.006


def ring(height, radius, count, phase=0.0):
    pts = []
    for s in range(count):
        a = phase + 2.0 * math.pi * s / count
        pts.append([radius * math.cos(a), radius * math.sin(a), height])
    return pts


def finger_link_points(length, tip=False):
    pts = []
    for frac in (0.30, 0.65, 0.95):
        pts += ring(frac * length, CAPSULE_RADIUS, 4)
    if tip:
        pts += ring(length + 0.6 * CAPSULE_RADIUS, 0.8 * CAPSULE_RADIUS, 4,
                    phase=math.pi / 4.0)
        pts.append([0.0, 0.0, length + CAPSULE_RADIUS])
    return [[round(c, 6) for c in p] for p in pts]


def finger_links(name, angle_deg, mount_radius, segments, limits):
    """One finger: `segments` capsule links chained along +z."""
    theta = math.radians(angle_deg)
    tangent = [round(-math.sin(theta), 9), round(math.cos(theta), 9), 0.0]
    mount = [round(mount_radius * math.cos(theta), 9),
             round(mount_radius * math.sin(theta), 9), 0.0]
    links = []
    for i, (length, (lo, hi)) in enumerate(zip(segments, limits)):
        is_tip = i == len(segments) - 1
        links.append({
            "name": f"{name}_l{i}",
            "parent": f"{name}_l{i-1}" if i > 0 else "palm",
            "origin": {"xyz": mount if i == 0 else [0.0, 0.0, segments[i - 1]]},
            "joint": {"axis": tangent, "lower": lo, "upper": hi, "open_at": "upper"},
            "surface_points": finger_link_points(length, tip=is_tip),
            "primitives": [{
                "type": "capsule",
                "a": [0.0, 0.0, 0.0],
                "b": [0.0, 0.0, length],
                "radius": CAPSULE_RADIUS,
            }],
        })
    return links


def palm_link(half_x, half_y, grid_n, grid_half):
    points = []
    for i in range(grid_n):
        for j in range(grid_n):
            x = -grid_half + 2.0 * grid_half * i / (grid_n - 1)
            y = -grid_half + 2.0 * grid_half * j / (grid_n - 1)
            points.append([round(x, 6), round(y, 6), 0.0])
    return {
        "name": "palm",
        "parent": -1,
        "surface_points": points,
        "primitives": [{
            "type": "box",
            "center": [0.0, 0.0, -0.006],
            "half_extents": [half_x, half_y, 0.006],
        }],
    }


def tripod():
    links = [palm_link(0.044, 0.044, 4, 0.028)]
    for finger, angle in (("f0", 90.0), ("f1", 210.0), ("f2", 330.0)):
        links += finger_links(
            finger, angle, mount_radius=0.040,
            segments=(0.024, 0.022, 0.020),
            limits=((-1.0, 0.5), (-0.9, 0.5), (-0.9, 0.5)))
    return {
        "name": "tripod",
        "links": links,
        "palm": {"link": "palm", "center": [0.0, 0.0, 0.0], "normal": [0.0, 0.0, 1.0]},
    }


def pinch():
    links = [palm_link(0.040, 0.020, 3, 0.016)]
    for finger, angle in (("f0", 0.0), ("f1", 180.0)):
        links += finger_links(
            finger, angle, mount_radius=0.035,
            segments=(0.026, 0.022),
            limits=((-1.1, 0.5), (-1.0, 0.5)))
    return {
        "name": "pinch",
        "links": links,
        "palm": {"link": "palm", "center": [0.0, 0.0, 0.0], "normal": [0.0, 0.0, 1.0]},
    }


def main():
    out_dir = os.path.join(os.path.dirname(__file__), "..", "assets", "hands")
    os.makedirs(out_dir, exist_ok=True)
    for model in (tripod(), pinch()):
        path = os.path.join(out_dir, model["name"] + ".json")
        with open(path, "w") as f:
            json.dump(model, f, indent=1)
            f.write("\n")
        n_points = sum(len(l.get("surface_points", [])) for l in model["links"])
        n_joints = sum(1 for l in model["links"] if "joint" in l)
        print(f"{path}: {len(model['links'])} links, {n_joints} joints, "
              f"{n_points} surface points")


if __name__ == "__main__":
    main()
