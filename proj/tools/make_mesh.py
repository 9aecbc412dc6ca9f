#!/usr/bin/env python3
"""Unstructured triangulations of a rectangle in .node/.ele format.

Interior nodes sit on a jittered equilateral lattice, the boundary is sampled
uniformly, and the nodes are joined by a Delaunay triangulation. The target
size is the largest element diameter.
"""

import argparse
import math
from pathlib import Path

import numpy as np
from scipy.spatial import Delaunay


def boundary_nodes(x0, x1, y0, y1, s):
    nx = max(1, math.ceil((x1 - x0) / s))
    ny = max(1, math.ceil((y1 - y0) / s))
    xs = np.linspace(x0, x1, nx + 1)
    ys = np.linspace(y0, y1, ny + 1)
    pts = [(x, y0) for x in xs] + [(x, y1) for x in xs]
    pts += [(x0, y) for y in ys[1:-1]] + [(x1, y) for y in ys[1:-1]]
    return np.array(pts)


def interior_nodes(x0, x1, y0, y1, s, jitter, rng):
    dy = s * math.sqrt(3) / 2
    pts = []
    row = 0
    y = y0 + dy
    while y < y1 - 0.5 * dy:
        x = x0 + (0.5 * s if row % 2 else s)
        while x < x1 - 0.5 * s:
            pts.append((x, y))
            x += s
        y += dy
        row += 1
    pts = np.array(pts)
    return pts + rng.uniform(-jitter * s, jitter * s, pts.shape)


def build(h, x0, x1, y0, y1, jitter, seed):
    # the lattice spacing is shrunk until every element fits the target diameter
    rng = np.random.default_rng(seed)
    s = h / (1 + 2 * jitter)
    while True:
        pts = np.vstack([boundary_nodes(x0, x1, y0, y1, s),
                         interior_nodes(x0, x1, y0, y1, s, jitter, rng)])
        tri = Delaunay(pts).simplices
        a, b, c = pts[tri[:, 0]], pts[tri[:, 1]], pts[tri[:, 2]]
        diam = np.max([np.linalg.norm(a - b, axis=1), np.linalg.norm(b - c, axis=1),
                       np.linalg.norm(c - a, axis=1)], axis=0)
        area = 0.5 * np.abs((b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) -
                            (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0]))
        if diam.max() <= h and area.min() > 1e-3 * s * s:
            return pts, tri
        s *= 0.98


def write(pts, tri, stem):
    stem = Path(stem)
    stem.parent.mkdir(parents=True, exist_ok=True)
    with open(stem.with_suffix(".node"), "w") as f:
        f.write(f"{len(pts)} 2 0 0\n")
        for i, (x, y) in enumerate(pts, 1):
            f.write(f"{i} {x:.17g} {y:.17g}\n")
    with open(stem.with_suffix(".ele"), "w") as f:
        f.write(f"{len(tri)} 3 0\n")
        for k, t in enumerate(tri, 1):
            f.write(f"{k} {t[0] + 1} {t[1] + 1} {t[2] + 1}\n")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("h", type=float, help="largest element diameter")
    ap.add_argument("out", help="output path without extension")
    ap.add_argument("--box", type=float, nargs=4, default=[-1.0, 1.0, -1.0, 1.0],
                    metavar=("X0", "X1", "Y0", "Y1"))
    ap.add_argument("--jitter", type=float, default=0.12)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()
    pts, tri = build(args.h, *args.box, args.jitter, args.seed)
    write(pts, tri, args.out)
    print(f"{args.out}: {len(pts)} nodes, {len(tri)} triangles")


if __name__ == "__main__":
    main()
