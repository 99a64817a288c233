"""Approximate the quadrant {z = 0, x >= 0, y >= 0} in R^3 at level s = 3.

Each inequality is absorbed in turn: z^2 - x^m = 0 replaces {z = 0, x >= 0}
and then (z^2 - x^m)^2 - y^p = 0 replaces {..., y >= 0}.  The resulting
surface is written as a point mesh for plotting (columns x, y, z).

    python demos/quadrant.py [mesh.csv]
"""

from __future__ import annotations

import csv
import sys
import time

from algapprox import SamplerConfig, make_presentation, run
from algapprox.cli import mesh_points


def main(argv: list[str]) -> None:
    cfg = SamplerConfig()
    quadrant = make_presentation(["x", "y", "z"], ["z"], ["x", "y"], 2)
    started = time.perf_counter()
    result = run(quadrant, 3, cfg).results[0]
    print(f"equation: {result.equations[0].expression_string()}  ({time.perf_counter() - started:.1f} s)")
    for st in result.steps:
        print(f"step {st.index}: tried {st.tried_ms}, chose m = {st.chosen_m}")
    for rep in result.final_report:
        print(f"{rep.direction}: fitted order {rep.fitted_order:.3f}, pass {rep.passed}")
    print("dimension:", result.final_dimension)

    if argv:
        pts = mesh_points(result.output().as_set(), 0.8, cfg.replace(samples_per_radius=300))
        with open(argv[0], "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["x", "y", "z"])
            writer.writerows(pts.tolist())
        print(f"wrote {len(pts)} mesh points to {argv[0]}")


if __name__ == "__main__":
    main(sys.argv[1:])
