"""Simplified model vs Born approximation for 71 small obstacles on a sphere.

Obstacle centers form a Fibonacci lattice on the sphere of radius 1.5; the
shapes alternate between a few ellipsoids.  A narrow modulated Gaussian pulse
is observed at (-1.5, -1.5, -1.5) and the L-infinity difference of the two
models is fitted against epsilon (expected slope about 2).
"""

import argparse
import logging
from pathlib import Path

import numpy as np

from smallscat.harness.config import config_from_dict
from smallscat.harness.experiments import run_convergence, run_simulation, slope_summary
from smallscat.harness.metrics import fibonacci_sphere_points

SHAPES = ([0.25, 0.25, 0.25], [0.15, 0.2, 0.25], [0.25, 0.12, 0.12], [0.1, 0.25, 0.2])


def build_config(n=71, sphere_radius=1.5, bound=0.26, level=1, epsilons=(0.1, 0.05, 0.025),
                 intervals=2048, out="out/many_particles"):
    centers = fibonacci_sphere_points(n, sphere_radius)
    obstacles = [{"center": list(map(float, c)), "bounding_radius": bound, "generator": "ellipsoid",
                  "semi_axes": SHAPES[k % len(SHAPES)], "level": level} for k, c in enumerate(centers)]
    return config_from_dict({
        "scene": {"epsilon": epsilons[-1], "obstacles": obstacles},
        "incident": {"kind": "modulated_gaussian", "direction": [1.0, -1.0, 1.0],
                     "carrier": 2 * np.pi, "width": 100.0, "delay": 2.0},
        "cq": {"T": 11.0, "intervals": intervals, "symbol": "bdf2", "symmetric": True},
        "experiment": {"models": ["simplified", "born"], "reference": "simplified",
                       "points": [[-1.5, -1.5, -1.5]], "epsilons": list(epsilons), "out": out},
    })


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out", default="out/many_particles")
    p.add_argument("--intervals", type=int, default=2048)
    p.add_argument("--simulate-only", action="store_true", help="only write the fields at the smallest epsilon")
    args = p.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")
    config = build_config(intervals=args.intervals, out=args.out)
    if args.simulate_only:
        for fs in run_simulation(config, Path(args.out)):
            print(f"{fs.model}: max |u| = {np.max(np.abs(fs.series.values)):.4e}")
        return
    res = run_convergence(config, out=args.out)
    for eps, tag, err in res.rows():
        print(f"epsilon={eps:g} simplified-{tag}: {err:.6e}")
    print("slopes:", slope_summary(res.slopes))


if __name__ == "__main__":
    main()
