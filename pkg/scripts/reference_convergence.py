"""Convergence of the three models against the reference BEM on two spheres.

Uses ``configs/desk_reference.toml``: every model is compared with the full
Galerkin BEM on the same meshes, and the reference itself is recomputed on
refined meshes at the largest epsilon to report the mesh error floor.
"""

import argparse
import logging
from pathlib import Path

from smallscat.harness.config import load_config
from smallscat.harness.experiments import run_convergence, slope_summary

ROOT = Path(__file__).resolve().parents[1]


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--config", default=ROOT / "configs" / "desk_reference.toml")
    p.add_argument("--out", default=None)
    p.add_argument("--threads", type=int, default=None)
    args = p.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")
    config = load_config(args.config).with_overrides(threads=args.threads)
    res = run_convergence(config, out=args.out)
    for eps, tag, err in res.rows():
        print(f"epsilon={eps:g} {tag}: {err:.6e}")
    print("slopes:", slope_summary(res.slopes))
    if res.reference_floor is not None:
        print(f"reference mesh floor: {res.reference_floor:.3e}")


if __name__ == "__main__":
    main()
