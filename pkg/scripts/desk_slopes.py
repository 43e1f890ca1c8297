"""Model-difference slopes on the five-sphere desk scene.

Runs simplified vs Born and GFL vs simplified over the epsilon sweep of
``configs/desk_slopes.toml`` and writes errors.csv, slopes.csv and
convergence.svg.  Expected slopes: about 2 for simplified vs Born and about 3
for GFL vs simplified.
"""

import argparse
import logging
from pathlib import Path

from smallscat.harness.config import load_config
from smallscat.harness.experiments import run_convergence, slope_summary

ROOT = Path(__file__).resolve().parents[1]


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--config", default=ROOT / "configs" / "desk_slopes.toml")
    p.add_argument("--out", default=None)
    p.add_argument("--threads", type=int, default=None)
    args = p.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")
    config = load_config(args.config).with_overrides(threads=args.threads)
    res = run_convergence(config, out=args.out,
                          comparisons=[("simplified", "born"), ("gfl", "simplified")])
    for eps, tag, err in res.rows():
        print(f"epsilon={eps:g} {tag}: {err:.6e}")
    print("slopes:", slope_summary(res.slopes))


if __name__ == "__main__":
    main()
