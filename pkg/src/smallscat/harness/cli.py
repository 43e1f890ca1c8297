"""Command-line interface: ``smallscat density|simulate|converge|oracle``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from ..errors import SmallscatError
from ..laplace_bem import reference_equilibrium
from .config import load_config, load_scene
from .experiments import run_convergence, run_oracle, run_simulation, slope_summary
from .io import write_csv


def _override(config, args):
    kw = {"out": args.out, "threads": args.threads}
    if getattr(args, "model", None):
        kw["models"] = tuple(args.model)
    if args.dt is not None or args.steps is not None:
        cq = config.cq
        if args.steps is not None:
            cq = type(cq)(cq.T, args.steps, cq.symbol, cq.tol, cq.symmetric)
        if args.dt is not None:
            cq = type(cq)(cq.T, int(round(cq.T / args.dt)), cq.symbol, cq.tol, cq.symmetric)
        kw["cq"] = cq
    return config.with_overrides(**kw)


def cmd_density(args):
    scene = load_scene(args.scene)
    rows = []
    for k, obs in enumerate(scene.obstacles):
        data, _ = reference_equilibrium(obs)
        sig = data.sigma
        print(f"obstacle {k}: panels={obs.mesh.n_panels} c={data.capacitance:.10g} "
              f"p=({data.moment[0]:.4g}, {data.moment[1]:.4g}, {data.moment[2]:.4g}) "
              f"sigma in [{sig.min():.6g}, {sig.max():.6g}] residual={data.residual:.2e}")
        rows.append((k, data.capacitance, *data.moment, sig.min(), sig.max()))
    if args.out:
        path = write_csv(Path(args.out) / "density.csv", ["obstacle", "capacitance", "p_x", "p_y", "p_z",
                                                          "sigma_min", "sigma_max"], rows,
                         {"scene": str(args.scene), "mesh_ids": " ".join(o.mesh.mesh_id for o in scene.obstacles)})
        print(f"wrote {path}")
    return 0


def cmd_simulate(args):
    config = _override(load_config(args.config), args)
    series = run_simulation(config)
    for fs in series:
        v = fs.series.values
        print(f"{fs.model} at {list(fs.point)}: max |u| = {np.max(np.abs(v)):.6g}")
    print(f"wrote {len(series)} CSV files to {config.out}")
    return 0


def cmd_converge(args):
    config = _override(load_config(args.config), args)
    result = run_convergence(config)
    for eps, tag, err in result.rows():
        print(f"epsilon={eps:g} {tag}: {err:.6e}")
    print("slopes:", slope_summary(result.slopes))
    if result.reference_floor is not None:
        print(f"reference mesh floor: {result.reference_floor:.3e}")
    return 0


def cmd_oracle(args):
    config = load_config(args.config) if args.config else None
    checks = run_oracle(config, quick=args.quick)
    for c in checks:
        print(c.line())
    return 0 if all(c.passed for c in checks) else 1


def build_parser():
    p = argparse.ArgumentParser(prog="smallscat", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    d = sub.add_parser("density", help="equilibrium densities, capacitances and moments of a scene")
    d.add_argument("scene")
    d.add_argument("--out")
    d.set_defaults(func=cmd_density)

    for name, func, text in (("simulate", cmd_simulate, "scattered field time series"),
                             ("converge", cmd_converge, "epsilon sweep with error slopes")):
        s = sub.add_parser(name, help=text)
        s.add_argument("config")
        s.add_argument("--out")
        s.add_argument("--threads", type=int)
        s.add_argument("--model", nargs="+", choices=["gfl", "simplified", "born", "reference"])
        s.add_argument("--dt", type=float)
        s.add_argument("--steps", type=int, help="number of time intervals")
        s.set_defaults(func=func)

    o = sub.add_parser("oracle", help="independent oracle checks")
    o.add_argument("config", nargs="?")
    o.add_argument("--quick", action="store_true")
    o.set_defaults(func=cmd_oracle)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except SmallscatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
