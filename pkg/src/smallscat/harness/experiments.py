"""Experiment drivers: time-domain simulation, epsilon sweeps and the oracle report."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from ..cq import CQGrid, TimeSeries, cq_convolve_solve
from ..errors import NumericHealthError, SmallscatError
from ..geometry import Scene
from ..helmholtz_bem import HelmholtzOperator
from ..incident import IncidentField
from ..laplace_bem import scene_equilibria
from ..models import CapacitanceSummary, born_field, make_transfer
from ..quadrature import triangle_rule
from .config import ExperimentConfig
from .io import read_csv, write_csv, write_loglog_svg
from .metrics import SlopeFit, fit_slope, linf_error
from .oracles import run_checks

__all__ = [
    "FieldSeries",
    "ConvergenceResult",
    "compute_fields",
    "run_simulation",
    "run_convergence",
    "run_oracle",
    "read_field_series",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class FieldSeries:
    """Scattered field of one model at one observation point."""

    model: str
    point: tuple
    series: TimeSeries
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        if not np.all(np.isfinite(self.series.values)):
            raise NumericHealthError(f"{self.model} field at {self.point} has non-finite samples")


class _stage:
    """Prefix errors raised inside a block with the experiment stage."""

    def __init__(self, name):
        self.name = name

    def __enter__(self):
        return self

    def __exit__(self, etype, exc, tb):
        if exc is not None and isinstance(exc, SmallscatError) and not str(exc).startswith("["):
            raise type(exc)(f"[{self.name}] {exc}") from exc
        return False


def compute_fields(scene: Scene, incident: IncidentField, grid: CQGrid, models, points, *,
                   quad=None, far_quad=None, laplace_quad=None, born_route="direct",
                   symmetric=False, threads=1, operator: HelmholtzOperator | None = None) -> dict:
    """Scattered fields ``{model: (steps, points)}`` at the grid times.

    Equilibrium densities come from the epsilon = 1 obstacles (cached) and are
    rescaled, so every model sees the same discretization.  ``born_route="cq"``
    runs the Born model through the same CQ solve as the other models, so
    time-discretization errors cancel in model differences.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    scene.check_exterior(pts)
    quad = quad or triangle_rule(3)
    if operator is None and any(m in ("gfl", "reference") for m in models):
        with _stage(f"assembly (epsilon = {scene.epsilon})"):
            operator = HelmholtzOperator(scene, quad, far_quad, laplace_quad)
    with _stage("equilibrium densities"):
        eqdata = operator.equilibria if operator is not None else scene_equilibria(scene, laplace_quad)
        summary = CapacitanceSummary.from_equilibria(eqdata, scene)
    times = grid.times
    out = {}
    for model in models:
        t0 = time.perf_counter()
        with _stage(f"{model} model (epsilon = {scene.epsilon})"):
            if model == "born" and born_route == "direct":
                out[model] = born_field(summary, incident, pts, times)
            else:
                tr = make_transfer(model, scene, eqdata, summary, quad, operator=operator)
                _, fields = cq_convolve_solve(tr, tr.rhs(incident, times), grid, pts,
                                              symmetric=symmetric, threads=threads)
                out[model] = fields.values
        log.info("%s at epsilon %g: %.1fs", model, scene.epsilon, time.perf_counter() - t0)
    return out


def _provenance(config: ExperimentConfig, scene: Scene, grid: CQGrid, **extra) -> dict:
    prov = {
        "config_hash": config.config_hash(),
        "epsilon": repr(scene.epsilon),
        "cq": grid.describe(),
        "mesh_ids": " ".join(o.mesh.mesh_id for o in scene.obstacles),
    }
    prov.update({k: str(v) for k, v in extra.items()})
    return prov


def _fields_for(config: ExperimentConfig, scene: Scene, models, born_route, grid=None):
    quad, far_quad, laplace_quad = config.quadratures()
    return compute_fields(scene, config.incident_field(), grid or config.grid(), models, config.point_array(),
                          quad=quad, far_quad=far_quad, laplace_quad=laplace_quad, born_route=born_route,
                          symmetric=config.cq.symmetric, threads=config.threads)


# --------------------------------------------------------------------------- simulate


def run_simulation(config: ExperimentConfig, out=None) -> list[FieldSeries]:
    """Fields of every configured model at every point; one ``t,value`` CSV per pair."""
    with _stage("configuration"):
        scene = config.scene()
        grid = config.grid()
    fields = _fields_for(config, scene, config.models, config.born_route, grid)
    out_dir = Path(out or config.out)
    result = []
    for model in config.models:
        for j, p in enumerate(config.point_array()):
            prov = _provenance(config, scene, grid, model=model, point=" ".join(repr(float(x)) for x in p))
            fs = FieldSeries(model, tuple(p), TimeSeries(fields[model][:, j].copy(), grid.dt), prov)
            write_csv(out_dir / f"{model}_p{j}.csv", ["t", "value"],
                      zip(grid.times, fs.series.values), prov)
            result.append(fs)
    return result


def read_field_series(path) -> FieldSeries:
    prov, header, cols = read_csv(path)
    if header != ["t", "value"]:
        raise ValueError(f"{path}: expected header t,value, got {header}")
    t = cols["t"]
    dt = t[1] - t[0] if len(t) > 1 else 1.0
    point = tuple(float(x) for x in prov.get("point", "").split())
    return FieldSeries(prov.get("model", ""), point, TimeSeries(cols["value"], dt), prov)


# --------------------------------------------------------------------------- converge


@dataclass(frozen=True, eq=False)
class ConvergenceResult:
    epsilons: tuple
    errors: dict  # tag -> array over epsilons
    slopes: dict  # tag -> SlopeFit
    reference_floor: float | None = None
    fields: dict = field(default_factory=dict)  # epsilon -> {model: array}

    def rows(self):
        for tag, errs in self.errors.items():
            for eps, e in zip(self.epsilons, errs):
                yield eps, tag, e


def _comparisons(config: ExperimentConfig):
    return [(m, config.reference) for m in config.models if m != config.reference]


def _refined(config: ExperimentConfig) -> ExperimentConfig:
    specs = tuple(replace(o, level=o.level + 1) if o.mesh is None else o for o in config.obstacles)
    return replace(config, obstacles=specs)


def run_convergence(config: ExperimentConfig, out=None, comparisons=None, keep_fields=False) -> ConvergenceResult:
    """L-infinity(0, T) errors of each model against ``config.reference`` over ``config.epsilons``.

    ``comparisons`` is a list of ``(model, against)`` pairs; by default every
    model is compared with the reference.  Born runs through the CQ route so
    that all fields share the time discretization.  With
    ``config.reference_check_intervals`` set, the reference is also recomputed on
    once-refined meshes at the largest epsilon and the difference is reported
    as the mesh error floor.
    """
    eps_list = tuple(config.epsilons)
    if len(eps_list) < 3:
        raise SmallscatError("[configuration] a convergence study needs at least 3 epsilon values")
    pairs = list(comparisons or _comparisons(config))
    needed = sorted({m for pair in pairs for m in pair})
    with _stage("configuration"):
        base_scene = config.scene()
        grid = config.grid()
    errors = {f"{a}-{b}" if b != config.reference else a: [] for a, b in pairs}
    kept = {}
    for eps in eps_list:
        scene = base_scene.with_epsilon(eps)
        fields = _fields_for(config, scene, needed, "cq", grid)
        for a, b in pairs:
            tag = f"{a}-{b}" if b != config.reference else a
            errors[tag].append(linf_error(fields[a], fields[b]))
        if keep_fields:
            kept[eps] = fields
    errors = {k: np.array(v) for k, v in errors.items()}
    slopes = {}
    for tag, errs in errors.items():
        with _stage(f"slope fit for {tag}"):
            slopes[tag] = fit_slope(np.stack([np.array(eps_list), errs], axis=1))

    floor = None
    if config.reference_check_intervals is not None:
        with _stage("reference mesh-sensitivity check"):
            check_grid = CQGrid.from_final_time(config.cq.T, config.reference_check_intervals, config.cq.symbol,
                                                tol=config.cq.tol)
            scene = base_scene.with_epsilon(eps_list[0])
            coarse = _fields_for(config, scene, [config.reference], "cq", check_grid)[config.reference]
            fine_cfg = _refined(config)
            fine = _fields_for(fine_cfg, fine_cfg.scene(eps_list[0]), [config.reference], "cq",
                               check_grid)[config.reference]
            floor = linf_error(coarse, fine)

    result = ConvergenceResult(eps_list, errors, slopes, floor, kept)
    if out is not None or config.out:
        _write_convergence(config, result, Path(out or config.out), grid)
    return result


def _write_convergence(config, result: ConvergenceResult, out_dir: Path, grid: CQGrid):
    prov = {"config_hash": config.config_hash(), "cq": grid.describe(), "reference": config.reference,
            "mesh_ids": " ".join(o.mesh.mesh_id for o in config.scene().obstacles)}
    if result.reference_floor is not None:
        prov["reference_floor"] = repr(result.reference_floor)
    write_csv(out_dir / "errors.csv", ["epsilon", "model", "error"], result.rows(), prov)
    write_csv(out_dir / "slopes.csv", ["model", "slope", "intercept", "residual"],
              [(tag, f.slope, f.intercept, f.residual) for tag, f in result.slopes.items()], prov)
    eps = np.array(result.epsilons)
    series = {f"{tag} (slope {result.slopes[tag].slope:.2f})": (eps, errs) for tag, errs in result.errors.items()}
    top = max(errs[0] for errs in result.errors.values())
    guides = {"eps^2": (eps, top * (eps / eps[0]) ** 2), "eps^3": (eps, top * (eps / eps[0]) ** 3)}
    write_loglog_svg(out_dir / "convergence.svg", series, title="L-infinity(0,T) error vs epsilon",
                     references=guides, note=f"config_hash {prov['config_hash']}")


# --------------------------------------------------------------------------- oracle


def run_oracle(config: ExperimentConfig | None = None, quick: bool = False):
    """Pass/fail report of the independent oracle checks."""
    scene = config.scene(1.0) if config is not None else None
    return run_checks(scene, quick=quick)


def slope_summary(slopes: dict[str, SlopeFit]) -> str:
    return ", ".join(f"{k}: {v.slope:.3f}" for k, v in slopes.items())
