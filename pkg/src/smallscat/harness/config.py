"""Experiment configuration: TOML files with [scene], [incident], [cq] and [experiment] sections.

Example::

    [scene]
    epsilon = 0.1
    [[scene.obstacles]]
    center = [0.0, 0.0, 0.0]
    bounding_radius = 1.0
    generator = "icosphere"      # or "ellipsoid", or: mesh = "shape.off"
    level = 2

    [incident]
    kind = "modulated_gaussian"
    direction = [1.0, -1.0, 1.0]
    carrier = 6.283185307179586
    width = 3.0
    delay = 3.0

    [cq]
    T = 13.0
    intervals = 1024
    symbol = "bdf2"

    [experiment]
    models = ["gfl", "simplified", "born"]
    points = [[-1.0, -1.0, -1.0]]
    epsilons = [0.2, 0.1, 0.05]
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np
import tomli

from ..cq import CQGrid
from ..errors import ConfigError, DomainError, MeshError
from ..geometry import Obstacle, Scene, ellipsoid, icosphere, load_mesh, validate_scene
from ..incident import IncidentField, custom_profile, modulated_gaussian, sigmoid_sine
from ..models import MODEL_KINDS
from ..quadrature import triangle_rule

__all__ = ["ObstacleSpec", "CQSpec", "ExperimentConfig", "load_config", "load_scene", "build_scene"]


@dataclass(frozen=True)
class ObstacleSpec:
    center: tuple
    bounding_radius: float
    generator: str | None = "icosphere"
    mesh: str | None = None
    level: int = 2
    radius: float = 1.0
    semi_axes: tuple | None = None

    def build(self, base_dir: Path | None = None) -> Obstacle:
        c = np.asarray(self.center, dtype=float)
        if self.mesh is not None:
            path = Path(self.mesh)
            if base_dir is not None and not path.is_absolute():
                path = base_dir / path
            mesh = load_mesh(path)
        elif self.generator == "icosphere":
            mesh = icosphere(self.level, self.radius, c)
        elif self.generator == "ellipsoid":
            if self.semi_axes is None:
                raise ConfigError("ellipsoid obstacles need semi_axes")
            mesh = ellipsoid(self.semi_axes, self.level, c)
        else:
            raise ConfigError(f"obstacle needs a mesh path or a generator (icosphere|ellipsoid), got {self.generator!r}")
        try:
            return Obstacle(mesh, c, self.bounding_radius)
        except DomainError as exc:
            raise ConfigError(f"obstacle at {list(self.center)}: {exc}") from exc


@dataclass(frozen=True)
class CQSpec:
    T: float = 13.0
    intervals: int = 1024
    symbol: str = "bdf2"
    tol: float = 1e-12
    symmetric: bool = False

    def grid(self) -> CQGrid:
        return CQGrid.from_final_time(self.T, self.intervals, self.symbol, tol=self.tol)


@dataclass(frozen=True)
class ExperimentConfig:
    obstacles: tuple
    epsilon: float = 1.0
    incident: dict = field(default_factory=dict)
    cq: CQSpec = field(default_factory=CQSpec)
    models: tuple = ("gfl", "simplified", "born")
    points: tuple = ((-1.0, -1.0, -1.0),)
    epsilons: tuple = ()
    out: str = "out"
    reference: str = "reference"
    quad_points: int = 3
    far_quad_points: int = 1
    laplace_quad_points: int = 7
    born_route: str = "direct"
    threads: int = 1
    reference_check_intervals: int | None = None
    base_dir: str | None = None

    def __post_init__(self):
        if not self.obstacles:
            raise ConfigError("[scene] needs at least one obstacle")
        if not self.models:
            raise ConfigError("[experiment] models must list at least one model")
        bad = [m for m in self.models if m not in MODEL_KINDS]
        if bad:
            raise ConfigError(f"unknown models {bad}; expected a subset of {MODEL_KINDS}")
        if not self.points:
            raise ConfigError("[experiment] needs at least one observation point")
        eps = list(self.epsilons)
        if any(not (0 < e <= 1) for e in eps) or eps != sorted(eps, reverse=True) or len(set(eps)) != len(eps):
            raise ConfigError(f"epsilons must be distinct, in (0, 1] and sorted descending, got {eps}")
        if not (0 < self.epsilon <= 1):
            raise ConfigError(f"epsilon must be in (0, 1], got {self.epsilon}")
        if self.born_route not in ("direct", "cq"):
            raise ConfigError("born_route must be 'direct' or 'cq'")
        if self.reference not in MODEL_KINDS:
            raise ConfigError(f"reference must be one of {MODEL_KINDS}")

    # ---------------------------------------------------------------- derived objects

    def scene(self, epsilon: float | None = None) -> Scene:
        base = Path(self.base_dir) if self.base_dir else None
        scene = Scene(tuple(o.build(base) for o in self.obstacles), epsilon or self.epsilon)
        report = validate_scene(scene)
        if not report.admissible:
            raise ConfigError(f"scene is not admissible: {report}")
        d = np.linalg.norm(np.asarray(self.points)[:, None] - scene.centers[None], axis=-1)
        if np.any(d <= scene.radii[None]):
            raise ConfigError("observation points must lie outside every bounding ball at epsilon = 1")
        return scene

    def incident_field(self) -> IncidentField:
        p = dict(self.incident)
        try:
            kind = p.pop("kind")
            direction = p.pop("direction")
        except KeyError as exc:
            raise ConfigError(f"[incident] is missing {exc}") from None
        amplitude = float(p.pop("amplitude", 1.0))
        makers = {"modulated_gaussian": modulated_gaussian, "sigmoid_sine": sigmoid_sine,
                  "custom_profile": custom_profile}
        if kind not in makers:
            raise ConfigError(f"unknown incident kind {kind!r}; expected one of {sorted(makers)}")
        try:
            field = makers[kind](direction, **p)
        except TypeError as exc:
            raise ConfigError(f"[incident] {exc}") from None
        return field.scaled(amplitude) if amplitude != 1.0 else field

    def grid(self) -> CQGrid:
        return self.cq.grid()

    def quadratures(self):
        try:
            return (triangle_rule(self.quad_points), triangle_rule(self.far_quad_points),
                    triangle_rule(self.laplace_quad_points))
        except ValueError as exc:
            raise ConfigError(f"[experiment] {exc}") from None

    def point_array(self) -> np.ndarray:
        return np.asarray(self.points, dtype=float).reshape(-1, 3)

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("base_dir", None)
        d.pop("threads", None)
        d.pop("out", None)
        return d

    def config_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, default=list).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def with_overrides(self, **kw) -> "ExperimentConfig":
        kw = {k: v for k, v in kw.items() if v is not None}
        return replace(self, **kw)


def _obstacle_spec(raw: dict) -> ObstacleSpec:
    try:
        center = tuple(float(x) for x in raw["center"])
        radius = float(raw["bounding_radius"])
    except KeyError as exc:
        raise ConfigError(f"obstacle entry is missing {exc}") from None
    return ObstacleSpec(
        center=center,
        bounding_radius=radius,
        generator=raw.get("generator", None if "mesh" in raw else "icosphere"),
        mesh=raw.get("mesh"),
        level=int(raw.get("level", 2)),
        radius=float(raw.get("radius", 1.0)),
        semi_axes=tuple(raw["semi_axes"]) if "semi_axes" in raw else None,
    )


def config_from_dict(data: dict, base_dir=None) -> ExperimentConfig:
    scene = data.get("scene")
    if not scene or "obstacles" not in scene:
        raise ConfigError("config needs a [scene] section with [[scene.obstacles]] entries")
    exp = dict(data.get("experiment", {}))
    cq = dict(data.get("cq", {}))
    if "dt" in cq:
        cq["intervals"] = int(round(cq.get("T", 13.0) / cq.pop("dt")))
    unknown = set(cq) - {"T", "intervals", "symbol", "tol", "symmetric"}
    if unknown:
        raise ConfigError(f"unknown [cq] keys {sorted(unknown)}")
    kw = {}
    for key in ("out", "reference", "quad_points", "far_quad_points", "laplace_quad_points",
                "born_route", "threads", "reference_check_intervals"):
        if key in exp:
            kw[key] = exp[key]
    return ExperimentConfig(
        obstacles=tuple(_obstacle_spec(o) for o in scene["obstacles"]),
        epsilon=float(scene.get("epsilon", 1.0)),
        incident=dict(data.get("incident", {})),
        cq=CQSpec(**cq),
        models=tuple(exp.get("models", ("gfl", "simplified", "born"))),
        points=tuple(tuple(float(x) for x in p) for p in exp.get("points", [(-1.0, -1.0, -1.0)])),
        epsilons=tuple(float(e) for e in exp.get("epsilons", ())),
        base_dir=str(base_dir) if base_dir else None,
        **kw,
    )


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        data = tomli.loads(path.read_text())
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    try:
        return config_from_dict(data, path.parent)
    except MeshError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def load_scene(path) -> Scene:
    """Scene described by the [scene] section of a config file (``epsilon`` defaults to 1)."""
    path = Path(path)
    data = tomli.loads(path.read_text())
    scene = data.get("scene") or {}
    if "obstacles" not in scene:
        raise ConfigError(f"{path}: no [[scene.obstacles]] entries")
    specs = [_obstacle_spec(o) for o in scene["obstacles"]]
    return Scene(tuple(s.build(path.parent) for s in specs), float(scene.get("epsilon", 1.0)))


def build_scene(specs, epsilon=1.0, base_dir=None) -> Scene:
    return Scene(tuple(s.build(base_dir) for s in specs), epsilon)
