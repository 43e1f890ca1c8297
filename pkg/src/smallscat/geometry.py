"""Triangle-mesh obstacles, scenes of many obstacles and their epsilon-rescaling.

Obstacles are stored at reference scale (epsilon = 1).  The physical obstacle at
scale ``epsilon`` is the image of the reference mesh under
``x -> epsilon * (x - center) + center``.
"""

from __future__ import annotations

import hashlib
import itertools
from collections import Counter
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import DomainError, MeshError

__all__ = [
    "TriangleMesh",
    "Obstacle",
    "Scene",
    "AdmissibilityReport",
    "load_mesh",
    "save_mesh",
    "icosphere",
    "ellipsoid",
    "scale_obstacle",
    "validate_scene",
]

DEGENERACY_TOL = 1e-14


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class TriangleMesh:
    """Closed, consistently oriented triangulated surface.

    Use :meth:`from_arrays` to build one; it validates the surface and
    precomputes per-triangle areas, centroids and unit normals.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    areas: np.ndarray
    centroids: np.ndarray
    normals: np.ndarray

    @classmethod
    def from_arrays(cls, vertices, triangles, *, face_lines=None) -> "TriangleMesh":
        """Validate and build a mesh.

        ``face_lines`` optionally maps face index to a source line number so
        that errors can point into the originating file.
        """
        v = np.asarray(vertices, dtype=float)
        t = np.asarray(triangles)
        if v.ndim != 2 or v.shape[1] != 3 or len(v) < 4:
            raise MeshError(f"vertices must be an (n>=4, 3) array, got shape {v.shape}")
        if t.ndim != 2 or t.shape[1] != 3 or len(t) < 4:
            raise MeshError(f"triangles must be an (m>=4, 3) array, got shape {t.shape}")
        if not np.all(np.isfinite(v)):
            raise MeshError("non-finite vertex coordinates")
        t = t.astype(np.int64)

        def where(i):
            return f" (line {face_lines[i]})" if face_lines is not None else ""

        bad = np.flatnonzero((t < 0).any(axis=1) | (t >= len(v)).any(axis=1))
        if bad.size:
            i = int(bad[0])
            raise MeshError(f"face {i}{where(i)} has a vertex index out of range [0, {len(v)})")

        a, b, c = v[t[:, 0]], v[t[:, 1]], v[t[:, 2]]
        cross = np.cross(b - a, c - a)
        double_area = np.linalg.norm(cross, axis=1)
        diam = np.linalg.norm(v.max(axis=0) - v.min(axis=0))
        degenerate = np.flatnonzero(0.5 * double_area <= DEGENERACY_TOL * diam**2)
        if degenerate.size:
            i = int(degenerate[0])
            raise MeshError(f"face {i}{where(i)} is degenerate (area {0.5 * double_area[i]:.3e})")

        directed = Counter()
        for tri in t:
            for p, q in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])):
                directed[(int(p), int(q))] += 1
        for (p, q), n in directed.items():
            if n > 1:
                raise MeshError(f"edge ({p}, {q}) is traversed {n} times in the same direction; "
                                "surface is non-manifold or inconsistently oriented")
            if (q, p) not in directed:
                raise MeshError(f"edge ({p}, {q}) belongs to a single face; surface is not closed")

        return cls(
            vertices=_readonly(v),
            triangles=_readonly(t),
            areas=_readonly(0.5 * double_area),
            centroids=_readonly((a + b + c) / 3.0),
            normals=_readonly(cross / double_area[:, None]),
        )

    @property
    def n_panels(self) -> int:
        return len(self.triangles)

    @property
    def total_area(self) -> float:
        return float(self.areas.sum())

    @property
    def corners(self) -> np.ndarray:
        """Triangle corner coordinates, shape (panels, 3, 3)."""
        return self.vertices[self.triangles]

    @property
    def diameter(self) -> float:
        v = self.vertices
        return float(np.max(np.linalg.norm(v[:, None, :] - v[None, :, :], axis=-1)))

    @cached_property
    def mesh_id(self) -> str:
        h = hashlib.sha1()
        h.update(np.round(self.vertices, 12).tobytes())
        h.update(self.triangles.tobytes())
        return h.hexdigest()[:12]

    def transformed(self, matrix=None, shift=None) -> "TriangleMesh":
        """Image under ``x -> matrix @ x + shift`` (orientation-preserving maps only)."""
        v = self.vertices
        if matrix is not None:
            v = v @ np.asarray(matrix, dtype=float).T
        if shift is not None:
            v = v + np.asarray(shift, dtype=float)
        return TriangleMesh.from_arrays(v, self.triangles)


@dataclass(frozen=True, eq=False)
class Obstacle:
    mesh: TriangleMesh
    center: np.ndarray
    bounding_radius: float

    def __post_init__(self):
        c = _readonly(np.asarray(self.center, dtype=float).reshape(3))
        object.__setattr__(self, "center", c)
        if not self.bounding_radius > 0:
            raise DomainError(f"bounding radius must be positive, got {self.bounding_radius}")
        dist = np.linalg.norm(self.mesh.vertices - c, axis=1)
        worst = float(dist.max())
        if worst > self.bounding_radius * (1 + 1e-12):
            raise DomainError(
                f"mesh vertex at distance {worst:.6g} from the center lies outside the "
                f"bounding ball of radius {self.bounding_radius:.6g}"
            )

    @property
    def shape_key(self) -> str:
        """Key identifying the obstacle's shape up to translation."""
        h = hashlib.sha1(np.round(self.mesh.vertices - self.center, 12).tobytes())
        h.update(self.mesh.triangles.tobytes())
        return h.hexdigest()


def scale_obstacle(obstacle: Obstacle, epsilon: float) -> TriangleMesh:
    """Mesh of the obstacle shrunk by ``epsilon`` about its center."""
    if not (0 < epsilon <= 1):
        raise DomainError(f"epsilon must lie in (0, 1], got {epsilon}")
    if epsilon == 1:
        return obstacle.mesh
    c = obstacle.center
    v = epsilon * (obstacle.mesh.vertices - c) + c
    return TriangleMesh.from_arrays(v, obstacle.mesh.triangles)


@dataclass(frozen=True)
class AdmissibilityReport:
    admissible: bool
    d_star_1: float
    epsilon: float
    d_star_eps: float
    offending_pair: tuple[int, int] | None = None

    def __str__(self):
        status = "admissible" if self.admissible else f"NOT admissible (pair {self.offending_pair})"
        return f"{status}: d*(1) = {self.d_star_1:.6g}, d*({self.epsilon:g}) = {self.d_star_eps:.6g}"


@dataclass(frozen=True, eq=False)
class Scene:
    """Obstacles at reference scale plus the global scale ``epsilon``."""

    obstacles: tuple[Obstacle, ...]
    epsilon: float = 1.0
    _scaled: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "obstacles", tuple(self.obstacles))
        if len(self.obstacles) == 0:
            raise DomainError("a scene needs at least one obstacle")
        if not (0 < self.epsilon <= 1):
            raise DomainError(f"epsilon must lie in (0, 1], got {self.epsilon}")

    def __len__(self):
        return len(self.obstacles)

    @property
    def centers(self) -> np.ndarray:
        return np.array([o.center for o in self.obstacles])

    @property
    def radii(self) -> np.ndarray:
        return np.array([o.bounding_radius for o in self.obstacles])

    @property
    def scaled_meshes(self) -> tuple[TriangleMesh, ...]:
        if "meshes" not in self._scaled:
            self._scaled["meshes"] = tuple(scale_obstacle(o, self.epsilon) for o in self.obstacles)
        return self._scaled["meshes"]

    def with_epsilon(self, epsilon: float) -> "Scene":
        return Scene(self.obstacles, epsilon)

    def d_star(self, epsilon: float | None = None) -> float:
        """Minimal gap between the scaled bounding balls (``inf`` for one obstacle)."""
        eps = self.epsilon if epsilon is None else epsilon
        return self._pair_gaps(eps)[0]

    def _pair_gaps(self, eps):
        best, pair = np.inf, None
        c, r = self.centers, self.radii
        for j, k in itertools.combinations(range(len(self)), 2):
            gap = float(np.linalg.norm(c[j] - c[k]) - eps * (r[j] + r[k]))
            if gap < best:
                best, pair = gap, (j, k)
        return best, pair

    def check_exterior(self, points) -> np.ndarray:
        """Raise :class:`DomainError` unless every point lies outside every scaled bounding ball."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        d = np.linalg.norm(pts[:, None, :] - self.centers[None], axis=-1)
        inside = d <= self.epsilon * self.radii[None]
        if inside.any():
            p, k = map(int, np.argwhere(inside)[0])
            raise DomainError(f"observation point {pts[p].tolist()} lies inside the bounding ball of obstacle {k}")
        return pts


def validate_scene(scene: Scene) -> AdmissibilityReport:
    d1, pair = scene._pair_gaps(1.0)
    de, _ = scene._pair_gaps(scene.epsilon)
    ok = bool(d1 > 0)
    return AdmissibilityReport(ok, d1, scene.epsilon, de, None if ok else pair)


# --------------------------------------------------------------------------- I/O


def load_mesh(path) -> TriangleMesh:
    """Read an OFF-style ASCII triangle mesh.

    Layout: optional ``OFF`` keyword, a counts line ``nv nf [ne]``, ``nv`` vertex
    lines ``x y z`` and ``nf`` face lines ``3 i j k``.  ``#`` starts a comment.
    """
    path = Path(path)
    rows = []
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        text = raw.split("#", 1)[0].strip()
        if text:
            rows.append((lineno, text))
    if rows and rows[0][1].upper().startswith("OFF"):
        head = rows[0][1][3:].strip()
        rows = ([(rows[0][0], head)] if head else []) + rows[1:]
    if not rows:
        raise MeshError(f"{path}: empty mesh file")

    def fail(lineno, msg):
        raise MeshError(f"{path}:{lineno}: {msg}")

    lineno, text = rows[0]
    try:
        counts = [int(x) for x in text.split()]
        nv, nf = counts[0], counts[1]
    except (ValueError, IndexError):
        fail(lineno, f"expected counts line 'nv nf [ne]', got {text!r}")
    if len(rows) < 1 + nv + nf:
        fail(rows[-1][0], f"file ends early: expected {nv} vertices and {nf} faces")
    verts = []
    for lineno, text in rows[1 : 1 + nv]:
        parts = text.split()
        try:
            if len(parts) < 3:
                raise ValueError
            verts.append([float(x) for x in parts[:3]])
        except ValueError:
            fail(lineno, f"bad vertex line {text!r}")
    faces, face_lines = [], []
    for lineno, text in rows[1 + nv : 1 + nv + nf]:
        try:
            parts = [int(x) for x in text.split()]
        except ValueError:
            fail(lineno, f"bad face line {text!r}")
        if len(parts) != 4 or parts[0] != 3:
            fail(lineno, f"only triangular faces '3 i j k' are supported, got {text!r}")
        faces.append(parts[1:])
        face_lines.append(lineno)
    try:
        return TriangleMesh.from_arrays(verts, faces, face_lines=face_lines)
    except MeshError as exc:
        raise MeshError(f"{path}: {exc}") from None


def save_mesh(mesh: TriangleMesh, path) -> None:
    lines = ["OFF", f"{len(mesh.vertices)} {mesh.n_panels} 0"]
    lines += [" ".join(repr(float(x)) for x in v) for v in mesh.vertices]
    lines += ["3 " + " ".join(str(int(i)) for i in t) for t in mesh.triangles]
    Path(path).write_text("\n".join(lines) + "\n")


# --------------------------------------------------------------------------- generators


def _icosahedron():
    phi = (1 + 5**0.5) / 2
    v = np.array(
        [[-1, phi, 0], [1, phi, 0], [-1, -phi, 0], [1, -phi, 0],
         [0, -1, phi], [0, 1, phi], [0, -1, -phi], [0, 1, -phi],
         [phi, 0, -1], [phi, 0, 1], [-phi, 0, -1], [-phi, 0, 1]],
        dtype=float,
    )
    f = np.array(
        [[0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
         [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
         [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
         [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1]]
    )
    return v / np.linalg.norm(v, axis=1, keepdims=True), f


def _unit_icosphere(level: int):
    v, f = _icosahedron()
    verts = [tuple(x) for x in v]
    for _ in range(level):
        cache = {}

        def midpoint(i, j):
            key = (min(i, j), max(i, j))
            if key not in cache:
                m = (np.asarray(verts[i]) + np.asarray(verts[j])) / 2
                verts.append(tuple(m / np.linalg.norm(m)))
                cache[key] = len(verts) - 1
            return cache[key]

        new = []
        for a, b, c in f:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new += [[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]
        f = np.array(new)
    return np.array(verts), f


def icosphere(level: int = 2, radius: float = 1.0, center=(0.0, 0.0, 0.0)) -> TriangleMesh:
    """Geodesic sphere with ``20 * 4**level`` triangles, vertices on the exact sphere."""
    if not 0 <= level <= 5:
        raise DomainError(f"icosphere level must be in 0..5, got {level}")
    v, f = _unit_icosphere(level)
    return TriangleMesh.from_arrays(radius * v + np.asarray(center, dtype=float), f)


def ellipsoid(semi_axes, level: int = 2, center=(0.0, 0.0, 0.0)) -> TriangleMesh:
    """Axis-aligned ellipsoid obtained by stretching an icosphere."""
    axes = np.asarray(semi_axes, dtype=float)
    if axes.shape != (3,) or np.any(axes <= 0):
        raise DomainError(f"semi_axes must be three positive numbers, got {semi_axes}")
    if not 0 <= level <= 5:
        raise DomainError(f"ellipsoid level must be in 0..5, got {level}")
    v, f = _unit_icosphere(level)
    return TriangleMesh.from_arrays(v * axes + np.asarray(center, dtype=float), f)
