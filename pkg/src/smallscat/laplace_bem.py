"""Piecewise-constant Galerkin BEM for the Laplace single-layer equation ``S0 sigma = 1``.

The equilibrium density ``sigma`` of an obstacle, its capacitance ``c = <sigma, 1>``
and first moment ``p = <sigma, y - center>`` are the only geometric data the
asymptotic models need.  Densities are computed once on the reference obstacle
and rescaled exactly for every ``epsilon``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace

import numba
import numpy as np
import scipy.linalg
from scipy.spatial import cKDTree

from .errors import AssemblyError, DomainError, SolverError
from .geometry import Obstacle, Scene, TriangleMesh, scale_obstacle
from .quadrature import QuadratureRule, triangle_rule

__all__ = [
    "EquilibriumData",
    "triangle_potential",
    "assemble_S0",
    "solve_equilibrium",
    "scale_equilibrium",
    "scene_equilibria",
    "default_quadrature",
]

log = logging.getLogger(__name__)

FOUR_PI = 4.0 * np.pi
FAR_FACTOR = 8.0  # beyond this many panel diameters the 3-point tensor rule is used
CENTROID_FACTOR = 24.0  # beyond this many panel diameters the one-point rule is used
NEAR_FACTOR = 2.5  # panel pairs closer than this many panel diameters use the analytic inner integral


def default_quadrature() -> QuadratureRule:
    return triangle_rule(7)


# --------------------------------------------------------------------------- analytic potential


def triangle_potential(points, corners) -> np.ndarray:
    """Newtonian potential ``int_T 1/(4 pi |x - y|) dy`` of a unit density on flat triangles.

    ``points`` (..., 3) and ``corners`` (..., 3, 3) broadcast against each other.
    Exact closed form (edge-wise log and arctan terms); valid on and off the
    triangle's plane, including points on the triangle itself.
    """
    x = np.asarray(points, dtype=float)
    tri = np.asarray(corners, dtype=float)
    x, tri = np.broadcast_arrays(x[..., None, :], tri)
    x = x[..., 0, :]
    v0, v1, v2 = tri[..., 0, :], tri[..., 1, :], tri[..., 2, :]
    n = np.cross(v1 - v0, v2 - v0)
    n /= np.linalg.norm(n, axis=-1, keepdims=True)
    h = np.einsum("...d,...d->...", x - v0, n)
    ah = np.abs(h)
    rho = x - h[..., None] * n
    scale = np.max(np.linalg.norm(tri - tri.mean(axis=-2, keepdims=True), axis=-1), axis=-1)
    tiny = 1e-13 * scale

    total = np.zeros(h.shape)
    with np.errstate(divide="ignore", invalid="ignore"):
        for pm, pp in ((v0, v1), (v1, v2), (v2, v0)):
            edge = pp - pm
            elen = np.linalg.norm(edge, axis=-1, keepdims=True)
            lhat = edge / elen
            uhat = np.cross(lhat, n)
            p0 = np.einsum("...d,...d->...", pm - rho, uhat)
            lp = np.einsum("...d,...d->...", pp - rho, lhat)
            lm = np.einsum("...d,...d->...", pm - rho, lhat)
            rp = np.linalg.norm(x - pp, axis=-1)
            rm = np.linalg.norm(x - pm, axis=-1)
            r0sq = p0 * p0 + h * h
            # (R+ + l+)/(R- + l-) == (R- - l-)/(R+ - l+); pick the cancellation-free form
            log_fwd = np.log((rp + lp) / (rm + lm))
            log_bwd = np.log((rm - lm) / (rp - lp))
            logterm = np.where(lm >= 0, log_fwd, np.where(lp <= 0, log_bwd, log_fwd))
            term = np.where(np.abs(p0) < tiny, 0.0, p0 * logterm)
            atan = np.arctan(p0 * lp / (r0sq + ah * rp)) - np.arctan(p0 * lm / (r0sq + ah * rm))
            term = term - np.where(ah < tiny, 0.0, ah * atan)
            total += term
    return total / FOUR_PI


# --------------------------------------------------------------------------- assembly


@numba.njit(cache=True, inline="always")
def _edge_term(x0, x1, x2, a0, a1, a2, b0, b1, b2, n0, n1, n2, h, ah, r00, r01, r02, tiny):
    e0, e1, e2 = b0 - a0, b1 - a1, b2 - a2
    el = np.sqrt(e0 * e0 + e1 * e1 + e2 * e2)
    l0, l1, l2 = e0 / el, e1 / el, e2 / el
    u0, u1, u2 = l1 * n2 - l2 * n1, l2 * n0 - l0 * n2, l0 * n1 - l1 * n0
    p0 = (a0 - r00) * u0 + (a1 - r01) * u1 + (a2 - r02) * u2
    lp = (b0 - r00) * l0 + (b1 - r01) * l1 + (b2 - r02) * l2
    lm = (a0 - r00) * l0 + (a1 - r01) * l1 + (a2 - r02) * l2
    rp = np.sqrt((x0 - b0) ** 2 + (x1 - b1) ** 2 + (x2 - b2) ** 2)
    rm = np.sqrt((x0 - a0) ** 2 + (x1 - a1) ** 2 + (x2 - a2) ** 2)
    r0sq = p0 * p0 + h * h
    term = 0.0
    if abs(p0) >= tiny:
        if lm < 0 and lp <= 0:
            term += p0 * np.log((rm - lm) / (rp - lp))
        else:
            term += p0 * np.log((rp + lp) / (rm + lm))
    if ah >= tiny:
        term -= ah * (np.arctan(p0 * lp / (r0sq + ah * rp)) - np.arctan(p0 * lm / (r0sq + ah * rm)))
    return term


@numba.njit(cache=True)
def _point_potential(x, v0, v1, v2):
    # scalar twin of triangle_potential (without the 1/(4 pi)), for the near-pair loop
    n0 = (v1[1] - v0[1]) * (v2[2] - v0[2]) - (v1[2] - v0[2]) * (v2[1] - v0[1])
    n1 = (v1[2] - v0[2]) * (v2[0] - v0[0]) - (v1[0] - v0[0]) * (v2[2] - v0[2])
    n2 = (v1[0] - v0[0]) * (v2[1] - v0[1]) - (v1[1] - v0[1]) * (v2[0] - v0[0])
    nn = np.sqrt(n0 * n0 + n1 * n1 + n2 * n2)
    n0, n1, n2 = n0 / nn, n1 / nn, n2 / nn
    h = (x[0] - v0[0]) * n0 + (x[1] - v0[1]) * n1 + (x[2] - v0[2]) * n2
    ah = abs(h)
    r00, r01, r02 = x[0] - h * n0, x[1] - h * n1, x[2] - h * n2
    c0 = (v0[0] + v1[0] + v2[0]) / 3.0
    c1 = (v0[1] + v1[1] + v2[1]) / 3.0
    c2 = (v0[2] + v1[2] + v2[2]) / 3.0
    scale = max(np.sqrt((v0[0] - c0) ** 2 + (v0[1] - c1) ** 2 + (v0[2] - c2) ** 2),
                np.sqrt((v1[0] - c0) ** 2 + (v1[1] - c1) ** 2 + (v1[2] - c2) ** 2),
                np.sqrt((v2[0] - c0) ** 2 + (v2[1] - c1) ** 2 + (v2[2] - c2) ** 2))
    tiny = 1e-13 * scale
    x0, x1, x2 = x[0], x[1], x[2]
    return (_edge_term(x0, x1, x2, v0[0], v0[1], v0[2], v1[0], v1[1], v1[2], n0, n1, n2, h, ah, r00, r01, r02, tiny)
            + _edge_term(x0, x1, x2, v1[0], v1[1], v1[2], v2[0], v2[1], v2[2], n0, n1, n2, h, ah, r00, r01, r02, tiny)
            + _edge_term(x0, x1, x2, v2[0], v2[1], v2[2], v0[0], v0[1], v0[2], n0, n1, n2, h, ah, r00, r01, r02, tiny))


@numba.njit(cache=True)
def _near_entries(nodes, weights, corners, pi, pj):
    # symmetrised outer-quadrature / analytic-inner entries for the listed pairs
    out = np.empty(pi.shape[0])
    for k in range(pi.shape[0]):
        i, j = pi[k], pj[k]
        vij = 0.0
        for q in range(weights.shape[1]):
            vij += weights[i, q] * _point_potential(nodes[i, q], corners[j, 0], corners[j, 1], corners[j, 2])
        vji = 0.0
        for q in range(weights.shape[1]):
            vji += weights[j, q] * _point_potential(nodes[j, q], corners[i, 0], corners[i, 1], corners[i, 2])
        out[k] = 0.5 * (vij + vji)
    return out / FOUR_PI




@numba.njit(cache=True, fastmath=True)
def _tensor_sum(xi, wi, xj, wj):
    acc = 0.0
    for a in range(wi.shape[0]):
        sub = 0.0
        for b in range(wj.shape[0]):
            d0 = xi[a, 0] - xj[b, 0]
            d1 = xi[a, 1] - xj[b, 1]
            d2 = xi[a, 2] - xj[b, 2]
            sub += wj[b] / np.sqrt(d0 * d0 + d1 * d1 + d2 * d2)
        acc += wi[a] * sub
    return acc


@numba.njit(cache=True, fastmath=True)
def _laplace_tensor(nodes, weights, far_nodes, far_weights, centroids, areas, pdiam, far_factor, skip):
    # entries with skip[i, j] are left at zero; separated pairs use the coarse rule,
    # very distant pairs the centroid rule
    P = weights.shape[0]
    out = np.zeros((P, P))
    for i in range(P):
        for j in range(i + 1, P):
            if skip[i, j]:
                continue
            d0 = centroids[i, 0] - centroids[j, 0]
            d1 = centroids[i, 1] - centroids[j, 1]
            d2 = centroids[i, 2] - centroids[j, 2]
            dist = np.sqrt(d0 * d0 + d1 * d1 + d2 * d2)
            hmax = max(pdiam[i], pdiam[j])
            if dist > CENTROID_FACTOR * hmax:
                acc = areas[i] * areas[j] / dist
            elif dist > far_factor * hmax:
                acc = _tensor_sum(far_nodes[i], far_weights[i], far_nodes[j], far_weights[j])
            else:
                acc = _tensor_sum(nodes[i], weights[i], nodes[j], weights[j])
            out[i, j] = acc
            out[j, i] = acc
    return out


def panel_diameters(mesh: TriangleMesh) -> np.ndarray:
    corners = mesh.corners
    return np.max(np.linalg.norm(corners - corners[:, [1, 2, 0]], axis=-1), axis=1)


def near_pairs(mesh: TriangleMesh, factor: float = NEAR_FACTOR) -> np.ndarray:
    """Index pairs (i, j), i <= j, whose centroids are within ``factor`` panel diameters."""
    pdiam = panel_diameters(mesh)
    tree = cKDTree(mesh.centroids)
    cand = tree.query_pairs(factor * pdiam.max(), output_type="ndarray")
    i, j = cand[:, 0], cand[:, 1]
    d = np.linalg.norm(mesh.centroids[i] - mesh.centroids[j], axis=1)
    keep = d < factor * np.maximum(pdiam[i], pdiam[j])
    diag = np.arange(mesh.n_panels)
    pairs = np.concatenate([np.stack([diag, diag], axis=1), np.sort(cand[keep], axis=1)])
    return pairs


def assemble_S0(mesh: TriangleMesh, quad: QuadratureRule | None = None) -> np.ndarray:
    """Galerkin matrix ``int_Ti int_Tj 1/(4 pi |x - y|)`` for piecewise constants.

    Separated panels use the tensor product of ``quad`` (a 3-point rule beyond
    ``FAR_FACTOR`` panel diameters, centroids beyond ``CENTROID_FACTOR``); close and self
    pairs integrate the analytic triangle potential over the outer nodes and
    are symmetrised.
    """
    quad = quad or default_quadrature()
    nodes = quad.physical_nodes(mesh)
    weights = quad.physical_weights(mesh)
    far = triangle_rule(3)
    pairs = near_pairs(mesh)
    skip = np.zeros((mesh.n_panels, mesh.n_panels), dtype=np.bool_)
    skip[pairs[:, 0], pairs[:, 1]] = True
    skip[pairs[:, 1], pairs[:, 0]] = True
    S = _laplace_tensor(nodes, weights, far.physical_nodes(mesh), far.physical_weights(mesh),
                        mesh.centroids, mesh.areas, panel_diameters(mesh), FAR_FACTOR, skip) / FOUR_PI

    i, j = pairs[:, 0], pairs[:, 1]
    # outer integral over panel i of the potential of panel j, and vice versa
    sym = _near_entries(np.ascontiguousarray(nodes), np.ascontiguousarray(weights),
                        np.ascontiguousarray(mesh.corners), i.astype(np.int64), j.astype(np.int64))
    S[i, j] = sym
    S[j, i] = sym
    if not np.all(np.isfinite(S)):
        a, b = np.argwhere(~np.isfinite(S))[0]
        raise AssemblyError(f"non-finite Laplace entry for panel pair ({a}, {b})")
    return S


# --------------------------------------------------------------------------- equilibrium data


@dataclass(frozen=True, eq=False)
class EquilibriumData:
    """Equilibrium density of one obstacle at scale ``epsilon``.

    ``sigma`` is panel-wise constant on the obstacle mesh at that scale.
    """

    sigma: np.ndarray
    capacitance: float
    moment: np.ndarray
    epsilon: float = 1.0
    center: np.ndarray | None = None
    residual: float = 0.0

    def l2_norm(self, areas) -> float:
        return float(np.sqrt(np.sum(self.sigma**2 * areas)))


def solve_equilibrium(mesh: TriangleMesh, quad: QuadratureRule | None = None, center=None,
                      S0: np.ndarray | None = None) -> EquilibriumData:
    """Solve ``S0 sigma = 1`` in the P0 Galerkin sense (right-hand side = panel areas)."""
    if S0 is None:
        S0 = assemble_S0(mesh, quad)
    center = np.zeros(3) if center is None else np.asarray(center, dtype=float)
    rhs = mesh.areas
    try:
        factor = scipy.linalg.cho_factor(S0, lower=True)
        sigma = scipy.linalg.cho_solve(factor, rhs)
    except (np.linalg.LinAlgError, ValueError) as exc:
        cond = np.linalg.cond(S0)
        raise SolverError(f"Cholesky solve of the Laplace system failed (condition ~ {cond:.3e}): {exc}") from exc
    residual = float(np.max(np.abs(S0 @ sigma - rhs) / rhs))
    cap = float(sigma @ mesh.areas)
    if not cap > 0:
        raise SolverError(f"non-positive capacitance {cap}")
    moment = (sigma * mesh.areas) @ (mesh.centroids - center)
    return EquilibriumData(sigma, cap, moment, 1.0, center, residual)


def scale_equilibrium(data: EquilibriumData, epsilon: float) -> EquilibriumData:
    """Exact rescaling from the reference obstacle: ``sigma/eps``, ``c*eps``, ``p*eps**2``."""
    if data.epsilon != 1.0:
        raise DomainError("scale_equilibrium expects data computed at epsilon = 1")
    if not (0 < epsilon <= 1):
        raise DomainError(f"epsilon must lie in (0, 1], got {epsilon}")
    if epsilon == 1:
        return data
    return replace(data, sigma=data.sigma / epsilon, capacitance=data.capacitance * epsilon,
                   moment=data.moment * epsilon**2, epsilon=epsilon)


_CACHE: dict = {}


def reference_equilibrium(obstacle: Obstacle, quad: QuadratureRule | None = None) -> tuple[EquilibriumData, np.ndarray]:
    """Equilibrium data and S0 matrix of the reference (epsilon = 1) obstacle, cached by shape."""
    quad = quad or default_quadrature()
    key = (obstacle.shape_key, quad.name, quad.n_nodes)
    if key not in _CACHE:
        log.info("solving equilibrium density on %d panels", obstacle.mesh.n_panels)
        S0 = assemble_S0(obstacle.mesh, quad)
        data = solve_equilibrium(obstacle.mesh, quad, obstacle.center, S0=S0)
        _CACHE[key] = (data, S0)
    data, S0 = _CACHE[key]
    return replace(data, center=obstacle.center), S0


def scene_equilibria(scene: Scene, quad: QuadratureRule | None = None) -> list[EquilibriumData]:
    """Per-obstacle equilibrium data at the scene's epsilon (solved once at epsilon = 1)."""
    return [scale_equilibrium(reference_equilibrium(o, quad)[0], scene.epsilon) for o in scene.obstacles]


def resolve_on_scaled_mesh(obstacle: Obstacle, epsilon: float, quad: QuadratureRule | None = None) -> EquilibriumData:
    """Independent solve on the physically scaled mesh (cross-check for the scaling law)."""
    mesh = scale_obstacle(obstacle, epsilon)
    data = solve_equilibrium(mesh, quad, obstacle.center)
    return replace(data, epsilon=epsilon)
