"""Frequency-domain single-layer operators on a multi-obstacle scene.

One discrete operator serves every model.  Blocks on the same obstacle are the
exact Laplace block plus the smooth remainder ``(exp(i omega r) - 1)/(4 pi r)``
integrated with ``quad``; blocks coupling different obstacles integrate the
Helmholtz kernel with ``far_quad``.  The Galerkin Foldy-Lax matrix is the
restriction of this operator to the span of the equilibrium densities, so the
reduced and reference models see exactly the same discretisation.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import AssemblyError, DomainError, SolverError
from .geometry import Scene
from .laplace_bem import (
    EquilibriumData,
    default_quadrature,
    reference_equilibrium,
    scale_equilibrium,
)
from .quadrature import QuadratureRule, triangle_rule

__all__ = [
    "HelmholtzOperator",
    "assemble_S_omega",
    "gfl_matrix",
    "rhs_projection",
    "panel_integrals",
    "potential_weights",
    "reference_solve_frequency",
]

FOUR_PI = 4.0 * np.pi


def _remainder(omega, r):
    """``(exp(i omega r) - 1) / (4 pi r)`` with its limit ``i omega / (4 pi)`` at r = 0."""
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.expm1(1j * omega * r) / (FOUR_PI * r)
    out[r == 0] = 1j * omega / FOUR_PI
    return out


def _reduce(left_w, kernel, right_w):
    """Collapse a node-level kernel (Pl*ql, Pk*qk) to panel level using node weights (P, q)."""
    pl, ql = left_w.shape
    pk, qk = right_w.shape
    k = kernel.reshape(pl, ql, pk, qk)
    return np.einsum("ia,iajb,jb->ij", left_w, k, right_w, optimize=True)


def _pairwise(x, y):
    return np.sqrt(np.maximum(
        np.sum(x * x, 1)[:, None] + np.sum(y * y, 1)[None, :] - 2.0 * x @ y.T, 0.0))


@dataclass
class _Block:
    nodes: np.ndarray  # (P, q, 3)
    weights: np.ndarray  # (P, q)
    far_nodes: np.ndarray
    far_weights: np.ndarray
    S0: np.ndarray  # exact Laplace self block at the scene's scale
    self_dist: np.ndarray  # node distances on the obstacle, (P*q, P*q)
    shape_key: str


class HelmholtzOperator:
    """Discrete single-layer operator of a scene at its scale ``epsilon``.

    Geometry-dependent data (distances, Laplace blocks) is computed once; each
    call to :meth:`matrix` or :meth:`reduced_matrix` only evaluates kernels.
    """

    def __init__(self, scene: Scene, quad: QuadratureRule | None = None,
                 far_quad: QuadratureRule | None = None, laplace_quad: QuadratureRule | None = None):
        self.scene = scene
        self.quad = quad or triangle_rule(3)
        self.far_quad = far_quad or self.quad
        self.laplace_quad = laplace_quad or default_quadrature()
        eps = scene.epsilon
        self.meshes = scene.scaled_meshes
        sizes = [m.n_panels for m in self.meshes]
        self.offsets = np.concatenate([[0], np.cumsum(sizes)])
        self.n_panels = int(self.offsets[-1])

        shape_cache: dict = {}
        self.blocks: list[_Block] = []
        self.equilibria: list[EquilibriumData] = []
        for obs, mesh in zip(scene.obstacles, self.meshes):
            ref, S0_ref = reference_equilibrium(obs, self.laplace_quad)
            self.equilibria.append(scale_equilibrium(ref, eps))
            key = obs.shape_key
            if key not in shape_cache:
                ref_nodes = self.quad.physical_nodes(obs.mesh).reshape(-1, 3)
                shape_cache[key] = (eps * _pairwise(ref_nodes, ref_nodes), eps**3 * S0_ref)
            dist, S0 = shape_cache[key]
            self.blocks.append(_Block(
                nodes=self.quad.physical_nodes(mesh),
                weights=self.quad.physical_weights(mesh),
                far_nodes=self.far_quad.physical_nodes(mesh),
                far_weights=self.far_quad.physical_weights(mesh),
                S0=S0, self_dist=dist, shape_key=key,
            ))
        n = len(self.blocks)
        self.cross_dist = {}
        for l in range(n):
            for k in range(l + 1, n):
                self.cross_dist[l, k] = _pairwise(self.blocks[l].far_nodes.reshape(-1, 3),
                                                  self.blocks[k].far_nodes.reshape(-1, 3))

    def __len__(self):
        return len(self.blocks)

    # ------------------------------------------------------------------ full operator

    def matrix(self, omega) -> np.ndarray:
        """Galerkin matrix on all panels (complex symmetric)."""
        P, off = self.n_panels, self.offsets
        S = np.empty((P, P), dtype=complex)
        self_cache: dict = {}
        for k, b in enumerate(self.blocks):
            if b.shape_key not in self_cache:
                rem = _reduce(b.weights, _remainder(omega, b.self_dist), b.weights)
                self_cache[b.shape_key] = b.S0 + 0.5 * (rem + rem.T)
            S[off[k]:off[k + 1], off[k]:off[k + 1]] = self_cache[b.shape_key]
        for (l, k), dist in self.cross_dist.items():
            bl, bk = self.blocks[l], self.blocks[k]
            blk = _reduce(bl.far_weights, np.exp(1j * omega * dist) / (FOUR_PI * dist), bk.far_weights)
            S[off[l]:off[l + 1], off[k]:off[k + 1]] = blk
            S[off[k]:off[k + 1], off[l]:off[l + 1]] = blk.T
        if not np.all(np.isfinite(S)):
            i, j = np.argwhere(~np.isfinite(S))[0]
            raise AssemblyError(f"non-finite single-layer entry for panel pair ({i}, {j}) at omega = {omega}")
        return S

    # ------------------------------------------------------------------ reduced (Foldy-Lax) operator

    def reduced_matrix(self, omega, equilibria: list[EquilibriumData] | None = None) -> np.ndarray:
        """``M[l, k] = <sigma_l, S_omega sigma_k>`` without forming the panel matrix."""
        eq = equilibria or self.equilibria
        n = len(self.blocks)
        M = np.empty((n, n), dtype=complex)
        self_cache: dict = {}
        for k, b in enumerate(self.blocks):
            key = (b.shape_key, eq[k].sigma.tobytes())
            if key not in self_cache:
                sw = (b.weights * eq[k].sigma[:, None]).ravel()
                s = eq[k].sigma
                self_cache[key] = s @ b.S0 @ s + sw @ _remainder(omega, b.self_dist) @ sw
            M[k, k] = self_cache[key]
        for (l, k), dist in self.cross_dist.items():
            swl = (self.blocks[l].far_weights * eq[l].sigma[:, None]).ravel()
            swk = (self.blocks[k].far_weights * eq[k].sigma[:, None]).ravel()
            M[l, k] = M[k, l] = swl @ (np.exp(1j * omega * dist) / (FOUR_PI * dist)) @ swk
        if not np.all(np.isfinite(M)):
            raise AssemblyError(f"non-finite Foldy-Lax entry at omega = {omega}")
        return M

    # ------------------------------------------------------------------ data and fields

    def panel_integrals(self, func) -> np.ndarray:
        """``int_{T_i} func`` for every panel; ``func`` maps nodes (..., 3) to (...,) or (..., T)."""
        out = []
        for b in self.blocks:
            vals = np.asarray(func(b.nodes))
            out.append(np.einsum("pq,pq...->p...", b.weights, vals))
        return np.concatenate(out, axis=0)

    def field_weights(self, omega, points) -> np.ndarray:
        """``int_{T_i} G_omega(|x - y|) dy`` for every observation point and panel."""
        pts = self.scene.check_exterior(points)
        out = []
        for b in self.blocks:
            d = np.linalg.norm(pts[:, None, None, :] - b.nodes[None], axis=-1)
            out.append(np.einsum("xpq,pq->xp", np.exp(1j * omega * d) / (FOUR_PI * d), b.weights))
        return np.concatenate(out, axis=1)

    def project(self, panel_values, equilibria: list[EquilibriumData] | None = None) -> np.ndarray:
        """Collapse panel-level vectors (P, ...) onto the equilibrium densities, giving (N, ...)."""
        eq = equilibria or self.equilibria
        off = self.offsets
        v = np.asarray(panel_values)
        return np.stack([np.tensordot(eq[k].sigma, v[off[k]:off[k + 1]], axes=(0, 0))
                         for k in range(len(self.blocks))])

    def expand(self, coefficients, equilibria: list[EquilibriumData] | None = None) -> np.ndarray:
        """Panel density ``sum_k lambda_k sigma_k`` from per-obstacle coefficients."""
        eq = equilibria or self.equilibria
        return np.concatenate([c * e.sigma for c, e in zip(coefficients, eq)])


# --------------------------------------------------------------------------- functional API


def assemble_S_omega(scene: Scene, quad: QuadratureRule | None = None, omega=0.0, *,
                     far_quad: QuadratureRule | None = None) -> np.ndarray:
    return HelmholtzOperator(scene, quad, far_quad).matrix(omega)


def gfl_matrix(scene: Scene, eqdata: list[EquilibriumData] | None, quad: QuadratureRule | None = None,
               omega=0.0, *, far_quad: QuadratureRule | None = None) -> np.ndarray:
    """``M[l, k] = iint G_omega sigma_l sigma_k`` (Galerkin Foldy-Lax matrix)."""
    op = HelmholtzOperator(scene, quad, far_quad)
    _check_eps(scene, eqdata)
    return op.reduced_matrix(omega, eqdata)


def _check_eps(scene, eqdata):
    if eqdata is not None and any(abs(e.epsilon - scene.epsilon) > 1e-15 for e in eqdata):
        raise DomainError("equilibrium data must refer to the scene's epsilon")


def panel_integrals(scene: Scene, func, quad: QuadratureRule | None = None) -> np.ndarray:
    quad = quad or triangle_rule(3)
    out = []
    for mesh in scene.scaled_meshes:
        vals = np.asarray(func(quad.physical_nodes(mesh)))
        out.append(np.einsum("pq,pq...->p...", quad.physical_weights(mesh), vals))
    return np.concatenate(out, axis=0)


def rhs_projection(panel_data, eqdata: list[EquilibriumData], meshes=None) -> np.ndarray:
    """``q_l = sum_panels g * sigma * area`` over obstacle ``l``.

    ``panel_data`` is a list (one entry per obstacle) of either panel values
    (P_l, ...) , multiplied by the panel areas taken from ``meshes``, or of
    precomputed panel integrals (P_l, ...) when ``meshes`` is None.
    """
    out = []
    for l, (g, e) in enumerate(zip(panel_data, eqdata)):
        g = np.asarray(g, dtype=float)
        w = e.sigma if meshes is None else e.sigma * meshes[l].areas
        out.append(np.tensordot(w, g, axes=(0, 0)))
    return np.stack(out)


def potential_weights(scene: Scene, eqdata: list[EquilibriumData], points, omega,
                      quad: QuadratureRule | None = None) -> np.ndarray:
    """``w(x, k) = int_{Gamma_k} G_omega(|x - y|) sigma_k(y) dy`` for each point and obstacle."""
    _check_eps(scene, eqdata)
    pts = scene.check_exterior(points)
    quad = quad or default_quadrature()
    cols = []
    for mesh, e in zip(scene.scaled_meshes, eqdata):
        nodes = quad.physical_nodes(mesh)
        w = quad.physical_weights(mesh) * e.sigma[:, None]
        d = np.linalg.norm(pts[:, None, None, :] - nodes[None], axis=-1)
        cols.append(np.einsum("xpq,pq->x", np.exp(1j * omega * d) / (FOUR_PI * d), w))
    return np.stack(cols, axis=1)


def solve_dense(A, b, what="single-layer system", tol=1e-10):
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("error", scipy.linalg.LinAlgWarning)
            lu = scipy.linalg.lu_factor(A, check_finite=True)
            x = scipy.linalg.lu_solve(lu, b)
    except (np.linalg.LinAlgError, ValueError, scipy.linalg.LinAlgWarning) as exc:
        raise SolverError(f"{what}: dense solve failed (condition ~ {np.linalg.cond(A):.3e}): {exc}") from exc
    res = np.linalg.norm(A @ x - b) / max(np.linalg.norm(b), 1e-300)
    if not np.isfinite(res) or res > tol:
        raise SolverError(f"{what}: relative residual {res:.3e} exceeds {tol:.1e} "
                          f"(condition ~ {np.linalg.cond(A):.3e})")
    return x


def reference_solve_frequency(scene: Scene, quad: QuadratureRule | None, omega, g_panel_values,
                              *, operator: HelmholtzOperator | None = None) -> np.ndarray:
    """Full P0 Galerkin solve ``S_omega lambda = g`` (``g`` holds panel integrals of the data)."""
    if not np.imag(omega) > 0:
        raise DomainError(f"reference solves need Im(omega) > 0, got omega = {omega}")
    op = operator or HelmholtzOperator(scene, quad)
    return solve_dense(op.matrix(omega), np.asarray(g_panel_values, dtype=complex),
                       what=f"reference BEM at omega = {omega}")
