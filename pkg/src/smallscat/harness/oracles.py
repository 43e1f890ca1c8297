"""Independent numerical checks bundled for ``smallscat oracle`` and the acceptance suite."""

from __future__ import annotations

import time
from dataclasses import dataclass
from types import SimpleNamespace

import numba
import numpy as np

from ..cq import CQGrid, cq_convolve_solve, cq_forward, cq_inverse
from ..geometry import Obstacle, Scene, icosphere
from ..laplace_bem import resolve_on_scaled_mesh, scale_equilibrium, solve_equilibrium
from ..models import CapacitanceSummary, simplified_matrix
from ..quadrature import triangle_rule
from .metrics import fit_slope

__all__ = [
    "OracleCheck",
    "sphere_nodes",
    "sphere_pair_integral",
    "brute_force_sphere_matrix",
    "addition_theorem_check",
    "scaling_check",
    "cq_roundtrip_error",
    "ode_kernel_errors",
    "run_checks",
]

FOUR_PI = 4.0 * np.pi


@dataclass(frozen=True)
class OracleCheck:
    name: str
    passed: bool
    value: float
    threshold: float
    detail: str = ""
    seconds: float = 0.0

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"{tag} {self.name}: {self.value:.4g} (threshold {self.threshold:.4g}) {self.detail} [{self.seconds:.1f}s]".rstrip()


# --------------------------------------------------------------------------- sphere quadrature


def sphere_nodes(level: int, radius: float, center, n_points: int = 3):
    """Quadrature on the exact sphere: icosphere nodes projected radially, with the projection Jacobian.

    Returns nodes (n, 3) and weights (n,) whose sum approximates ``4 pi radius**2``.
    """
    mesh = icosphere(level, 1.0)
    rule = triangle_rule(n_points)
    y = rule.physical_nodes(mesh)  # (P, q, 3) on the flat facets
    w = rule.physical_weights(mesh)
    r = np.linalg.norm(y, axis=-1)
    jac = np.einsum("pd,pqd->pq", mesh.normals, y) / r**3
    nodes = np.asarray(center, float) + radius * (y / r[..., None])
    return nodes.reshape(-1, 3), (radius**2 * w * jac).ravel()


@numba.njit(cache=True, fastmath=False)
def _helmholtz_double_sum(x, wx, y, wy, omega_re, omega_im, remainder_only):
    w = complex(omega_re, omega_im)
    total = 0j
    for i in range(x.shape[0]):
        row = 0j
        for j in range(y.shape[0]):
            d0 = x[i, 0] - y[j, 0]
            d1 = x[i, 1] - y[j, 1]
            d2 = x[i, 2] - y[j, 2]
            r = np.sqrt(d0 * d0 + d1 * d1 + d2 * d2)
            if r == 0.0:
                row += wy[j] * (1j * w) / FOUR_PI
            elif remainder_only:
                row += wy[j] * (np.exp(1j * w * r) - 1.0) / (FOUR_PI * r)
            else:
                row += wy[j] * np.exp(1j * w * r) / (FOUR_PI * r)
        total += wx[i] * row
    return total


def sphere_pair_integral(level, rho_a, center_a, rho_b, center_b, omega, n_points=3, same=False):
    """Brute-force tensor quadrature of ``int int G_omega(|x - y|) dx dy`` over two spheres.

    For ``same=True`` (one sphere against itself) the smooth part ``G_omega - G_0`` is
    integrated numerically and the Newtonian self-energy ``4 pi rho**3`` of a uniform
    spherical layer is added.
    """
    xa, wa = sphere_nodes(level, rho_a, center_a, n_points)
    if same:
        rem = _helmholtz_double_sum(xa, wa, xa, wa, float(np.real(omega)), float(np.imag(omega)), True)
        return FOUR_PI * rho_a**3 + rem
    xb, wb = sphere_nodes(level, rho_b, center_b, n_points)
    return _helmholtz_double_sum(xa, wa, xb, wb, float(np.real(omega)), float(np.imag(omega)), False)


def brute_force_sphere_matrix(summary: CapacitanceSummary, omega, level: int, self_points=3, cross_points=1):
    n = len(summary)
    rho, C = summary.rho, summary.centers
    M = np.empty((n, n), dtype=complex)
    for l in range(n):
        M[l, l] = sphere_pair_integral(level, rho[l], C[l], rho[l], C[l], omega, self_points, same=True) / rho[l] ** 2
        for k in range(l + 1, n):
            v = sphere_pair_integral(level, rho[l], C[l], rho[k], C[k], omega, cross_points) / (rho[l] * rho[k])
            M[l, k] = M[k, l] = v
    return M


def addition_theorem_check(level: int, omega=1j + 2 * np.pi, separation=3.0):
    """Max relative entry error of the closed-form sphere matrix against brute force.

    The spheres are capacitance-matched to radius-1 icospheres of the same
    refinement level, with centers ``separation`` apart.
    """
    mesh = icosphere(level, 1.0)
    eq = solve_equilibrium(mesh, center=np.zeros(3))
    centers = np.array([[0.0, 0.0, 0.0], [separation, 0.0, 0.0]])
    summary = CapacitanceSummary([eq.capacitance] * 2, np.zeros((2, 3)), centers)
    closed = simplified_matrix(summary, omega)
    brute = brute_force_sphere_matrix(summary, omega, level)
    return float(np.max(np.abs(brute - closed) / np.abs(closed)))


# --------------------------------------------------------------------------- other checks


def scaling_check(obstacle: Obstacle, epsilon: float):
    """``(identity error, re-solve error)`` for ``c`` and ``p`` scaling at ``epsilon``."""
    ref = solve_equilibrium(obstacle.mesh, center=obstacle.center)
    scaled = scale_equilibrium(ref, epsilon)
    ident = max(abs(scaled.capacitance - epsilon * ref.capacitance) / (epsilon * ref.capacitance),
                np.max(np.abs(scaled.moment - epsilon**2 * ref.moment)))
    fresh = resolve_on_scaled_mesh(obstacle, epsilon)
    scale_p = max(np.max(np.abs(scaled.moment)), epsilon**2 * 1e-3)
    resolve = max(abs(fresh.capacitance - scaled.capacitance) / scaled.capacitance,
                  np.max(np.abs(fresh.moment - scaled.moment)) / scale_p)
    return float(ident), float(resolve)


def cq_roundtrip_error(steps=513, seed=0):
    grid = CQGrid(1.0 / steps, steps)
    v = np.random.default_rng(seed).standard_normal(steps)
    back = cq_inverse(cq_forward(v, grid), grid).values
    return float(np.max(np.abs(back - v)) / np.max(np.abs(v)))


def ode_kernel_errors(symbol="bdf2", T=30.0, base=128, halvings=4, a=1.0):
    """Errors of CQ for ``K(omega) = 1/(-i omega + a)`` with exact ``lambda = q' + a q``.

    ``q`` is flat at ``t = 0`` and negligible at ``T``: the scaled DFT wraps
    ``radius**steps * q(T) / dt`` back onto the first samples, which would
    otherwise mask the order of the multistep method.  Returns ``(dts, errors)``
    over ``halvings + 1`` grids.
    """
    dts, errs = [], []
    for h in range(halvings + 1):
        n = base * 2**h
        grid = CQGrid.from_final_time(T, n, symbol)
        t = grid.times
        q = t**5 * np.exp(-t) / 120.0
        exact = (5 * t**4 - t**5) * np.exp(-t) / 120.0 + a * q
        kernel = SimpleNamespace(matrix_at=lambda w: np.array([[1.0 / (-1j * w + a)]]))
        lam = cq_convolve_solve(kernel, q, grid)[0].values[:, 0]
        dts.append(T / n)
        errs.append(float(np.max(np.abs(lam - exact))))
    return np.array(dts), np.array(errs)


def run_checks(scene: Scene | None = None, quick: bool = False) -> list[OracleCheck]:
    """Closed-form vs brute-force sphere kernels, scaling identities and CQ checks."""
    checks = []

    def timed(name, fn, threshold, compare, detail=""):
        t0 = time.perf_counter()
        value = fn()
        checks.append(OracleCheck(name, compare(value, threshold), value, threshold, detail, time.perf_counter() - t0))

    timed("addition theorem, closed vs brute-force sphere kernel (level 3)",
          lambda: addition_theorem_check(3), 1e-2, lambda v, t: v <= t)
    if not quick:
        coarse = checks[-1].value
        timed("addition theorem at level 4 (must improve on level 3)",
              lambda: addition_theorem_check(4), coarse, lambda v, t: v < t)
    timed("CQ forward/inverse roundtrip", cq_roundtrip_error, 1e-10, lambda v, t: v <= t)
    dts, errs = ode_kernel_errors(halvings=2 if quick else 4)
    slope = fit_slope(np.stack([dts, errs], axis=1)).slope
    checks.append(OracleCheck("CQ BDF2 ODE-kernel dt slope", abs(slope - 2.0) <= 0.3, slope, 2.0, "(+-0.3)"))
    obstacles = scene.obstacles if scene is not None else (Obstacle(icosphere(2, 1.0), np.zeros(3), 1.0),)
    for k, obs in enumerate(obstacles[:1] if quick else obstacles):
        ident, resolve = scaling_check(obs, 0.1)
        checks.append(OracleCheck(f"obstacle {k} scaling identity", ident <= 1e-12, ident, 1e-12))
        checks.append(OracleCheck(f"obstacle {k} scaling vs re-solve", resolve <= 1e-6, resolve, 1e-6))
    return checks
