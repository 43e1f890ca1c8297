"""The three asymptotic small-obstacle models and the reference BEM as transfer systems.

Every model is a causal convolution system ``K * lambda = q`` with one unknown
per obstacle (per panel for the reference), plus a map from ``lambda`` to the
scattered field.  In the frequency domain these are a matrix ``matrix_at(omega)``,
a weight matrix ``field_weights_at(omega, points)`` and time-sampled data
``rhs(incident, times)``; :func:`smallscat.cq.cq_convolve_solve` does the rest.

* ``gfl``: Galerkin Foldy-Lax, basis = equilibrium densities.
* ``simplified``: obstacles replaced by capacitance-equivalent spheres (closed-form
  kernel) with a moment-corrected field.
* ``born``: diagonal system ``diag(c) lambda = -u_inc(c) c``, i.e. no multiple scattering.
* ``reference``: full piecewise-constant Galerkin BEM on the same meshes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import incident as inc
from .errors import ConfigError, DomainError
from .geometry import Scene
from .helmholtz_bem import HelmholtzOperator, rhs_projection
from .laplace_bem import EquilibriumData
from .quadrature import QuadratureRule
from .specfun import h0_first, j0

__all__ = [
    "CapacitanceSummary",
    "TransferSystem",
    "simplified_matrix",
    "simplified_rhs",
    "gfl_rhs",
    "born_coefficients",
    "born_field",
    "simplified_field_weights",
    "simplified_field_direct",
    "make_transfer",
    "MODEL_KINDS",
]

FOUR_PI = 4.0 * np.pi
MODEL_KINDS = ("gfl", "simplified", "born", "reference")
SMALL_OMEGA = 1e-6


@dataclass(frozen=True, eq=False)
class CapacitanceSummary:
    """Per-obstacle capacitance ``c``, moment ``p`` and center at one scale."""

    capacitances: np.ndarray
    moments: np.ndarray
    centers: np.ndarray
    epsilon: float = 1.0

    def __post_init__(self):
        c = np.asarray(self.capacitances, dtype=float).reshape(-1)
        object.__setattr__(self, "capacitances", c)
        object.__setattr__(self, "moments", np.asarray(self.moments, dtype=float).reshape(len(c), 3))
        object.__setattr__(self, "centers", np.asarray(self.centers, dtype=float).reshape(len(c), 3))
        if np.any(c <= 0):
            raise DomainError("capacitances must be positive")

    @classmethod
    def from_equilibria(cls, eqdata: list[EquilibriumData], scene: Scene) -> "CapacitanceSummary":
        summary = cls([e.capacitance for e in eqdata], [e.moment for e in eqdata], scene.centers, scene.epsilon)
        rho_max = scene.epsilon * scene.radii * (1 + 1e-9)
        if np.any(summary.rho > rho_max):
            k = int(np.argmax(summary.rho / rho_max))
            raise DomainError(f"obstacle {k}: capacitance radius {summary.rho[k]:.6g} exceeds the bounding radius")
        return summary

    @property
    def rho(self) -> np.ndarray:
        """Radii of the capacitance-equivalent spheres, ``c / (4 pi)``."""
        return self.capacitances / FOUR_PI

    def __len__(self):
        return len(self.capacitances)

    def distances(self, points) -> tuple[np.ndarray, np.ndarray]:
        """``(x - c_k)`` and ``|x - c_k|`` for points (n, 3): shapes (n, N, 3) and (n, N)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        diff = pts[:, None, :] - self.centers[None]
        return diff, np.linalg.norm(diff, axis=-1)


# --------------------------------------------------------------------------- simplified model


def simplified_matrix(summary: CapacitanceSummary, omega) -> np.ndarray:
    """Closed-form sphere-sphere matrix built from ``j0`` and ``h0_first``."""
    rho = summary.rho
    c = summary.capacitances
    D = np.linalg.norm(summary.centers[:, None] - summary.centers[None], axis=-1)
    n = len(rho)
    off = ~np.eye(n, dtype=bool)
    if np.any(D[off] == 0):
        raise DomainError("two obstacles share the same center")
    scale = max(rho.max(), D.max())
    if abs(omega) * scale < SMALL_OMEGA:
        M = np.zeros((n, n), dtype=complex)
        M[off] = (np.outer(c, c) / (FOUR_PI * np.where(off, D, 1.0)))[off]
        M[np.diag_indices(n)] = c
        return M
    jr = j0(omega * rho)
    Dsafe = np.where(off, D, 1.0)
    M = FOUR_PI * 1j * omega * np.outer(rho * jr, rho * jr) * h0_first(omega * Dsafe)
    M[np.diag_indices(n)] = FOUR_PI * 1j * omega * rho**2 * jr * h0_first(omega * rho)
    upper = np.triu_indices(n, 1)
    M[upper[1], upper[0]] = M[upper]  # exact reciprocity
    return M


def simplified_rhs(summary: CapacitanceSummary, field: inc.IncidentField, t) -> np.ndarray:
    """``q_l(t) = -u_inc(c_l, t) c_l - grad u_inc(c_l, t) . p_l``; shape (len(t), N)."""
    t = np.atleast_1d(np.asarray(t, dtype=float))[:, None]
    u = inc.eval(field, summary.centers[None], t)
    g = inc.grad(field, summary.centers[None], t)
    return -u * summary.capacitances - np.einsum("tkd,kd->tk", g, summary.moments)


def simplified_field_weights(summary: CapacitanceSummary, points, omega) -> np.ndarray:
    """Monopole plus moment-corrected dipole weights, shape (points, N)."""
    diff, R = summary.distances(points)
    e = np.exp(1j * omega * R)
    mono = e * summary.capacitances / (FOUR_PI * R)
    cp = -np.einsum("nkd,kd->nk", diff, summary.moments)  # (c_k - x) . p_k
    dip = cp * e * (1j * omega * R - 1.0) / (FOUR_PI * R**3)
    return mono + dip


def simplified_field_direct(summary: CapacitanceSummary, lam: Callable, dlam: Callable, points, t) -> np.ndarray:
    """Time-domain field from the mode functions ``lam`` and their derivatives ``dlam``.

    ``lam(tau)`` and ``dlam(tau)`` map an array of times to ``tau.shape + (N,)``.  Output has
    shape (len(t), points).  This is the retarded-time image of
    :func:`simplified_field_weights`.
    """
    diff, R = summary.distances(points)
    t = np.atleast_1d(np.asarray(t, dtype=float))
    xp = np.einsum("nkd,kd->nk", diff, summary.moments)  # (x - c_k) . p_k
    k = np.arange(len(summary))
    shifted = t[:, None, None] - R[None]
    lam_v = lam(shifted)[..., k, k]
    dlam_v = dlam(shifted)[..., k, k]
    term1 = lam_v / (FOUR_PI * R) * (summary.capacitances + xp / R**2)
    term2 = dlam_v * xp / (FOUR_PI * R**2)
    return np.sum(term1 + term2, axis=-1)


# --------------------------------------------------------------------------- Born model


def born_coefficients(summary: CapacitanceSummary, field: inc.IncidentField, times) -> np.ndarray:
    """``lambda_k(t) = -u_inc(c_k, t)``; shape (N, len(times))."""
    t = np.atleast_1d(np.asarray(times, dtype=float))
    return -inc.eval(field, summary.centers[:, None, :], t[None, :])


def born_field(summary: CapacitanceSummary, field: inc.IncidentField, x, t, scene: Scene | None = None):
    """Retarded Born field ``-sum_k u_inc(c_k, t - R_k) c_k / (4 pi R_k)``.

    ``x`` is one point (3,) or several (n, 3); the result has shape
    ``(len(t),)`` or ``(len(t), n)`` accordingly.
    """
    single = np.ndim(x) == 1
    if scene is not None:
        scene.check_exterior(x)
    _, R = summary.distances(x)
    t = np.atleast_1d(np.asarray(t, dtype=float))
    u = inc.eval(field, summary.centers[None, None], t[:, None, None] - R[None])
    out = -np.sum(u * summary.capacitances / (FOUR_PI * R[None]), axis=-1)
    return out[:, 0] if single else out


# --------------------------------------------------------------------------- Galerkin Foldy-Lax data


def gfl_rhs(scene: Scene, eqdata: list[EquilibriumData], field: inc.IncidentField | None, t,
            quad: QuadratureRule | None = None) -> np.ndarray:
    """``q_l(t) = -int u_inc sigma_l`` by quadrature of the surface trace; shape (len(t), N)."""
    from .quadrature import triangle_rule

    quad = quad or triangle_rule(3)
    t = np.atleast_1d(np.asarray(t, dtype=float))
    panel = []
    for mesh in scene.scaled_meshes:
        trace = inc.sample_trace(field, mesh, t, quad)  # (P, q, T)
        panel.append(np.einsum("pq,pqt->pt", quad.physical_weights(mesh), trace))
    return rhs_projection(panel, eqdata).T


# --------------------------------------------------------------------------- transfer systems


@dataclass(eq=False)
class TransferSystem:
    """Frequency-domain description of one model.

    ``matrix_at(omega)`` is (n, n); ``field_weights_at(omega, points)`` is
    (points, n); ``rhs(incident, times)`` is (len(times), n).  ``n`` is the
    number of obstacles, or of panels for the reference model.
    """

    kind: str
    size: int
    matrix_at: Callable
    field_weights_at: Callable
    rhs: Callable
    summary: CapacitanceSummary | None = None
    operator: HelmholtzOperator | None = None


def make_transfer(kind: str, scene: Scene, eqdata: list[EquilibriumData] | None = None,
                  summary: CapacitanceSummary | None = None, quad: QuadratureRule | None = None,
                  *, far_quad: QuadratureRule | None = None, operator: HelmholtzOperator | None = None) -> TransferSystem:
    """Bind one model kind to a scene at its epsilon."""
    if kind not in MODEL_KINDS:
        raise ConfigError(f"unknown model {kind!r}; expected one of {MODEL_KINDS}")
    if kind in ("gfl", "reference"):
        operator = operator or HelmholtzOperator(scene, quad, far_quad)
        eqdata = operator.equilibria if eqdata is None else eqdata
    elif eqdata is None and summary is None:
        raise ConfigError(f"model {kind!r} needs equilibrium data or a capacitance summary")
    if eqdata is not None:
        if any(abs(e.epsilon - scene.epsilon) > 1e-15 for e in eqdata):
            raise ConfigError("equilibrium data and scene refer to different epsilon")
        summary = summary or CapacitanceSummary.from_equilibria(eqdata, scene)
    n = len(scene)

    if kind == "simplified":
        return TransferSystem(
            kind, n,
            matrix_at=lambda w: simplified_matrix(summary, w),
            field_weights_at=lambda w, pts: simplified_field_weights(summary, scene.check_exterior(pts), w),
            rhs=lambda field, t: simplified_rhs(summary, field, t),
            summary=summary,
        )
    if kind == "born":
        c = summary.capacitances
        zero_p = CapacitanceSummary(c, np.zeros((n, 3)), summary.centers, summary.epsilon)
        return TransferSystem(
            kind, n,
            matrix_at=lambda w: np.diag(c).astype(complex),
            field_weights_at=lambda w, pts: simplified_field_weights(zero_p, scene.check_exterior(pts), w),
            rhs=lambda field, t: -inc.eval(field, summary.centers[None], np.atleast_1d(t)[:, None]) * c,
            summary=summary,
        )

    op = operator

    def panel_rhs(field, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        return op.panel_integrals(lambda nodes: -field.profile(t - (nodes @ field.direction)[..., None]))

    if kind == "gfl":
        return TransferSystem(
            kind, n,
            matrix_at=lambda w: op.reduced_matrix(w, eqdata),
            field_weights_at=lambda w, pts: op.project(op.field_weights(w, pts).T, eqdata).T,
            rhs=lambda field, t: op.project(panel_rhs(field, t), eqdata).T,
            summary=summary, operator=op,
        )
    return TransferSystem(
        "reference", op.n_panels,
        matrix_at=op.matrix,
        field_weights_at=op.field_weights,
        rhs=lambda field, t: panel_rhs(field, t).T,
        summary=summary, operator=op,
    )
