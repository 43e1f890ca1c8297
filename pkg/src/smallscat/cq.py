"""Convolution quadrature (CQ) with all time steps solved at once.

A causal convolution system ``K * lambda = q`` with transfer function
``K(omega)`` is discretised by a linear multistep method: the generating
function ``delta(z)`` turns ``omega`` into ``i delta(z)/dt``.  Sampling ``z`` on
the circle of radius ``contour_radius`` with a scaled FFT decouples the time
steps into independent frequency-domain solves.

Convention: transforms use ``exp(i omega t)``, so a Laplace variable ``s``
corresponds to ``omega = i s``; :func:`cq_frequencies` is the only place where
this translation happens.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NumericHealthError, SolverError
from .helmholtz_bem import solve_dense

__all__ = [
    "CQGrid",
    "TimeSeries",
    "cq_frequencies",
    "cq_forward",
    "cq_inverse",
    "cq_apply",
    "cq_convolve_solve",
]

log = logging.getLogger(__name__)

SYMBOLS = {
    "bdf1": lambda z: 1.0 - z,
    "bdf2": lambda z: (1.0 - z) + 0.5 * (1.0 - z) ** 2,
}


@dataclass(frozen=True)
class CQGrid:
    """Uniform time grid ``t_n = n dt``, ``n = 0 .. steps - 1``, plus the CQ contour."""

    dt: float
    steps: int
    symbol: str = "bdf2"
    tol: float = 1e-12
    contour_radius: float | None = None

    def __post_init__(self):
        if not self.dt > 0:
            raise DomainError(f"dt must be positive, got {self.dt}")
        if self.steps < 2:
            raise DomainError(f"need at least 2 time samples, got {self.steps}")
        if self.symbol not in SYMBOLS:
            raise DomainError(f"unknown multistep symbol {self.symbol!r}; expected one of {sorted(SYMBOLS)}")
        if not 0 < self.radius < 1:
            raise DomainError(f"contour radius must lie in (0, 1), got {self.radius}")

    @classmethod
    def from_final_time(cls, T: float, intervals: int, symbol="bdf2", **kw) -> "CQGrid":
        """Grid with ``intervals`` steps of size ``T/intervals`` (``intervals + 1`` samples)."""
        return cls(T / intervals, intervals + 1, symbol, **kw)

    @property
    def radius(self) -> float:
        if self.contour_radius is not None:
            return self.contour_radius
        return self.tol ** (1.0 / (2 * self.steps))

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(self.steps)

    @property
    def final_time(self) -> float:
        return self.dt * (self.steps - 1)

    @property
    def z_nodes(self) -> np.ndarray:
        # computed on the first half and mirrored, so conjugate pairs are exact
        L = self.steps
        half = self.radius * np.exp(-2j * np.pi * np.arange(L // 2 + 1) / L)
        return np.concatenate([half, np.conj(half[1:(L + 1) // 2][::-1])])

    @property
    def laplace_nodes(self) -> np.ndarray:
        return SYMBOLS[self.symbol](self.z_nodes) / self.dt

    def describe(self) -> str:
        return f"{self.symbol} dt={self.dt:.6g} steps={self.steps} radius={self.radius:.15g}"


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """Samples ``values[n]`` at ``t_n = n dt``; trailing axes hold vector components."""

    values: np.ndarray
    dt: float

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(len(self.values))

    def __len__(self):
        return len(self.values)


def cq_frequencies(grid: CQGrid) -> np.ndarray:
    """Fourier-Laplace frequencies ``omega_l = i delta(z_l)/dt``; all have positive imaginary part."""
    return 1j * grid.laplace_nodes


def _as_values(series, grid):
    v = series.values if isinstance(series, TimeSeries) else np.asarray(series)
    if len(v) != grid.steps:
        raise DomainError(f"series has {len(v)} samples but the grid has {grid.steps}")
    return v


def cq_forward(series, grid: CQGrid) -> np.ndarray:
    """Scaled DFT ``sum_n radius**n values[n] exp(-2 pi i n l / L)`` along the time axis."""
    v = _as_values(series, grid)
    scaled = (grid.radius ** np.arange(grid.steps)).reshape((-1,) + (1,) * (v.ndim - 1)) * v
    if np.iscomplexobj(scaled):
        return np.fft.fft(scaled, axis=0)
    # real data: half spectrum plus exact conjugate mirror
    half = np.fft.rfft(scaled, axis=0)
    L = grid.steps
    return np.concatenate([half, np.conj(half[1:(L + 1) // 2][::-1])], axis=0)


def cq_inverse(samples, grid: CQGrid, *, real: bool = True, imag_tol: float = 1e-8) -> TimeSeries:
    """Inverse of :func:`cq_forward`.

    With ``real=True`` the imaginary residue is checked against ``imag_tol``
    times the largest real magnitude and discarded.
    """
    s = np.asarray(samples)
    if len(s) != grid.steps:
        raise DomainError(f"got {len(s)} frequency samples but the grid has {grid.steps}")
    unscale = grid.radius ** (-np.arange(grid.steps, dtype=float))
    v = np.fft.ifft(s, axis=0) * unscale.reshape((-1,) + (1,) * (s.ndim - 1))
    if not real:
        return TimeSeries(v, grid.dt)
    mag = np.max(np.abs(v.real)) if v.size else 0.0
    resid = np.max(np.abs(v.imag)) if v.size else 0.0
    if resid > imag_tol * max(mag, 1e-300) and resid > 1e-300:
        raise NumericHealthError(f"imaginary residue {resid:.3e} exceeds {imag_tol:.1e} x real magnitude {mag:.3e}")
    return TimeSeries(v.real.copy(), grid.dt)


def cq_apply(transfer_fn, series, grid: CQGrid, *, real: bool = True) -> TimeSeries:
    """Discrete convolution ``K(d/dt) series`` for a scalar or matrix-valued ``transfer_fn(omega)``."""
    freqs = cq_frequencies(grid)
    hat = cq_forward(series, grid)
    out = []
    for w, h in zip(freqs, hat):
        k = np.asarray(transfer_fn(w))
        out.append(k @ h if k.ndim == 2 else k * h)
    out = np.stack(out)
    return cq_inverse(out, grid, real=real)


def cq_convolve_solve(transfer, rhs, grid: CQGrid, points=None, *, symmetric: bool = False,
                      threads: int = 1, residual_tol: float = 1e-8):
    """Solve ``K * lambda = q`` by CQ and evaluate ``W * lambda`` at observation points.

    ``transfer`` provides ``matrix_at(omega)`` and, when ``points`` is given,
    ``field_weights_at(omega, points)``.  ``rhs`` has shape (steps, N).  With
    ``symmetric=True`` only half the frequencies are solved and the rest filled
    in by conjugation, valid for real data and reflection-symmetric kernels.

    Returns ``(modes, fields)``: TimeSeries of shape (steps, N) and
    (steps, points) (``fields`` is None without points).
    """
    q = np.asarray(_as_values(rhs, grid), dtype=float)
    if q.ndim == 1:
        q = q[:, None]
    freqs = cq_frequencies(grid)
    qhat = cq_forward(q, grid)
    L = grid.steps
    idx = np.arange(L // 2 + 1) if symmetric else np.arange(L)
    pts = None if points is None else np.atleast_2d(np.asarray(points, dtype=float))

    def solve_one(l):
        w = freqs[l]
        A = np.atleast_2d(transfer.matrix_at(w))
        if not np.all(np.isfinite(A)):
            raise SolverError(f"transfer matrix not finite at frequency index {l}, omega = {w}")
        try:
            lam = solve_dense(A, qhat[l].astype(complex), what=f"CQ frequency {l} (omega = {w:.6g})",
                              tol=residual_tol)
        except SolverError as exc:
            raise SolverError(f"singular or ill-conditioned transfer at frequency index {l}, omega = {w}: {exc}") from exc
        u = transfer.field_weights_at(w, pts) @ lam if pts is not None else None
        return lam, u

    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            results = list(ex.map(solve_one, idx))
    else:
        results = [solve_one(l) for l in idx]

    lam_hat = np.empty((L, q.shape[1]), dtype=complex)
    u_hat = np.empty((L, len(pts)), dtype=complex) if pts is not None else None
    for l, (lam, u) in zip(idx, results):
        lam_hat[l] = lam
        if u_hat is not None:
            u_hat[l] = u
    if symmetric:
        rest = np.arange(L // 2 + 1, L)
        lam_hat[rest] = np.conj(lam_hat[L - rest])
        if u_hat is not None:
            u_hat[rest] = np.conj(u_hat[L - rest])
    modes = cq_inverse(lam_hat, grid)
    fields = cq_inverse(u_hat, grid) if u_hat is not None else None
    return modes, fields
