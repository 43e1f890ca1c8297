"""Error norms, log-log slope fits and point sets for experiments."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import NumericHealthError

__all__ = ["SlopeFit", "fit_slope", "linf_error", "fibonacci_sphere_points"]


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    intercept: float
    residual: float  # root-mean-square misfit in log space

    def predict(self, eps):
        return np.exp(self.intercept) * np.asarray(eps, dtype=float) ** self.slope


def fit_slope(points) -> SlopeFit:
    """Least-squares fit of ``log(error) = slope * log(eps) + intercept``."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 2:
        raise ValueError("fit_slope needs at least two (epsilon, error) pairs")
    if np.any(pts <= 0) or not np.all(np.isfinite(pts)):
        raise NumericHealthError(f"fit_slope needs positive finite values, got {pts.tolist()}")
    x, y = np.log(pts[:, 0]), np.log(pts[:, 1])
    A = np.stack([x, np.ones_like(x)], axis=1)
    (slope, intercept), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = float(np.sqrt(np.mean((A @ [slope, intercept] - y) ** 2)))
    return SlopeFit(float(slope), float(intercept), resid)


def linf_error(a, b) -> float:
    """Max over time samples (and points) of ``|a - b|``."""
    return float(np.max(np.abs(np.asarray(a) - np.asarray(b))))


def fibonacci_sphere_points(n: int, radius: float = 1.0, center=(0.0, 0.0, 0.0)) -> np.ndarray:
    """``n`` quasi-uniform points on a sphere from the golden-angle (Fibonacci) lattice."""
    if n < 1:
        raise ValueError("need at least one point")
    i = np.arange(n)
    z = 1.0 - (2.0 * i + 1.0) / n
    r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    phi = np.pi * (3.0 - np.sqrt(5.0)) * i
    pts = np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)
    return radius * pts + np.asarray(center, dtype=float)
