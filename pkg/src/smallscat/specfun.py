"""Order-zero spherical Bessel/Hankel functions and the Helmholtz kernel.

Frequencies follow the Fourier-Laplace convention ``f(omega) = int exp(i omega t) f(t) dt``,
so outgoing waves are ``exp(i omega r)`` and physical frequencies have ``Im omega > 0``.
All functions accept scalars or numpy arrays.
"""

from __future__ import annotations

import numpy as np

from .errors import DomainError

__all__ = ["j0", "h0_first", "helmholtz_kernel", "laplace_kernel"]

J0_SERIES_RADIUS = 1e-4


def j0(z):
    """Spherical Bessel function ``sin(z)/z``; Taylor series for ``|z| < 1e-4``."""
    z = np.asarray(z, dtype=complex)
    small = np.abs(z) < J0_SERIES_RADIUS
    safe = np.where(small, 1.0, z)
    z2 = z * z
    series = 1 - z2 / 6 * (1 - z2 / 20 * (1 - z2 / 42))
    out = np.where(small, series, np.sin(safe) / safe)
    return out[()] if out.ndim == 0 else out


def h0_first(z):
    """Spherical Hankel function of the first kind, ``-i exp(iz)/z``."""
    z = np.asarray(z, dtype=complex)
    if np.any(z == 0):
        raise DomainError("h0_first has a pole at z = 0")
    out = -1j * np.exp(1j * z) / z
    return out[()] if out.ndim == 0 else out


def helmholtz_kernel(r, omega):
    """``exp(i omega r) / (4 pi r)`` for ``r > 0``."""
    r = np.asarray(r, dtype=float)
    if np.any(~(r > 0)):
        raise DomainError("helmholtz_kernel requires r > 0")
    out = np.exp(1j * omega * r) / (4 * np.pi * r)
    return out[()] if out.ndim == 0 else out


def laplace_kernel(r):
    r = np.asarray(r, dtype=float)
    if np.any(~(r > 0)):
        raise DomainError("laplace_kernel requires r > 0")
    return 1.0 / (4 * np.pi * r)
