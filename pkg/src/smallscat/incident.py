"""Incident plane-wave fields ``u(x, t) = f(t - x.d)`` and their surface traces."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import ConfigError, DomainError

__all__ = [
    "IncidentField",
    "modulated_gaussian",
    "sigmoid_sine",
    "custom_profile",
    "eval",
    "grad",
    "dt",
    "sample_trace",
]

KINDS = ("modulated_gaussian", "sigmoid_sine", "custom_profile")


@dataclass(frozen=True, eq=False)
class IncidentField:
    """Plane wave travelling along the unit vector ``direction``.

    ``params`` holds the profile parameters: ``carrier``, ``width`` and ``delay``
    for the modulated Gaussian; ``carrier``, ``delay`` and ``steepness`` for the
    sigmoid-sine; ``times`` and ``values`` for a tabulated profile.
    ``amplitude`` multiplies the whole field.
    """

    kind: str
    direction: np.ndarray
    params: dict = field(default_factory=dict)
    amplitude: float = 1.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown incident kind {self.kind!r}; expected one of {KINDS}")
        d = np.asarray(self.direction, dtype=float).reshape(3)
        n = np.linalg.norm(d)
        if not n > 0:
            raise ConfigError("incident direction must be nonzero")
        d = d / n
        d.setflags(write=False)
        object.__setattr__(self, "direction", d)
        if self.kind == "custom_profile":
            tt = np.asarray(self.params["times"], dtype=float)
            vv = np.asarray(self.params["values"], dtype=float)
            spline = CubicSpline(tt, vv, extrapolate=False)
            object.__setattr__(self, "_spline", spline)
            object.__setattr__(self, "_dspline", spline.derivative())

    def scaled(self, factor: float) -> "IncidentField":
        return IncidentField(self.kind, self.direction, dict(self.params), self.amplitude * factor)

    # 1D profile and its derivative ------------------------------------------------

    def profile(self, tau):
        tau = np.asarray(tau, dtype=float)
        p = self.params
        if self.kind == "modulated_gaussian":
            w, s, mu = p["carrier"], p["width"], p["delay"]
            out = np.cos(w * tau) * np.exp(-s * (tau - mu) ** 2)
        elif self.kind == "sigmoid_sine":
            w, t0, k = p["carrier"], p["delay"], p.get("steepness", 2.0)
            x = tau - t0
            out = np.sin(w * x) * _sigmoid(k * x)
        else:
            out = np.nan_to_num(self._spline(tau), nan=0.0)
        return self.amplitude * out

    def profile_derivative(self, tau):
        tau = np.asarray(tau, dtype=float)
        p = self.params
        if self.kind == "modulated_gaussian":
            w, s, mu = p["carrier"], p["width"], p["delay"]
            g = np.exp(-s * (tau - mu) ** 2)
            out = g * (-w * np.sin(w * tau) - 2 * s * (tau - mu) * np.cos(w * tau))
        elif self.kind == "sigmoid_sine":
            w, t0, k = p["carrier"], p["delay"], p.get("steepness", 2.0)
            x = tau - t0
            sg = _sigmoid(k * x)
            out = w * np.cos(w * x) * sg + np.sin(w * x) * k * sg * (1 - sg)
        else:
            out = np.nan_to_num(self._dspline(tau), nan=0.0)
        return self.amplitude * out

    def tau(self, x, t):
        x = np.asarray(x, dtype=float)
        return np.asarray(t, dtype=float) - x @ self.direction


def _sigmoid(x):
    # 0.5 * (1 + tanh(x/2)) is overflow-free for large |x|
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def modulated_gaussian(direction, carrier=2 * np.pi, width=3.0, delay=3.0) -> IncidentField:
    """``cos(carrier tau) exp(-width (tau - delay)^2)``."""
    return IncidentField("modulated_gaussian", direction, {"carrier": carrier, "width": width, "delay": delay})


def sigmoid_sine(direction, carrier=2 * np.pi, delay=3.0, steepness=2.0) -> IncidentField:
    """``sin(carrier (tau - delay)) / (1 + exp(-steepness (tau - delay)))``."""
    return IncidentField("sigmoid_sine", direction, {"carrier": carrier, "delay": delay, "steepness": steepness})


def custom_profile(direction, times, values) -> IncidentField:
    """Tabulated profile, cubic-spline interpolated and zero outside the table."""
    return IncidentField("custom_profile", direction, {"times": list(times), "values": list(values)})


def eval(field: IncidentField, x, t):  # noqa: A001 - mirrors the operation name
    """Field value at points ``x`` (..., 3) and times ``t`` (broadcast against ``x[..., 0]``)."""
    return field.profile(field.tau(x, t))


def grad(field: IncidentField, x, t):
    """Spatial gradient, ``-d f'(tau)``; shape ``broadcast(x[..., 0], t) + (3,)``."""
    fp = field.profile_derivative(field.tau(x, t))
    return -np.asarray(fp)[..., None] * field.direction


def dt(field: IncidentField, x, t):
    """Time derivative ``f'(tau)``."""
    return field.profile_derivative(field.tau(x, t))


def sample_trace(field: IncidentField | None, mesh, times, quad) -> np.ndarray:
    """Dirichlet data ``-u_inc`` at the quadrature nodes of every panel.

    Returns an array of shape (panels, nodes, times).  ``field=None`` is the zero field.
    """
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or np.any(np.diff(times) <= 0):
        raise DomainError("times must be a strictly increasing 1D sequence")
    nodes = quad.physical_nodes(mesh)  # (panels, nodes, 3)
    if field is None:
        return np.zeros(nodes.shape[:2] + times.shape)
    proj = nodes @ field.direction
    return -field.profile(times[None, None, :] - proj[..., None])
