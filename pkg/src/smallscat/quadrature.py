"""Symmetric quadrature rules on the reference triangle."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["QuadratureRule", "triangle_rule", "collapsed_gauss"]


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """Nodes in barycentric coordinates and weights summing to 1/2 (reference-triangle area)."""

    order: int
    barycentric: np.ndarray  # (n, 3)
    weights: np.ndarray  # (n,)
    name: str = ""

    def __post_init__(self):
        if np.any(self.weights <= 0):
            raise ValueError("quadrature weights must be positive")
        if abs(self.weights.sum() - 0.5) > 1e-13:
            raise ValueError("quadrature weights must sum to the reference-triangle area 1/2")

    @property
    def n_nodes(self) -> int:
        return len(self.weights)

    def physical_nodes(self, mesh) -> np.ndarray:
        """Node coordinates on every panel, shape (panels, nodes, 3)."""
        return np.einsum("qa,pad->pqd", self.barycentric, mesh.corners)

    def physical_weights(self, mesh) -> np.ndarray:
        """Weights scaled to each panel, shape (panels, nodes); rows sum to the panel areas."""
        return 2.0 * mesh.areas[:, None] * self.weights[None, :]


def _orbit3(a, w):
    b = 1 - 2 * a
    return [(b, a, a), (a, b, a), (a, a, b)], [w] * 3


def _rule(order, name, groups):
    bary, wts = [], []
    for pts, ws in groups:
        bary += pts
        wts += ws
    w = np.array(wts)
    return QuadratureRule(order, np.array(bary), 0.5 * w / w.sum(), name)


def triangle_rule(n_points: int = 7) -> QuadratureRule:
    """Dunavant-type symmetric rules with 1, 3, 6 or 7 points (degrees 1, 2, 4, 5)."""
    third = 1.0 / 3.0
    if n_points == 1:
        return _rule(1, "centroid", [([(third, third, third)], [1.0])])
    if n_points == 3:
        return _rule(2, "3-point", [_orbit3(1.0 / 6.0, 1.0 / 3.0)])
    if n_points == 6:
        return _rule(4, "6-point", [
            _orbit3(0.445948490915965, 0.223381589678011),
            _orbit3(0.091576213509771, 0.109951743655322),
        ])
    if n_points == 7:
        return _rule(5, "7-point", [
            ([(third, third, third)], [0.225]),
            _orbit3(0.470142064105115, 0.132394152788506),
            _orbit3(0.101286507323456, 0.125939180544827),
        ])
    raise ValueError(f"no symmetric rule with {n_points} points; choose 1, 3, 6 or 7")


def collapsed_gauss(n: int) -> QuadratureRule:
    """Gauss-Legendre tensor rule mapped to the triangle by the Duffy collapse (n*n nodes).

    Exact for polynomials of degree ``2n - 2``; used for brute-force reference integrals.
    """
    x, w = np.polynomial.legendre.leggauss(n)
    x, w = 0.5 * (x + 1), 0.5 * w
    u, v = np.meshgrid(x, x, indexing="ij")
    wu, wv = np.meshgrid(w, w, indexing="ij")
    l1 = u.ravel()
    l2 = ((1 - u) * v).ravel()
    weights = (wu * wv * (1 - u)).ravel()
    bary = np.stack([1 - l1 - l2, l1, l2], axis=1)
    return QuadratureRule(2 * n - 1, bary, weights, f"collapsed-gauss-{n}")
