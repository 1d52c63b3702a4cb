"""Quadrature rules on the reference triangle and on edges.

The reference triangle has vertices (0,0), (1,0), (0,1) and area 1/2.
Points are stored in barycentric coordinates, weights in reference-area
scale (they sum to 1/2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class TriangleRule:
    points: np.ndarray  # (nq, 3) barycentric coordinates
    weights: np.ndarray  # (nq,), sums to 1/2
    exact_degree: int

    def __post_init__(self):
        self.points.setflags(write=False)
        self.weights.setflags(write=False)

    @property
    def ref_xy(self) -> np.ndarray:
        """Reference (xi, eta) coordinates, shape (nq, 2)."""
        return self.points[:, 1:]


def tri_rule_degree4() -> TriangleRule:
    """Symmetric 6-point rule, exact for bivariate polynomials of degree 4.

    Two 3-point orbits (Strang-Fix / Dunavant order 4).  Used for every
    matrix and load assembly with k <= 2.
    """
    a1, b1, w1 = 0.816847572980459, 0.091576213509771, 0.109951743655322
    a2, b2, w2 = 0.108103018168070, 0.445948490915965, 0.223381589678011
    pts = np.array(
        [
            [a1, b1, b1],
            [b1, a1, b1],
            [b1, b1, a1],
            [a2, b2, b2],
            [b2, a2, b2],
            [b2, b2, a2],
        ]
    )
    wts = 0.5 * np.array([w1, w1, w1, w2, w2, w2])
    return TriangleRule(points=pts, weights=wts, exact_degree=4)


def tri_rule_collapsed(degree: int) -> TriangleRule:
    """Tensor Gauss rule mapped to the triangle, exact for `degree`.

    Collapses the square [0,1]^2 via (xi, eta*(1-xi)); the Jacobian factor
    (1-xi) raises the xi-degree by one.  Heavier than the symmetric rules
    but generated from trusted Gauss-Legendre data for any degree.
    """
    if degree < 0:
        raise ValueError("degree must be nonnegative")
    n_xi = (degree + 2) // 2 + 1
    n_eta = (degree + 1) // 2 + 1
    x_xi, w_xi = gauss_rule_01(n_xi)
    x_eta, w_eta = gauss_rule_01(n_eta)
    xi = np.repeat(x_xi, n_eta)
    eta = np.tile(x_eta, n_xi) * (1.0 - xi)
    wts = np.repeat(w_xi * (1.0 - x_xi), n_eta) * np.tile(w_eta, n_xi)
    pts = np.column_stack([1.0 - xi - eta, xi, eta])
    return TriangleRule(points=pts, weights=wts, exact_degree=degree)


def gauss_rule_01(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes/weights on [0,1]; weights sum to 1."""
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def reference_monomial_integral(a: int, b: int) -> float:
    """Exact value of the integral of xi^a * eta^b over the reference triangle."""
    return math.factorial(a) * math.factorial(b) / math.factorial(a + b + 2)
