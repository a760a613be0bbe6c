"""Quadrature rules for the standard Gaussian measure Dz = e^{-z^2/2} dz / sqrt(2 pi)."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# mass of Dz beyond |z| = 9 is ~2e-19
_CUTOFF = 9.0


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    order: int
    nodes: np.ndarray
    weights: np.ndarray

    def integrate(self, values) -> float:
        return float(np.dot(self.weights, values))

    def __len__(self):
        return len(self.nodes)


def _hermite_functions(x: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal Hermite functions psi_{n-1}(x), psi_n(x) via the three-term recurrence.

    psi_k = p_k(x) e^{-x^2/2} with p_k orthonormal under e^{-x^2}; the Gaussian
    factor is folded in from the start so large |x| does not overflow.
    """
    prev = np.zeros_like(x)
    cur = np.pi**-0.25 * np.exp(-0.5 * x * x)
    for k in range(n):
        prev, cur = cur, x * math.sqrt(2.0 / (k + 1)) * cur - math.sqrt(k / (k + 1)) * prev
    return prev, cur


def gauss_hermite(order: int, tol: float = 1e-15, max_newton: int = 50) -> QuadratureRule:
    """Gauss-Hermite rule rescaled to the unit-variance Gaussian measure.

    Golub-Welsch eigenvalues seed the nodes, which are then polished by Newton
    iteration on the Hermite recurrence until the step falls below ``tol``.
    """
    if int(order) != order or order < 2:
        raise ValueError(f"quadrature order must be an integer >= 2, got {order!r}")
    n = int(order)
    off = np.sqrt(np.arange(1, n) / 2.0)
    x = np.linalg.eigvalsh(np.diag(off, 1) + np.diag(off, -1))
    for _ in range(max_newton):
        pm1, pn = _hermite_functions(x, n)
        # psi_n' = sqrt(2n) psi_{n-1} - x psi_n, and psi_n = 0 at a root
        step = pn / (math.sqrt(2.0 * n) * pm1 - x * pn)
        x = x - step
        if np.max(np.abs(step)) < tol:
            break
    pm1, _ = _hermite_functions(x, n)
    # Christoffel weight for e^{-x^2}: 1 / (n p_{n-1}(x)^2)  ==  e^{-x^2} / (n psi_{n-1}^2)
    w = np.exp(-x * x) / (n * pm1 * pm1)
    x = 0.5 * (x - x[::-1])
    w = 0.5 * (w + w[::-1])
    return QuadratureRule(n, math.sqrt(2.0) * x, w / math.sqrt(np.pi))


def composite_rule(order: int = 16, sharpness: float = 1.0, cutoff: float = _CUTOFF) -> QuadratureRule:
    """Composite Gauss-Legendre rule for Dz on [-cutoff, cutoff].

    ``order`` is the number of Legendre nodes per panel. Panels are no wider
    than pi/(2*sharpness), the distance from the real axis to the nearest pole
    of tanh(sharpness * z + c); with ``sharpness = beta * J`` the integrands of
    the replica equations are resolved to round-off at any temperature.
    """
    if int(order) != order or order < 2:
        raise ValueError(f"quadrature order must be an integer >= 2, got {order!r}")
    if sharpness < 0:
        raise ValueError("sharpness must be >= 0")
    width = 1.0 if sharpness == 0 else min(1.0, math.pi / (2.0 * sharpness))
    panels = int(math.ceil(2.0 * cutoff / width))
    edges = np.linspace(-cutoff, cutoff, panels + 1)
    t, wt = np.polynomial.legendre.leggauss(int(order))
    half = 0.5 * (edges[1:] - edges[:-1])[:, None]
    mid = 0.5 * (edges[1:] + edges[:-1])[:, None]
    z = (mid + half * t).ravel()
    w = (half * wt).ravel() * np.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)
    return QuadratureRule(int(order), z, w)
