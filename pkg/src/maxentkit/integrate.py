"""Deterministic quadrature and quasi-Monte-Carlo utilities for integrals
over the support interval, plus numerically safe log-domain accumulation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .problem import SupportInterval

__all__ = [
    "QuadratureRule",
    "composite_rule",
    "vdc_sequence",
    "qmc_rule",
    "log2_integral",
    "star_discrepancy",
]


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes and positive weights of a quadrature rule on the support."""

    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        if nodes.size < 2:
            raise ValueError("quadrature rule needs at least 2 nodes")
        if nodes.shape != weights.shape:
            raise ValueError("nodes and weights must have equal length")
        if np.any(weights <= 0.0):
            raise ValueError("quadrature weights must be positive")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    @property
    def size(self) -> int:
        return self.nodes.size


def composite_rule(support: SupportInterval, n: int, kind: str = "simpson") -> QuadratureRule:
    """Composite midpoint or Simpson rule with (at least) ``n`` nodes.

    Simpson needs an odd node count and is silently rounded up to the next
    odd number >= 3.  Weights integrate against Lebesgue measure, so they
    sum to the interval length.
    """
    if n < 2:
        raise ValueError("composite rule needs n >= 2")
    a, b = support.lower, support.upper
    if kind == "midpoint":
        h = (b - a) / n
        nodes = a + h * (np.arange(n) + 0.5)
        weights = np.full(n, h)
        return QuadratureRule(nodes, weights)
    if kind == "simpson":
        m = n if n % 2 == 1 else n + 1
        m = max(m, 3)
        nodes = np.linspace(a, b, m)
        h = (b - a) / (m - 1)
        weights = np.full(m, 2.0)
        weights[1::2] = 4.0
        weights[0] = weights[-1] = 1.0
        weights *= h / 3.0
        return QuadratureRule(nodes, weights)
    raise ValueError(f"unknown rule kind: {kind!r}")


def _is_prime(p: int) -> bool:
    if p < 2:
        return False
    d = 2
    while d * d <= p:
        if p % d == 0:
            return False
        d += 1
    return True


def vdc_sequence(n: int, base: int = 2) -> np.ndarray:
    """First ``n`` van der Corput points in the given prime base.

    Point k (1-indexed) is the radical inverse of k: the base-``base``
    digits of k mirrored around the radix point.
    """
    if n < 1:
        raise ValueError("need n >= 1 points")
    if not _is_prime(base):
        raise ValueError(f"base {base} is not prime")
    out = np.empty(n)
    for i in range(1, n + 1):
        k = i
        inv = 0.0
        denom = 1.0
        while k > 0:
            k, digit = divmod(k, base)
            denom *= base
            inv += digit / denom
        out[i - 1] = inv
    return out


def qmc_rule(support: SupportInterval, n: int, base: int = 2) -> QuadratureRule:
    """Equal-weight quasi-Monte-Carlo rule from the van der Corput sequence,
    affinely mapped onto the support interval.  Offered as a cross-check
    estimator; the composite Simpson rule remains the default."""
    pts = vdc_sequence(n, base)
    nodes = support.lower + support.length * pts
    weights = np.full(n, support.length / n)
    return QuadratureRule(nodes, weights)


def log2_sum_exp2(exponents: np.ndarray, weights: np.ndarray) -> float:
    """log2( sum_j w_j 2^{g_j} ) with the max exponent factored out first,
    so the result is finite for any finite inputs."""
    g = np.asarray(exponents, dtype=float)
    w = np.asarray(weights, dtype=float)
    m = float(np.max(g))
    return m + float(np.log2(np.sum(w * np.exp2(g - m))))


def log2_integral(log2_integrand_at_nodes, rule: QuadratureRule) -> float:
    """Quadrature in the log2 domain: log2 of the integral of 2^g."""
    g = np.asarray(log2_integrand_at_nodes, dtype=float)
    if g.size == 0:
        raise ValueError("empty rule")
    if g.shape != rule.nodes.shape:
        raise ValueError("integrand values must align with rule nodes")
    return log2_sum_exp2(g, rule.weights)


def star_discrepancy(points: np.ndarray) -> float:
    """Exact star discrepancy of a 1-D point set in [0, 1)."""
    x = np.sort(np.asarray(points, dtype=float))
    n = x.size
    i = np.arange(1, n + 1)
    return float(np.max(np.maximum(i / n - x, x - (i - 1) / n)))
