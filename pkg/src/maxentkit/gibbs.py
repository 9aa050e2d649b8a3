"""Gibbs inner minimizer, the non-smooth dual, its smoothed version and the
smoothed gradient.

Everything here works on a discretized view of the problem: a feature
matrix (row i holds x^i at the nodes, or arbitrary features in the
finite-state case), reference weights per node and an optional extra linear
cost folded into the Gibbs exponent.  Exponentials are base 2 throughout,
matching the bit-valued entropies; evaluation always subtracts the maximum
exponent first so arbitrarily large dual vectors stay finite.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .integrate import QuadratureRule, log2_sum_exp2
from .problem import (
    MomentProblem,
    SmoothingParams,
    TargetSet,
    project_onto_target,
    support_function,
)

__all__ = [
    "GridMeasure",
    "DualEvaluation",
    "ProblemGrid",
    "gibbs_measure",
    "dual_value",
    "smoothed_dual",
    "moments_of_gibbs",
]


@dataclass(frozen=True)
class ProblemGrid:
    """Discretized problem: features (M x N), reference weights (N,) summing
    to one, node locations and an optional per-node linear cost (in bits)."""

    features: np.ndarray
    weights: np.ndarray
    nodes: np.ndarray | None = None
    linear_cost: np.ndarray | None = None

    @property
    def order(self) -> int:
        return self.features.shape[0]

    @property
    def size(self) -> int:
        return self.weights.size

    def adjoint(self, z: np.ndarray) -> np.ndarray:
        """A^* z at the nodes: sum_i z_i * feature_i."""
        return self.features.T @ z


def build_grid(problem: MomentProblem, rule: QuadratureRule) -> ProblemGrid:
    """Discretize a moment problem on a quadrature rule.

    For the uniform reference the rule weights are scaled by the constant
    reference density; a discrete reference replaces them with its own
    weights (the nodes then act as the finite state set).
    """
    nodes = rule.nodes
    powers = np.vander(nodes, N=problem.order + 1, increasing=True).T[1:]
    ref = problem.reference
    if ref.kind == "uniform":
        weights = rule.weights / problem.support.length
    else:
        if ref.weights.size != nodes.size:
            raise ValueError("discrete reference weights must match the rule nodes")
        weights = ref.weights
    return ProblemGrid(features=powers, weights=weights, nodes=nodes)


@dataclass(frozen=True)
class GridMeasure:
    """A probability measure on the grid, stored as reference weights plus
    the log2 Radon-Nikodym derivative at each node."""

    nodes: np.ndarray
    weights: np.ndarray
    log2_density: np.ndarray

    def __post_init__(self):
        if not np.all(np.isfinite(self.log2_density)):
            raise ValueError("log2 density must be finite at every node")
        total = float(self.weights @ np.exp2(self.log2_density))
        if abs(total - 1.0) > 1e-8:
            raise ValueError(f"grid measure normalizes to {total}, not 1")

    @property
    def masses(self) -> np.ndarray:
        """Probability mass attached to each node."""
        return self.weights * np.exp2(self.log2_density)

    def expectation(self, values: np.ndarray) -> float:
        return float(self.masses @ values)

    def moments(self, features: np.ndarray) -> np.ndarray:
        return features @ self.masses

    def relative_entropy_bits(self) -> float:
        """D(mu || nu) in bits against the reference the weights encode."""
        return float(self.masses @ self.log2_density)


def _gibbs_from_exponent(grid: ProblemGrid, exponent: np.ndarray):
    """Normalize 2^exponent against the grid weights.

    Returns the log2 partition value and the probability masses; the max
    exponent is subtracted before exponentiation, so inputs of any
    magnitude are safe.
    """
    m = float(np.max(exponent))
    scaled = grid.weights * np.exp2(exponent - m)
    total = float(scaled.sum())
    log2_norm = m + float(np.log2(total))
    return log2_norm, scaled / total


def gibbs_measure(c_at_nodes, problem: MomentProblem, rule: QuadratureRule):
    """Minimizer of ``D(mu||nu) - <mu, c>`` and its optimal value.

    The optimizer is the Gibbs measure with density 2^c renormalized
    against the reference; the optimal value is ``-log2 integral 2^c dnu``.
    Returns the pair ``(measure, optimal_value)``.
    """
    grid = build_grid(problem, rule)
    c = np.asarray(c_at_nodes, dtype=float)
    if c.shape != grid.weights.shape:
        raise ValueError("c must be evaluated at the rule nodes")
    if not np.all(np.isfinite(c)):
        raise ValueError("c must be finite at all nodes")
    log2_norm, _ = _gibbs_from_exponent(grid, c)
    measure = GridMeasure(nodes=grid.nodes, weights=grid.weights, log2_density=c - log2_norm)
    return measure, -log2_norm


def gibbs_of_dual(grid: ProblemGrid, z: np.ndarray) -> GridMeasure:
    """Measure reconstruction for a dual vector: density ~ 2^{-A* z} (with
    any linear cost folded into the exponent)."""
    exponent = -grid.adjoint(z)
    if grid.linear_cost is not None:
        exponent = exponent - grid.linear_cost
    log2_norm, _ = _gibbs_from_exponent(grid, exponent)
    nodes = grid.nodes if grid.nodes is not None else np.arange(grid.size, dtype=float)
    return GridMeasure(nodes=nodes, weights=grid.weights, log2_density=exponent - log2_norm)


@dataclass(frozen=True)
class DualEvaluation:
    """Smoothed dual value, its gradient, the smoothed support maximizer and
    the Gibbs moments at the query point."""

    value: float
    gradient: np.ndarray
    x_star: np.ndarray
    moments: np.ndarray


def _log_partition_and_moments(grid: ProblemGrid, z: np.ndarray):
    exponent = -grid.adjoint(z)
    if grid.linear_cost is not None:
        exponent = exponent - grid.linear_cost
    log2_norm, masses = _gibbs_from_exponent(grid, exponent)
    return log2_norm, grid.features @ masses


def dual_value_on_grid(z: np.ndarray, grid: ProblemGrid, T: TargetSet) -> float:
    log2_norm, _ = _log_partition_and_moments(grid, z)
    return -support_function(T, z) - log2_norm


def smoothed_dual_on_grid(
    z: np.ndarray, eta: SmoothingParams, grid: ProblemGrid, T: TargetSet
) -> DualEvaluation:
    z = np.asarray(z, dtype=float)
    x_star = project_onto_target(T, z / eta.eta1)
    log2_norm, moments = _log_partition_and_moments(grid, z)
    value = (
        -(x_star @ z - 0.5 * eta.eta1 * (x_star @ x_star))
        - log2_norm
        - 0.5 * eta.eta2 * (z @ z)
    )
    gradient = -x_star + moments - eta.eta2 * z
    return DualEvaluation(value=float(value), gradient=gradient, x_star=x_star, moments=moments)


def dual_value(z, problem: MomentProblem, T: TargetSet, rule: QuadratureRule) -> float:
    """Non-smooth dual ``F(z) = -sigma_T(z) - log2 integral 2^{-A* z} dnu``."""
    grid = build_grid(problem, rule)
    return dual_value_on_grid(np.asarray(z, dtype=float), grid, T)


def smoothed_dual(
    z, eta: SmoothingParams, problem: MomentProblem, T: TargetSet, rule: QuadratureRule
) -> DualEvaluation:
    """Smoothed dual ``F_eta`` with its gradient.

    The support term is smoothed through the projection identity
    ``x*_z = pi_T(z / eta1)``; the gradient is
    ``-x*_z + A mu*_z - eta2 z`` and is Lipschitz with constant
    ``1/eta1 + ||A||^2 + eta2``.
    """
    grid = build_grid(problem, rule)
    return smoothed_dual_on_grid(np.asarray(z, dtype=float), eta, grid, T)


def moments_of_gibbs(z, problem: MomentProblem, rule: QuadratureRule) -> np.ndarray:
    """Moment vector of the Gibbs measure attached to the dual vector z.

    The shared exponent ``-A* z`` is shifted by its maximum over the nodes
    before exponentiation, so every intermediate stays in [0, 1] and the
    ratio is computed without overflow even for huge ``z``.
    """
    grid = build_grid(problem, rule)
    _, moments = _log_partition_and_moments(grid, np.asarray(z, dtype=float))
    return moments
