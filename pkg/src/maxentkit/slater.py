"""Construction of a strictly feasible polynomial density and the constants
(C, delta) that drive all error bounds.

The construction works on the unit interval: a polynomial density of degree
r-1 whose moments match the observed ones exactly is found by maximizing
the pointwise positivity margin on a dense grid (a small LP).  A derivative
bound then certifies positivity between the grid nodes, so no semidefinite
machinery is needed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .gibbs import GridMeasure
from .integrate import composite_rule
from .problem import MomentProblem, SupportInterval
from .solver import SlaterData

__all__ = [
    "PolynomialDensity",
    "SlaterInfeasibleError",
    "hilbert_moment_matrix",
    "find_polynomial_slater",
]


class SlaterInfeasibleError(RuntimeError):
    """No strictly positive polynomial density of the requested degree
    matches the observed moments; retry with a larger r."""


@dataclass(frozen=True)
class PolynomialDensity:
    """Density p(x) = sum_i coefficients[i] x^i on [0, 1].

    ``grid_margin`` is the smallest value on the construction grid,
    ``certified_min`` the derivative-bound lower bound over all of [0, 1].
    """

    coefficients: np.ndarray
    grid_margin: float
    certified_min: float

    @property
    def degree(self) -> int:
        return self.coefficients.size - 1

    def __call__(self, x) -> np.ndarray:
        return np.polyval(self.coefficients[::-1], np.asarray(x, dtype=float))

    def integral(self) -> float:
        c = self.coefficients
        return float(sum(c[i] / (i + 1) for i in range(c.size)))


def hilbert_moment_matrix(r: int, M: int) -> np.ndarray:
    """(M+1) x r matrix with entries 1/(i+j-1) (1-indexed): row i maps
    polynomial coefficients to the (i-1)-th moment on [0, 1]."""
    if r < 1 or M < 1:
        raise ValueError("need r >= 1 and M >= 1")
    i = np.arange(1, M + 2)[:, None]
    j = np.arange(1, r + 1)[None, :]
    return 1.0 / (i + j - 1.0)


def _rescale_moments_to_unit(problem: MomentProblem) -> np.ndarray:
    """Moments of the pushforward under x -> (x - a)/(b - a)."""
    a, b = problem.support.lower, problem.support.upper
    if a == 0.0 and b == 1.0:
        return problem.observed.copy()
    length = b - a
    full = np.concatenate([[1.0], problem.observed])  # moments 0..M of the original
    out = np.empty(problem.order)
    for i in range(1, problem.order + 1):
        acc = 0.0
        for j in range(i + 1):
            acc += math.comb(i, j) * (-a) ** (i - j) * full[j]
        out[i - 1] = acc / length**i
    return out


def find_polynomial_slater(
    problem: MomentProblem, r: int, grid_n: int = 2049
) -> tuple[PolynomialDensity, SlaterData]:
    """Strictly feasible polynomial density and its constants.

    Solves, over coefficients alpha and margin t,

        max t   s.t.  A alpha = beta,   p(alpha, x_g) >= t on the grid,

    where A is the Hilbert-type moment matrix and beta stacks 1 and the
    (rescaled) observed moments.  A positive margin together with the
    Markov-brothers derivative bound certifies p > 0 on all of [0, 1].
    C is the density's relative entropy to the uniform reference (bits);
    delta is the smallest uncertainty radius, the distance from the matched
    moments to the complement of the target box.
    """
    if r < 1:
        raise ValueError("need at least one coefficient")
    if grid_n < 2:
        raise ValueError("grid_n too small")
    M = problem.order
    A = hilbert_moment_matrix(r, M)
    beta = np.concatenate([[1.0], _rescale_moments_to_unit(problem)])

    xg = np.linspace(0.0, 1.0, grid_n)
    V = np.vander(xg, N=r, increasing=True)
    # variables (alpha_0..alpha_{r-1}, t); maximize t
    c = np.zeros(r + 1)
    c[-1] = -1.0
    A_ub = np.hstack([-V, np.ones((grid_n, 1))])
    A_eq = np.hstack([A, np.zeros((M + 1, 1))])
    res = linprog(
        c,
        A_ub=A_ub,
        b_ub=np.zeros(grid_n),
        A_eq=A_eq,
        b_eq=beta,
        bounds=[(None, None)] * (r + 1),
        method="highs",
    )
    if res.status != 0:
        raise SlaterInfeasibleError(
            f"no degree-{r - 1} polynomial density matches the moments (LP status {res.status}); increase r"
        )
    alpha = res.x[:r]
    # re-project onto the equality manifold: the LP solver only enforces
    # A alpha = beta to its own tolerance, moment matching must be exact
    residual = A @ alpha - beta
    alpha = alpha - np.linalg.lstsq(A, residual, rcond=None)[0]
    t = float(np.min(V @ alpha))
    if t <= 0.0:
        raise SlaterInfeasibleError(
            f"degree-{r - 1} polynomial density is not strictly positive (margin {t:.3g}); increase r"
        )

    # certify positivity between grid nodes: on [0,1] a degree-n polynomial
    # has |p'| <= 2 n^2 max|p| (Markov brothers), and the grid max
    # understates max|p| by at most (h/2) max|p'|.
    n_deg = r - 1
    h = 1.0 / (grid_n - 1)
    grid_abs = float(np.max(np.abs(V @ alpha)))
    denom = 1.0 - n_deg**2 * h
    deriv_bound = 2.0 * n_deg**2 * grid_abs / denom if denom > 0.0 else np.inf
    certified_min = t - 0.5 * h * deriv_bound

    density = PolynomialDensity(coefficients=alpha, grid_margin=t, certified_min=certified_min)

    # C = D(mu0 || nu) in bits, by quadrature on the unit interval
    unit = SupportInterval(0.0, 1.0)
    rule = composite_rule(unit, grid_n, kind="simpson")
    p_vals = density(rule.nodes)
    p_floor = np.maximum(p_vals, 1e-300)
    C = float(rule.weights @ (p_vals * np.log2(p_floor)))
    C = max(C, 0.0)

    delta = float(np.min(problem.uncertainty))
    ref_weights = rule.weights / unit.length
    measure = GridMeasure(
        nodes=rule.nodes,
        weights=ref_weights,
        log2_density=np.log2(p_floor),
    )
    return density, SlaterData(C=C, delta=delta, slater_measure=measure)
