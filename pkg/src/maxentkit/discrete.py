"""Finite-state specialization: exact gradients by summation, the weaker
regularity constants, and a damped-Newton moment matcher used where many
small subproblems must be solved tightly (the moment-closure inner loop).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .gibbs import ProblemGrid
from .problem import TargetSet
from .solver import Certificate, SlaterData, SolveResult, SolverConfig, run_fast_gradient

__all__ = [
    "DiscreteProblem",
    "solve_discrete",
    "discrete_dual_bound",
    "match_moments_newton",
    "box_constrained_maxent",
    "MomentMatchError",
]

LN2 = np.log(2.0)


@dataclass(frozen=True)
class DiscreteProblem:
    """Entropy problem over a finite state set.

    ``feature_matrix`` rows are the constrained statistics; the default
    constructor uses raw powers of the state values.  The reference must
    have full support.
    """

    states: np.ndarray
    reference: np.ndarray
    feature_matrix: np.ndarray
    target: TargetSet

    def __post_init__(self):
        states = np.asarray(self.states, dtype=float)
        ref = np.asarray(self.reference, dtype=float)
        F = np.asarray(self.feature_matrix, dtype=float)
        if np.any(ref <= 0.0):
            raise ValueError("reference weights must be strictly positive (full support)")
        if abs(ref.sum() - 1.0) > 1e-10:
            raise ValueError("reference weights must sum to 1")
        if F.shape[1] != states.size:
            raise ValueError("feature matrix columns must match the state count")
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "reference", ref)
        object.__setattr__(self, "feature_matrix", F)

    @classmethod
    def with_monomials(cls, states, reference, order: int, target: TargetSet) -> "DiscreteProblem":
        states = np.asarray(states, dtype=float)
        F = np.vander(states, N=order + 1, increasing=True).T[1:]
        return cls(states=states, reference=np.asarray(reference, dtype=float), feature_matrix=F, target=target)

    @property
    def order(self) -> int:
        return self.feature_matrix.shape[0]

    @property
    def size(self) -> int:
        return self.states.size

    def operator_norm_bound(self) -> float:
        """sum_i max_j |f_ij|, the finite-state analogue of the moment
        operator bound."""
        return float(np.sum(np.max(np.abs(self.feature_matrix), axis=1)))

    def to_grid(self, linear_cost=None) -> ProblemGrid:
        return ProblemGrid(
            features=self.feature_matrix,
            weights=self.reference,
            nodes=self.states,
            linear_cost=None if linear_cost is None else np.asarray(linear_cost, dtype=float),
        )

    def regularity_constant(self) -> float:
        """C = max_i log2(1/nu_i), the entropy bound replacing the Slater
        relative entropy in the finite-state case."""
        return float(np.max(-np.log2(self.reference)))


def discrete_dual_bound(problem: DiscreteProblem, delta: float) -> float:
    """Bound (1/delta) max_i log2(1/nu_i) on the optimal dual norm."""
    if delta <= 0.0:
        raise ValueError("delta must be positive")
    return problem.regularity_constant() / delta


def _default_delta(problem: DiscreteProblem) -> float | None:
    if problem.target.kind == "box":
        return float(np.min(problem.target.radii))
    return None


def solve_discrete(
    problem: DiscreteProblem,
    epsilon: float,
    C_override: float | None = None,
    delta: float | None = None,
    config: SolverConfig | None = None,
    linear_cost=None,
    iterations: int | None = None,
) -> tuple[np.ndarray, Certificate]:
    """Fast-gradient solve with exact sums replacing quadrature.

    Returns the optimal weights (the Gibbs reconstruction from the final
    dual iterate) and the run certificate.  ``delta`` defaults to the
    smallest box radius when the target is a box; without a usable delta
    the run is uncertified.
    """
    res = solve_discrete_full(problem, epsilon, C_override, delta, config, linear_cost, iterations)
    return res.measure.masses, res.certificate


def solve_discrete_full(
    problem: DiscreteProblem,
    epsilon: float,
    C_override: float | None = None,
    delta: float | None = None,
    config: SolverConfig | None = None,
    linear_cost=None,
    iterations: int | None = None,
) -> SolveResult:
    """Like :func:`solve_discrete` but returning the full result (dual
    vector, measure, certificate, trace)."""
    import dataclasses

    from .solver import apriori_iterations, smoothing_for_accuracy

    if config is None:
        config = SolverConfig(epsilon=epsilon)
    else:
        config = dataclasses.replace(config, epsilon=epsilon)
    C = C_override if C_override is not None else problem.regularity_constant()
    d = delta if delta is not None else _default_delta(problem)
    slater = SlaterData(C=C, delta=d, slater_measure=None) if d is not None else None

    T = problem.target
    if slater is not None and slater.certifiable:
        eta = config.eta_override or smoothing_for_accuracy(epsilon, slater, T)
        if iterations is None and config.stopping == "a-priori":
            iterations = apriori_iterations(epsilon, slater, problem, T)
    else:
        if config.eta_override is None:
            raise ValueError("uncertified run needs an explicit eta_override")
        eta = config.eta_override
    grid = problem.to_grid(linear_cost)
    return run_fast_gradient(
        grid, T, eta, config, problem.operator_norm_bound(), slater, iterations
    )


class MomentMatchError(RuntimeError):
    """The requested moments are not attainable on the state set (or sit so
    close to the boundary of the realizable region that the dual diverges)."""


def match_moments_newton(
    features: np.ndarray,
    log_weights: np.ndarray,
    target: np.ndarray,
    theta0: np.ndarray | None = None,
    tol: float = 1e-11,
    max_iter: int = 200,
    norm_cap: float | None = None,
):
    """Damped Newton solve of the exact moment-matching problem:

    find theta with  E_p[f] = target  for  p ~ exp(theta . f + log_weights).

    Minimizes the dual  log Z(theta) - theta . target  (natural log).
    Returns (theta, p, saturated).  Targets outside (or on the boundary of)
    the moment polytope make the dual diverge: with ``norm_cap`` set the
    solve stops there and reports ``saturated=True`` — the returned Gibbs
    distribution then realizes the closest approachable moments — while
    without a cap a MomentMatchError is raised.
    """
    M, N = features.shape
    theta = np.zeros(M) if theta0 is None else np.asarray(theta0, dtype=float).copy()

    def dual_parts(th):
        e = features.T @ th + log_weights
        m = np.max(e)
        q = np.exp(e - m)
        Z = q.sum()
        p = q / Z
        value = m + np.log(Z) - th @ target
        return value, p

    hard_cap = norm_cap if norm_cap is not None else 1e8
    can_restart = theta0 is not None and np.any(theta != 0.0)

    def give_up(theta, p, message):
        if norm_cap is not None:
            return theta, p, True
        raise MomentMatchError(message)

    value, p = dual_parts(theta)
    for _ in range(max_iter):
        mom = features @ p
        grad = mom - target
        if np.max(np.abs(grad)) <= tol:
            return theta, p, False
        centered = features - mom[:, None]
        cov = (centered * p) @ centered.T
        try:
            step = np.linalg.solve(cov + 1e-13 * np.eye(M), -grad)
        except np.linalg.LinAlgError:
            raise MomentMatchError("singular moment covariance")
        # backtracking line search on the dual
        t = 1.0
        for _ in range(60):
            cand = theta + t * step
            cand_value, cand_p = dual_parts(cand)
            if cand_value <= value + 1e-4 * t * (grad @ step):
                theta, value, p = cand, cand_value, cand_p
                break
            t *= 0.5
        else:
            # a poisoned warm start can strand the solve in an underflowed
            # region; retry once from the origin before giving up
            if can_restart:
                can_restart = False
                theta = np.zeros(M)
                value, p = dual_parts(theta)
                continue
            return give_up(theta, p, "line search failed; target at the moment boundary")
        if not np.all(np.isfinite(theta)) or np.max(np.abs(theta)) > hard_cap:
            if can_restart:
                can_restart = False
                theta = np.zeros(M)
                value, p = dual_parts(theta)
                continue
            return give_up(theta, p, "dual diverged; target outside the realizable region")
    return give_up(theta, p, "Newton did not reach the requested residual")


def box_constrained_maxent(
    features: np.ndarray,
    weights: np.ndarray,
    center: np.ndarray,
    radii: np.ndarray,
    theta0: np.ndarray | None = None,
    max_rounds: int = 30,
    norm_cap: float = 400.0,
):
    """Minimum relative entropy with the moments confined to a box, solved
    by an active-set loop of Newton equality solves.

    At the optimum each coordinate either sits strictly inside its interval
    (multiplier zero) or on the face its multiplier sign selects; the loop
    re-solves until the sign pattern is self-consistent.  Boxes that poke
    out of the moment polytope make a face target unreachable and the dual
    saturates at ``norm_cap``; the saturated solution is accepted as long
    as its moments fall inside the box, since it then realizes the
    boundary-pinned optimum to within the saturation accuracy.

    Returns (p, theta_bits) where theta_bits is the dual vector in the
    base-2 convention (density ~ 2^{-theta_bits . f}).
    """
    M = features.shape[0]
    log_w = np.log(np.maximum(weights, 1e-300))
    active = np.zeros(M, dtype=int)  # -1 lower face, 0 inactive, +1 upper face
    theta = np.zeros(M) if theta0 is None else np.asarray(theta0, dtype=float).copy()
    slack = 1e-7 * np.maximum(1.0, np.abs(center))

    def in_box(mom):
        return np.all(mom <= center + radii + slack) and np.all(mom >= center - radii - slack)

    for _ in range(max_rounds):
        idx = np.nonzero(active != 0)[0]
        if idx.size == 0:
            p = np.exp(log_w - log_w.max())
            p /= p.sum()
            th_full = np.zeros(M)
            saturated = False
        else:
            target = center[idx] + radii[idx] * active[idx]
            th, p, saturated = match_moments_newton(
                features[idx], log_w, target, theta0=theta[idx], norm_cap=norm_cap
            )
            th_full = np.zeros(M)
            th_full[idx] = th
        theta = th_full
        mom = features @ p

        if saturated and in_box(mom):
            return p, -theta / LN2
        # a saturated solve that missed the box falls through to the usual
        # update: the runaway multiplier signs mark the faces to drop

        new_active = active.copy()
        ok = True
        for i in range(M):
            if active[i] == 0:
                if mom[i] > center[i] + radii[i] + 1e-12:
                    new_active[i] = 1
                    ok = False
                elif mom[i] < center[i] - radii[i] - 1e-12:
                    new_active[i] = -1
                    ok = False
            else:
                # multiplier must pull toward the interior of the box:
                # on the upper face theta_i > 0 would push the moment higher
                if active[i] * theta[i] > 0.0:
                    new_active[i] = 0
                    ok = False
        if ok:
            if saturated:
                raise MomentMatchError("box does not intersect the realizable moment region")
            return p, -theta / LN2
        active = new_active
    raise MomentMatchError("active-set loop did not settle; box straddles the moment boundary")
