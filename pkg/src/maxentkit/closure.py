"""Zero-information moment closure for the reversible dimerization network.

The monomer count m performs jumps of size two: pairing (m -> m-2) at rate
k1 m (m-1) and dissociation (m -> m+2) at rate k2 (S0 - m)/2, where
S0 = M0 + 2 D0 is the conserved monomer equivalent.  Tracking the first M
raw moments gives a linear ODE driven by one unclosed moment of order M+1;
the closure evaluates that moment under the entropy-maximal distribution
compatible with the tracked moments (up to a small box slack kappa).

The module also carries the verification machinery: a stochastic simulator
and the exact stationary distribution of the finite chain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .discrete import MomentMatchError, box_constrained_maxent

__all__ = [
    "DimerizationSystem",
    "MomentODE",
    "ClosureConfig",
    "ClosureInfeasibleError",
    "dimerization_propensities",
    "moment_matrices",
    "moment_matrices_generic",
    "closure_function",
    "integrate_closure_ode",
    "ssa_simulate",
    "exact_cme_stationary",
]


class ClosureInfeasibleError(RuntimeError):
    """The tracked moments drifted outside the region any distribution on
    the state set can realize (beyond the kappa slack)."""


@dataclass(frozen=True)
class DimerizationSystem:
    """Reversible dimerization with pairing rate k1 and splitting rate k2,
    started from M0 monomers and D0 dimers."""

    k1: float
    k2: float
    M0: int
    D0: int = 0

    def __post_init__(self):
        if self.k1 <= 0.0 or self.k2 < 0.0:
            raise ValueError("rate constants must be positive (k2 may be 0)")
        if self.M0 < 0 or self.D0 < 0:
            raise ValueError("initial counts must be nonnegative")

    @property
    def S0(self) -> int:
        """Conserved total monomer equivalent M0 + 2 D0: the largest
        reachable monomer count."""
        return self.M0 + 2 * self.D0


def dimerization_propensities(sys: DimerizationSystem):
    """Jump rates as vectorized callables of the monomer count."""

    def alpha1(m):
        m = np.asarray(m, dtype=float)
        return sys.k1 * m * (m - 1.0)

    def alpha2(m):
        m = np.asarray(m, dtype=float)
        return sys.k2 * (sys.S0 - m) / 2.0

    return alpha1, alpha2


def _poly_mul(a, b):
    out = [0] * (len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        for j, bj in enumerate(b):
            out[i + j] = out[i + j] + ai * bj
    return out


def moment_matrices_generic(k1, k2, S0, order: int):
    """Moment dynamics d<m^k>/dt = (A mu)_k + (B zeta)_k over a generic
    scalar ring: works with floats or symbolic scalars alike.

    Row k expands E[alpha1(m)((m-2)^k - m^k) + alpha2(m)((m+2)^k - m^k)]
    into raw moments; everything of order <= ``order`` lands in A and the
    single order-(order+1) coefficient lands in B.
    """
    if order < 1:
        raise ValueError("order must be >= 1")
    size = order + 1
    A = [[0 * k1 for _ in range(size)] for _ in range(size)]
    B = [[0 * k1] for _ in range(size)]
    alpha1 = [0 * k1, -k1, k1]  # k1 (m^2 - m)
    alpha2 = [k2 * S0 / 2, -k2 / 2]  # k2 (S0 - m)/2
    for k in range(1, size):
        down = [math.comb(k, j) * (-2) ** (k - j) for j in range(k)]  # (m-2)^k - m^k
        up = [math.comb(k, j) * 2 ** (k - j) for j in range(k)]  # (m+2)^k - m^k
        poly = _poly_mul(alpha1, down)
        poly2 = _poly_mul(alpha2, up)
        coeffs = [0 * k1] * max(len(poly), len(poly2))
        for i, c in enumerate(poly):
            coeffs[i] = coeffs[i] + c
        for i, c in enumerate(poly2):
            coeffs[i] = coeffs[i] + c
        if len(coeffs) > size + 1:
            raise AssertionError("dimerization dynamics close after one extra moment")
        for i, c in enumerate(coeffs):
            if i <= order:
                A[k][i] = A[k][i] + c
            else:
                B[k][0] = B[k][0] + c
    return A, B


@dataclass(frozen=True)
class MomentODE:
    """Linear moment dynamics: d mu/dt = A mu + B zeta, with zeta the
    unclosed moment block of order M+1."""

    A: np.ndarray
    B: np.ndarray
    order: int


def moment_matrices(sys: DimerizationSystem, order: int) -> MomentODE:
    if order not in (2, 3):
        raise ValueError("supported closure orders are 2 and 3")
    A, B = moment_matrices_generic(float(sys.k1), float(sys.k2), float(sys.S0), order)
    return MomentODE(A=np.array(A, dtype=float), B=np.array(B, dtype=float), order=order)


@dataclass
class ClosureConfig:
    """Closure order, the moment box slack kappa and the support cap.

    ``support_max`` defaults to S0.  ``parity_restrict`` confines the
    closure support to the parity class actually reachable from M0 (the
    dynamics conserve parity; the default keeps both parities)."""

    order: int = 2
    kappa: float = 0.01
    support_max: int | None = None
    parity_restrict: bool = False

    def __post_init__(self):
        if self.kappa <= 0.0:
            raise ValueError("kappa must be positive")
        if self.order not in (2, 3):
            raise ValueError("supported closure orders are 2 and 3")


class _ClosureSolver:
    """Maxent evaluator for the unclosed moment, warm-started across calls.

    States are rescaled to [0, 1] before the dual solve, so the feature
    covariance stays well conditioned regardless of S0.
    """

    def __init__(self, cfg: ClosureConfig, support_max: int, parity_anchor: int = 0):
        self.cfg = cfg
        if cfg.parity_restrict:
            start = parity_anchor % 2
            states = np.arange(start, support_max + 1, 2, dtype=float)
        else:
            states = np.arange(0, support_max + 1, dtype=float)
        self.states = states
        self.scale = float(max(support_max, 1))
        x = states / self.scale
        self.features = np.vander(x, N=cfg.order + 1, increasing=True).T[1:]
        self.high_feature = x ** (cfg.order + 1)
        n = states.size
        self.weights = np.full(n, 1.0 / n)
        self._theta = None

    def __call__(self, mu: np.ndarray) -> float:
        cfg = self.cfg
        M = cfg.order
        if abs(mu[0] - 1.0) > 1e-9:
            raise ValueError("moment vector must be normalized (mu[0] = 1)")
        powers = self.scale ** np.arange(1, M + 1)
        center = np.asarray(mu[1:], dtype=float) / powers
        radii = np.full(M, cfg.kappa) / powers
        try:
            p, z_bits = box_constrained_maxent(
                self.features, self.weights, center, radii,
                theta0=self._theta,
            )
        except MomentMatchError as exc:
            self._theta = None
            raise ClosureInfeasibleError(
                f"no distribution on the support realizes moments {mu[1:]} within kappa={cfg.kappa}"
            ) from exc
        self._theta = -z_bits * math.log(2.0)
        return float(p @ self.high_feature) * self.scale ** (M + 1)


def closure_function(mu, cfg: ClosureConfig, support_max: int | None = None) -> np.ndarray:
    """Entropy-maximal estimate of the first unclosed moment.

    Solves the finite maxent problem on {0, ..., support_max} with uniform
    reference, the tracked moments confined to a kappa-box, and returns the
    order-(M+1) moment of the optimizer (as a length-1 vector).
    """
    mu = np.asarray(mu, dtype=float)
    cap = support_max if support_max is not None else cfg.support_max
    if cap is None:
        raise ValueError("support_max required (pass it or set it on the config)")
    solver = _ClosureSolver(cfg, cap)
    return np.array([solver(mu)])


@dataclass(frozen=True)
class ClosureTrajectory:
    t: np.ndarray
    moments: np.ndarray  # shape (len(t), order+1)
    zeta: np.ndarray  # unclosed moment along the trajectory

    @property
    def mean(self) -> np.ndarray:
        return self.moments[:, 1]

    @property
    def second_moment(self) -> np.ndarray:
        return self.moments[:, 2]

    def third_moment(self) -> np.ndarray:
        if self.moments.shape[1] >= 4:
            return self.moments[:, 3]
        return self.zeta


def integrate_closure_ode(
    sys: DimerizationSystem,
    cfg: ClosureConfig,
    t_end: float,
    dt: float,
) -> ClosureTrajectory:
    """Integrate the closed moment ODE from the deterministic start.

    Classical fourth-order steps, each verified against two half steps;
    a step is accepted when the two answers agree to 1e-6 (the half-step
    result is kept), otherwise the step is halved.  After a stretch of
    comfortable agreement the step is allowed to grow back toward ``dt``.
    """
    if t_end <= 0.0 or dt <= 0.0:
        raise ValueError("t_end and dt must be positive")
    ode = moment_matrices(sys, cfg.order)
    support_max = cfg.support_max if cfg.support_max is not None else sys.S0
    solver = _ClosureSolver(cfg, support_max, parity_anchor=sys.M0)

    def rhs(mu):
        zeta = solver(np.concatenate([[1.0], mu]))
        return ode.A[1:, 1:] @ mu + ode.A[1:, 0] + ode.B[1:, 0] * zeta, zeta

    def rk4(mu, h):
        k1v, _ = rhs(mu)
        k2v, _ = rhs(mu + 0.5 * h * k1v)
        k3v, _ = rhs(mu + 0.5 * h * k2v)
        k4v, _ = rhs(mu + h * k3v)
        return mu + (h / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)

    M = cfg.order
    mu = np.array([float(sys.M0) ** k for k in range(1, M + 1)])
    t = 0.0
    h = dt
    ts = [0.0]
    traj = [mu.copy()]
    zetas = [rhs(mu)[1]]
    calm = 0
    while t < t_end - 1e-12:
        h = min(h, t_end - t)
        try:
            full = rk4(mu, h)
            half = rk4(rk4(mu, 0.5 * h), 0.5 * h)
            dev = float(np.max(np.abs(full - half)))
        except ClosureInfeasibleError:
            dev = np.inf
        if dev < 1e-6:
            mu = half
            t += h
            ts.append(t)
            traj.append(mu.copy())
            zetas.append(rhs(mu)[1])
            calm = calm + 1 if dev < 1e-8 else 0
            if calm >= 4 and h < dt:
                h = min(2.0 * h, dt)
                calm = 0
        else:
            h *= 0.5
            calm = 0
            if h < 1e-12:
                raise RuntimeError("step size underflow in the closure ODE")
    moments = np.hstack([np.ones((len(ts), 1)), np.array(traj)])
    return ClosureTrajectory(t=np.array(ts), moments=moments, zeta=np.array(zetas))


@dataclass(frozen=True)
class SsaResult:
    t: np.ndarray
    mean: np.ndarray
    second_moment: np.ndarray
    third_moment: np.ndarray
    se_mean: np.ndarray
    se_second: np.ndarray
    se_third: np.ndarray
    n_traj: int


def ssa_simulate(sys: DimerizationSystem, n_traj: int, t_grid, seed: int) -> SsaResult:
    """Gillespie direct method, vectorized across trajectories.

    All trajectories advance frame by frame over ``t_grid``; the averaged
    monomer moments and their standard errors are recorded at each grid
    time.  Fixed seed gives bit-identical output.
    """
    if n_traj < 1:
        raise ValueError("need at least one trajectory")
    t_grid = np.asarray(t_grid, dtype=float)
    rng = np.random.default_rng(seed)
    m = np.full(n_traj, float(sys.M0))
    now = np.zeros(n_traj)
    S0 = float(sys.S0)
    k1, k2 = sys.k1, sys.k2

    sums = np.zeros((t_grid.size, 3))
    sq_sums = np.zeros((t_grid.size, 3))

    for fi, t_stop in enumerate(t_grid):
        active = now < t_stop
        while np.any(active):
            mm = m[active]
            a1 = k1 * mm * (mm - 1.0)
            a2 = k2 * (S0 - mm) / 2.0
            total = a1 + a2
            # exhausted chains (total rate 0) jump straight to the frame end
            dead = total <= 0.0
            wait = np.full(mm.shape, np.inf)
            alive = ~dead
            wait[alive] = rng.exponential(1.0, size=int(alive.sum())) / total[alive]
            t_new = now[active] + wait
            fire = t_new < t_stop
            pick_down = rng.random(mm.shape) * total < a1
            delta = np.where(pick_down, -2.0, 2.0)
            mm = np.where(fire, mm + delta, mm)
            m[active] = mm
            now[active] = np.where(fire, t_new, t_stop)
            idx = np.nonzero(active)[0]
            active = np.zeros_like(active)
            active[idx[fire]] = True
        powers = np.stack([m, m**2, m**3], axis=1)
        sums[fi] = powers.sum(axis=0)
        sq_sums[fi] = (powers**2).sum(axis=0)

    means = sums / n_traj
    var = np.maximum(sq_sums / n_traj - means**2, 0.0)
    se = np.sqrt(var / n_traj)
    return SsaResult(
        t=t_grid,
        mean=means[:, 0],
        second_moment=means[:, 1],
        third_moment=means[:, 2],
        se_mean=se[:, 0],
        se_second=se[:, 1],
        se_third=se[:, 2],
        n_traj=n_traj,
    )


@dataclass(frozen=True)
class StationaryResult:
    states: np.ndarray
    distribution: np.ndarray
    mean: float
    second_moment: float
    third_moment: float


def exact_cme_stationary(sys: DimerizationSystem) -> StationaryResult:
    """Exact stationary moments of the jump chain on the reachable states
    {M0 mod 2, ..., S0} (steps of two), by solving pi Q = 0."""
    if sys.S0 > 10_000:
        raise ValueError("state space too large for the dense solve")
    start = sys.M0 % 2
    states = np.arange(start, sys.S0 + 1, 2, dtype=float)
    n = states.size
    if sys.k2 == 0.0:
        # irreversible pairing: everything funnels into the lowest state
        pi = np.zeros(n)
        pi[0] = 1.0
    else:
        a1 = sys.k1 * states * (states - 1.0)
        a2 = sys.k2 * (sys.S0 - states) / 2.0
        Q = np.zeros((n, n))
        for i in range(n):
            if i > 0:
                Q[i, i - 1] = a1[i]
            if i < n - 1:
                Q[i, i + 1] = a2[i]
            Q[i, i] = -(a1[i] + a2[i])
        # pi Q = 0 with the normalization appended
        A = np.vstack([Q.T, np.ones(n)])
        b = np.zeros(n + 1)
        b[-1] = 1.0
        pi, *_ = np.linalg.lstsq(A, b, rcond=None)
        pi = np.maximum(pi, 0.0)
        pi /= pi.sum()
    return StationaryResult(
        states=states,
        distribution=pi,
        mean=float(pi @ states),
        second_moment=float(pi @ states**2),
        third_moment=float(pi @ states**3),
    )
