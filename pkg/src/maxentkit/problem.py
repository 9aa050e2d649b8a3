"""Problem data model: support interval, reference measure, moment data and
the constraint target set with its support function, projection and distance.

Conventions used throughout the package:

* all entropies and relative entropies are measured in bits (log base 2),
* all vector norms are Euclidean unless noted otherwise,
* a moment vector collects the raw moments ``<mu, x^i>`` for ``i = 1..M``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "SupportInterval",
    "ReferenceMeasure",
    "MomentProblem",
    "TargetSet",
    "SmoothingParams",
    "support_function",
    "project_onto_target",
    "distance_to_target",
    "operator_norm_bound",
    "reciprocal_density_moments",
]

# Dykstra settings for the box-parabola projection.
_DYKSTRA_TOL = 1e-12
_DYKSTRA_MAX_ROUNDS = 10_000


@dataclass(frozen=True)
class SupportInterval:
    """Compact support interval ``[lower, upper]`` of the unknown measure."""

    lower: float
    upper: float

    def __post_init__(self):
        if not (np.isfinite(self.lower) and np.isfinite(self.upper)):
            raise ValueError("support interval must be bounded")
        if not self.lower < self.upper:
            raise ValueError("support interval must satisfy lower < upper")

    @property
    def length(self) -> float:
        return self.upper - self.lower

    @property
    def abs_bound(self) -> float:
        """max{|x| : x in the interval}."""
        return max(abs(self.lower), abs(self.upper))


@dataclass(frozen=True)
class ReferenceMeasure:
    """Reference probability measure against which entropy is taken.

    ``uniform`` spreads unit mass over the support interval; ``discrete``
    places the given positive weights on the quadrature nodes supplied at
    evaluation time (one weight per node, full support).
    """

    kind: str = "uniform"
    weights: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in ("uniform", "discrete"):
            raise ValueError(f"unknown reference measure kind: {self.kind!r}")
        if self.kind == "discrete":
            if self.weights is None:
                raise ValueError("discrete reference measure needs weights")
            w = np.asarray(self.weights, dtype=float)
            if np.any(w <= 0.0):
                raise ValueError("discrete reference weights must be strictly positive")
            if abs(w.sum() - 1.0) > 1e-12:
                raise ValueError("discrete reference weights must sum to 1")
            object.__setattr__(self, "weights", w)


@dataclass(frozen=True)
class MomentProblem:
    """Moment-constrained entropy problem data.

    ``observed[i-1]`` is the noisy i-th raw moment, ``uncertainty[i-1]`` the
    radius of the symmetric interval the measurement error lives in.
    """

    support: SupportInterval
    order: int
    observed: np.ndarray
    uncertainty: np.ndarray
    reference: ReferenceMeasure = field(default_factory=ReferenceMeasure)

    def __post_init__(self):
        if self.order < 1:
            raise ValueError("moment order must be >= 1")
        y = np.asarray(self.observed, dtype=float)
        u = np.asarray(self.uncertainty, dtype=float)
        if y.shape != (self.order,):
            raise ValueError(f"expected {self.order} observed moments, got shape {y.shape}")
        if u.shape != (self.order,):
            raise ValueError(f"expected {self.order} uncertainty radii, got shape {u.shape}")
        if np.any(u < 0.0):
            raise ValueError("uncertainty radii must be nonnegative")
        object.__setattr__(self, "observed", y)
        object.__setattr__(self, "uncertainty", u)

    def target_box(self) -> "TargetSet":
        """The canonical target set: a box of radius ``uncertainty`` around
        the observed moments."""
        return TargetSet.box(self.observed, self.uncertainty)


@dataclass(frozen=True)
class TargetSet:
    """Convex set T of admissible moment vectors.

    Three shapes cover every instance used by the solver: an axis-aligned
    box, a Euclidean ball, and the planar set
    ``{x : x1 >= l1, x2 <= l2, x1^2 <= x2}`` (the region between a parabola
    and a horizontal cap, used by the constrained-MDP application).
    """

    kind: str
    center: np.ndarray | None = None
    radii: np.ndarray | None = None
    radius: float | None = None
    l1: float | None = None
    l2: float | None = None

    @classmethod
    def box(cls, center, radii) -> "TargetSet":
        center = np.asarray(center, dtype=float)
        radii = np.asarray(radii, dtype=float)
        if center.shape != radii.shape:
            raise ValueError("box center and radii dimensions differ")
        if np.any(radii < 0.0):
            raise ValueError("box radii must be nonnegative")
        return cls(kind="box", center=center, radii=radii)

    @classmethod
    def ball(cls, center, radius: float) -> "TargetSet":
        if radius < 0.0:
            raise ValueError("ball radius must be nonnegative")
        return cls(kind="ball", center=np.asarray(center, dtype=float), radius=float(radius))

    @classmethod
    def box_parabola(cls, l1: float, l2: float) -> "TargetSet":
        if not l1 * l1 < l2:
            raise ValueError("box-parabola set needs l1^2 < l2 for a nonempty interior")
        return cls(kind="box-parabola", l1=float(l1), l2=float(l2))

    @property
    def dim(self) -> int:
        if self.kind == "box":
            return self.center.size
        if self.kind == "ball":
            return self.center.size
        return 2

    def max_norm(self) -> float:
        """max{||x||_2 : x in T}, used to size the smoothing parameters."""
        if self.kind == "box":
            best = 0.0
            for signs in itertools.product((-1.0, 1.0), repeat=self.dim):
                v = self.center + np.asarray(signs) * self.radii
                best = max(best, float(np.linalg.norm(v)))
            return best
        if self.kind == "ball":
            return float(np.linalg.norm(self.center)) + self.radius
        # x1 ranges over [l1, sqrt(l2)], x2 over [x1^2, l2]; both |x1| and x2
        # are maximised on the cap x2 = l2.
        x1_sq = max(self.l1 * self.l1, self.l2)
        return float(np.sqrt(x1_sq + self.l2 * self.l2))


@dataclass(frozen=True)
class SmoothingParams:
    """Pair of strictly positive smoothing parameters: ``eta1`` smooths the
    support term of the dual, ``eta2`` makes the dual strongly concave."""

    eta1: float
    eta2: float

    def __post_init__(self):
        if not (self.eta1 > 0.0 and self.eta2 > 0.0):
            raise ValueError("smoothing parameters must be strictly positive")


def _check_dim(T: TargetSet, v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.shape != (T.dim,):
        raise ValueError(f"vector of dimension {v.shape} does not match target set of dimension {T.dim}")
    return v


def support_function(T: TargetSet, z) -> float:
    """sigma_T(z) = max over x in T of <x, z>."""
    z = _check_dim(T, z)
    if T.kind == "box":
        return float(T.center @ z + T.radii @ np.abs(z))
    if T.kind == "ball":
        return float(T.center @ z) + T.radius * float(np.linalg.norm(z))
    # box-parabola, parametrised by x1 in [l1, sqrt(l2)]
    z1, z2 = z
    hi = np.sqrt(T.l2)
    if z2 >= 0.0:
        # optimal x2 sits on the cap
        return T.l2 * z2 + (hi * z1 if z1 >= 0.0 else T.l1 * z1)
    # optimal x2 sits on the parabola: maximise z1*x1 + z2*x1^2, concave in x1
    x1 = np.clip(-z1 / (2.0 * z2), T.l1, hi)
    return float(z1 * x1 + z2 * x1 * x1)


def _project_parabola_epigraph(v: np.ndarray) -> np.ndarray:
    """Project onto {x : x2 >= x1^2} via the stationarity cubic."""
    a, b = v
    if b >= a * a:
        return v.copy()
    # minimise (y-a)^2 + (y^2-b)^2 over y; stationarity: 2y^3 + (1-2b)y - a = 0
    roots = np.roots([2.0, 0.0, 1.0 - 2.0 * b, -a])
    real = roots[np.abs(roots.imag) < 1e-9].real
    cand = np.stack([real, real * real], axis=1)
    d2 = np.sum((cand - v) ** 2, axis=1)
    return cand[np.argmin(d2)]


def project_onto_target(T: TargetSet, y) -> np.ndarray:
    """Euclidean projection onto T.

    Box and ball projections are closed form.  The box-parabola set is
    handled by Dykstra's alternating projections over its three defining
    constraints, with the parabola-epigraph projection computed from the
    stationarity cubic.
    """
    y = _check_dim(T, y)
    if T.kind == "box":
        return np.clip(y, T.center - T.radii, T.center + T.radii)
    if T.kind == "ball":
        d = y - T.center
        nrm = float(np.linalg.norm(d))
        if nrm <= T.radius:
            return y.copy()
        return T.center + d * (T.radius / nrm)

    def proj_l1(v):
        out = v.copy()
        out[0] = max(out[0], T.l1)
        return out

    def proj_l2(v):
        out = v.copy()
        out[1] = min(out[1], T.l2)
        return out

    projections = (proj_l1, proj_l2, _project_parabola_epigraph)
    x = y.copy()
    increments = [np.zeros(2) for _ in projections]
    for _ in range(_DYKSTRA_MAX_ROUNDS):
        delta = 0.0
        for i, proj in enumerate(projections):
            shifted = x + increments[i]
            x_new = proj(shifted)
            increments[i] = shifted - x_new
            delta = max(delta, float(np.max(np.abs(x_new - x))))
            x = x_new
        if delta < _DYKSTRA_TOL:
            return x
    raise RuntimeError("Dykstra projection did not converge; degenerate target set data")


def distance_to_target(T: TargetSet, x) -> float:
    """d(x, T) = ||x - pi_T(x)||_2; zero iff x lies in T."""
    x = _check_dim(T, x)
    return float(np.linalg.norm(x - project_onto_target(T, x)))


def operator_norm_bound(problem: MomentProblem) -> float:
    """Upper bound sum_i B^i on the norm of the moment operator, where B is
    the largest absolute support point.  Conservative but cheap; it enters
    the gradient Lipschitz constant and the a-priori iteration counts."""
    B = problem.support.abs_bound
    return float(sum(B**i for i in range(1, problem.order + 1)))


def reciprocal_density_moments(order: int = 3) -> np.ndarray:
    """First raw moments of the density proportional to 1/(1+x) on [0, 1].

    This is the built-in benchmark instance for the density-estimation
    demo: the moments are known in closed form, the generating density is
    never used by the solver.
    """
    ln2 = np.log(2.0)
    moments = []
    # <x^i> = integral of x^i / ((1+x) ln 2): expand x^i/(1+x) by division
    for i in range(1, order + 1):
        val = 0.0
        for j in range(1, i + 1):
            val += (-1.0) ** (i - j) / j
        val += (-1.0) ** i * ln2
        moments.append(val / ln2)
    return np.asarray(moments)
