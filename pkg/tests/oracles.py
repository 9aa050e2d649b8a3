"""Independent oracles used by the test suite.

Everything here deliberately avoids the dual/Gibbs machinery of the package
under test: the optimizers are plain projected-gradient loops on the primal
simplex, projections are Dykstra cycles over elementary sets, and reference
values come from dense grid searches.
"""

from __future__ import annotations

import numpy as np

LN2 = np.log(2.0)


def project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the probability simplex."""
    u = np.sort(v)[::-1]
    css = np.cumsum(u)
    rho = np.nonzero(u * np.arange(1, v.size + 1) > (css - 1.0))[0][-1]
    theta = (css[rho] - 1.0) / (rho + 1.0)
    return np.maximum(v - theta, 0.0)


def project_halfspace(v: np.ndarray, a: np.ndarray, b: float) -> np.ndarray:
    """Projection onto {x : a.x <= b}."""
    slack = a @ v - b
    if slack <= 0.0:
        return v
    return v - a * (slack / (a @ a))


def dykstra(v: np.ndarray, projections, tol=1e-13, max_rounds=20000) -> np.ndarray:
    """Dykstra's algorithm over a list of projection callables."""
    x = v.copy()
    incs = [np.zeros_like(v) for _ in projections]
    for _ in range(max_rounds):
        delta = 0.0
        for i, proj in enumerate(projections):
            shifted = x + incs[i]
            x_new = proj(shifted)
            incs[i] = shifted - x_new
            delta = max(delta, float(np.max(np.abs(x_new - x))))
            x = x_new
        if delta < tol:
            break
    return x


def feasible_set_projector(features: np.ndarray, center: np.ndarray, radii: np.ndarray):
    """Projector onto {mu in simplex : |features mu - center| <= radii},
    assembled from the simplex and the 2M moment halfspaces."""
    projs = [project_simplex]
    for i in range(features.shape[0]):
        a = features[i]
        hi = center[i] + radii[i]
        lo = center[i] - radii[i]
        projs.append(lambda v, a=a, hi=hi: project_halfspace(v, a, hi))
        projs.append(lambda v, a=a, lo=lo: project_halfspace(v, -a, -lo))
    return lambda v: dykstra(v, projs)


def kl_bits(mu: np.ndarray, nu: np.ndarray) -> float:
    mask = mu > 0.0
    return float(np.sum(mu[mask] * np.log2(mu[mask] / nu[mask])))


def projected_gradient_maxent(
    features: np.ndarray,
    nu: np.ndarray,
    center: np.ndarray,
    radii: np.ndarray,
    linear_cost: np.ndarray | None = None,
    step: float = 1e-3,
    tol: float = 1e-8,
    max_iter: int = 1_000_000,
):
    """Projected gradient descent for

        min_{mu}  D(mu||nu) + <mu, cost>   s.t.  mu in simplex, |A mu - c| <= r

    run to the prox-gradient stationarity ``tol``.  Returns (mu, objective).
    """
    project = feasible_set_projector(features, center, radii)
    mu = project(nu.copy())
    for _ in range(max_iter):
        grad = (np.log2(np.maximum(mu, 1e-300)) - np.log2(nu)) + 1.0 / LN2
        if linear_cost is not None:
            grad = grad + linear_cost
        mu_next = project(mu - step * grad)
        residual = float(np.max(np.abs(mu_next - mu))) / step
        mu = mu_next
        if residual <= tol:
            break
    obj = kl_bits(mu, nu)
    if linear_cost is not None:
        obj += float(mu @ linear_cost)
    return mu, obj


def projected_gradient_simplex_kl(
    nu: np.ndarray,
    linear_cost: np.ndarray,
    step: float = 1e-3,
    tol: float = 1e-10,
    max_iter: int = 200_000,
):
    """min over the simplex of D(mu||nu) + <mu, cost> by projected gradient;
    brute-force counterpart of the closed-form Gibbs minimizer."""
    mu = nu.copy()
    for _ in range(max_iter):
        grad = (np.log2(np.maximum(mu, 1e-300)) - np.log2(nu)) + 1.0 / LN2 + linear_cost
        mu_next = project_simplex(mu - step * grad)
        residual = float(np.max(np.abs(mu_next - mu))) / step
        mu = mu_next
        if residual <= tol:
            break
    return mu, kl_bits(mu, nu) + float(mu @ linear_cost)


def grid_support_function(l1: float, l2: float, z: np.ndarray, n: int = 4001) -> float:
    """Dense-grid maximum of <x, z> over the box-parabola set."""
    x1 = np.linspace(l1, np.sqrt(l2), n)
    # for each x1 the inner max over x2 in [x1^2, l2] is attained at an end
    lo = x1**2
    vals_hi = z[0] * x1 + z[1] * l2
    vals_lo = z[0] * x1 + z[1] * lo
    return float(max(vals_hi.max(), vals_lo.max()))


def grid_projection_argmin(l1: float, l2: float, y: np.ndarray, n: int = 2001):
    """Dense-grid argmin of ||x - y|| over the box-parabola set."""
    x1 = np.linspace(l1, np.sqrt(l2), n)
    best = None
    best_d = np.inf
    for a in x1:
        x2 = np.linspace(a * a, l2, n // 4)
        d2 = (a - y[0]) ** 2 + (x2 - y[1]) ** 2
        i = int(np.argmin(d2))
        if d2[i] < best_d:
            best_d = float(d2[i])
            best = np.array([a, x2[i]])
    return best, np.sqrt(best_d)
