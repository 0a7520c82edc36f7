"""Derivative-free minimization with box and simplex-type constraints.

Constraints are enforced by smooth reparameterization to an unconstrained
space (never by penalties), so every evaluated point is feasible and
likelihood values stay comparable across models. The driver is Nelder-Mead
with adaptive parameters, optionally sharpened by a numerical-gradient BFGS
pass; the best point ever evaluated is what gets returned.
"""

from dataclasses import dataclass

import numpy as np
from scipy import optimize as sciopt
from scipy.special import expit, logit, logsumexp

from volnet.errors import InputError

_PENALTY = 1e10


@dataclass(frozen=True)
class SimplexGroup:
    """Joint constraint sum_i coeffs[i]*theta[indices[i]] < bound, theta >= 0."""

    indices: tuple
    coeffs: tuple
    bound: float

    def __post_init__(self):
        object.__setattr__(self, "indices", tuple(int(i) for i in self.indices))
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))
        if len(self.indices) != len(self.coeffs) or not self.indices:
            raise InputError("simplex group needs matching, non-empty indices/coeffs")
        if any(c <= 0 for c in self.coeffs) or self.bound <= 0:
            raise InputError("simplex group coefficients and bound must be positive")


@dataclass(frozen=True)
class BoxedProblem:
    """Objective (to minimize) with per-coordinate bounds and optional
    simplex groups; +/-inf bounds allowed."""

    objective: object
    lower: np.ndarray
    upper: np.ndarray
    simplex_groups: tuple = ()

    def __post_init__(self):
        lower = np.asarray(self.lower, dtype=np.float64)
        upper = np.asarray(self.upper, dtype=np.float64)
        if lower.shape != upper.shape or lower.ndim != 1:
            raise InputError("lower/upper must be 1-d and equally long")
        if (lower > upper).any():
            raise InputError("lower bound exceeds upper bound")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        object.__setattr__(self, "simplex_groups", tuple(self.simplex_groups))
        grouped = [i for g in self.simplex_groups for i in g.indices]
        if len(set(grouped)) != len(grouped):
            raise InputError("simplex groups must not share coordinates")
        if any(i < 0 or i >= len(lower) for i in grouped):
            raise InputError("simplex group index out of range")

    @property
    def dimension(self):
        return len(self.lower)

    def _grouped(self):
        return {i for g in self.simplex_groups for i in g.indices}


@dataclass
class Settings:
    ftol: float = 1e-8
    xtol: float = 1e-8
    max_evals: int = 20000
    polish: bool = True


@dataclass
class OptResult:
    x: np.ndarray
    fun: float
    converged: bool
    iterations: int
    restarts: int = 0


def to_unconstrained(problem, theta):
    """Map a strictly interior point into the unconstrained search space."""
    theta = np.asarray(theta, dtype=np.float64)
    x = np.empty_like(theta)
    grouped = problem._grouped()
    for i in range(problem.dimension):
        if i in grouped:
            continue
        lo, hi = problem.lower[i], problem.upper[i]
        if np.isinf(lo) and np.isinf(hi):
            x[i] = theta[i]
        elif np.isinf(hi):
            if theta[i] <= lo:
                raise InputError(f"coordinate {i} not strictly inside bounds")
            x[i] = np.log(theta[i] - lo)
        elif np.isinf(lo):
            if theta[i] >= hi:
                raise InputError(f"coordinate {i} not strictly inside bounds")
            x[i] = np.log(hi - theta[i])
        else:
            if not (lo < theta[i] < hi):
                raise InputError(f"coordinate {i} not strictly inside bounds")
            x[i] = logit((theta[i] - lo) / (hi - lo))
    for g in problem.simplex_groups:
        s = np.array([c * theta[i] / g.bound for i, c in zip(g.indices, g.coeffs)])
        slack = 1.0 - s.sum()
        if (s <= 0).any() or slack <= 0:
            raise InputError("simplex-group coordinates not strictly interior")
        for k, i in enumerate(g.indices):
            x[i] = np.log(s[k] / slack)
    return x


def to_constrained(problem, x):
    """Inverse of to_unconstrained."""
    x = np.asarray(x, dtype=np.float64)
    theta = np.empty_like(x)
    grouped = problem._grouped()
    for i in range(problem.dimension):
        if i in grouped:
            continue
        lo, hi = problem.lower[i], problem.upper[i]
        if np.isinf(lo) and np.isinf(hi):
            theta[i] = x[i]
        elif np.isinf(hi):
            theta[i] = lo + np.exp(x[i])
        elif np.isinf(lo):
            theta[i] = hi - np.exp(x[i])
        else:
            theta[i] = lo + (hi - lo) * expit(x[i])
    for g in problem.simplex_groups:
        xs = np.array([x[i] for i in g.indices])
        lse = logsumexp(np.concatenate([[0.0], xs]))
        s = np.exp(xs - lse)
        for k, (i, c) in enumerate(zip(g.indices, g.coeffs)):
            theta[i] = g.bound * s[k] / c
    return theta


def minimize(problem, start, settings=None):
    """Minimize within the feasible region from a strictly interior start."""
    settings = settings or Settings()
    start = np.asarray(start, dtype=np.float64)
    if start.shape != (problem.dimension,):
        raise InputError(f"start must have length {problem.dimension}")
    x0 = to_unconstrained(problem, start)  # raises InputError if outside

    f0 = problem.objective(start)
    if not np.isfinite(f0):
        raise InputError("objective is not finite at the start point")

    best = {"x": x0.copy(), "f": float(f0)}

    def g(x):
        theta = to_constrained(problem, x)
        v = problem.objective(theta)
        if not np.isfinite(v):
            return _PENALTY
        v = float(v)
        if v < best["f"]:
            best["f"] = v
            best["x"] = np.array(x, dtype=np.float64)
        return v

    res = sciopt.minimize(
        g,
        x0,
        method="Nelder-Mead",
        options={
            "fatol": settings.ftol,
            "xatol": settings.xtol,
            "maxfev": settings.max_evals,
            "adaptive": True,
        },
    )
    iterations = int(res.nit)
    converged = bool(res.success)

    if settings.polish:
        try:
            res2 = sciopt.minimize(g, best["x"], method="BFGS",
                                   options={"maxiter": 200})
            iterations += int(res2.nit)
            converged = converged or bool(res2.success)
        except (FloatingPointError, OverflowError):
            pass

    argmin = to_constrained(problem, best["x"])
    return OptResult(x=argmin, fun=best["f"], converged=converged,
                     iterations=iterations, restarts=0)


def multi_start(problem, starts, settings=None):
    """Best minimize() outcome over a list of starts (deterministic)."""
    starts = list(starts)
    if not starts:
        raise InputError("multi_start needs at least one start")
    best = None
    iterations = 0
    for s in starts:
        r = minimize(problem, s, settings)
        iterations += r.iterations
        if best is None or r.fun < best.fun or (r.fun == best.fun and not best.converged):
            best = r
    best.iterations = iterations
    best.restarts = len(starts) - 1
    return best
