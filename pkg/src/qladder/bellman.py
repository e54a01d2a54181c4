"""Bellman solvers that endogenize the support length.

The ladder is solved on a finite grid ``j_min..m`` in the relabeled frame.
Payoffs are ``lambda**(j - m)`` (frontier payoff 1) so that the problem
only depends on the distance to the frontier; a firm at ``j_min`` is
forced onto the leapfrog/imitation branch. Results are trustworthy only
when the threshold lies well above the grid floor.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .density import DensityModelConfig, solve_stationary_density
from .errors import ConvergenceError, GridTooSmallError, ModelViolationError, ParameterError

BOUNDARY_MARGIN = 3


@dataclass(frozen=True)
class EconomicParams:
    a: float
    lam: float
    beta0: float
    C: float

    def __post_init__(self):
        if not 0.0 < self.a < 1.0:
            raise ParameterError(f"a must lie in (0, 1), got {self.a!r}")
        if not self.lam > 1.0:
            raise ParameterError(f"lambda must exceed 1, got {self.lam!r}")
        if not 0.0 < self.beta0 < 1.0:
            raise ParameterError(f"beta0 must lie in (0, 1), got {self.beta0!r}")
        if not self.C >= 0.0:
            raise ParameterError(f"C must be non-negative, got {self.C!r}")
        if not self.beta < 1.0:
            raise ParameterError(f"beta = lambda*beta0 = {self.beta!r} must be < 1")

    @property
    def beta(self):
        return self.lam * self.beta0

    def payoffs(self, levels, m):
        return self.lam ** (np.asarray(levels, dtype=float) - m)


@dataclass(frozen=True)
class ValueSolution:
    levels: np.ndarray
    V: np.ndarray
    V_LF: np.ndarray
    V_NLF: np.ndarray  # NaN at j_min, where no-jump continuation is off-grid
    j0: int
    m: int
    residuals: list = field(default_factory=list, repr=False)

    @property
    def j_min(self):
        return int(self.levels[0])

    @property
    def support_size(self):
        return self.m - self.j0 + 1

    @property
    def delta(self):
        return self.V_LF - self.V_NLF

    def at(self, j):
        return int(j) - self.j_min


def _check_grid(m, j_min):
    if int(m) != m or int(j_min) != j_min:
        raise ParameterError("m and j_min must be integers")
    if j_min > m - 1:
        raise ParameterError(f"j_min={j_min} must be <= m-1={m - 1}")


def _value_iterate(update, V0, beta, tol, max_iter):
    stop = tol * (1.0 - beta) / beta
    V = V0
    residuals = []
    for _ in range(max_iter):
        W = update(V)
        r = float(np.max(np.abs(W - V)))
        residuals.append(r)
        V = W
        if r < stop:
            return V, residuals
    raise ConvergenceError(f"value iteration did not reach tol={tol} in {max_iter} sweeps", last=V)


def _threshold(delta, levels):
    """Largest level with a strictly positive leapfrog gain (``nan`` ignored)."""
    pos = np.flatnonzero(delta[1:] > 0.0) + 1
    if pos.size == 0:
        return int(levels[0])
    # single crossing: positive block must be a prefix of the interior
    last = pos[-1]
    if pos.size != last:
        raise ModelViolationError("leapfrog gain changes sign more than once")
    return int(levels[last])


def _finish(levels, V, V_LF, V_NLF, m, residuals, j_min):
    if np.any(np.diff(V) < 0.0):
        raise ModelViolationError("value function is not non-decreasing in the level")
    j0 = _threshold(V_LF - V_NLF, levels)
    if j0 < j_min + BOUNDARY_MARGIN:
        raise GridTooSmallError(
            f"threshold j0={j0} is within {BOUNDARY_MARGIN} levels of the grid floor j_min={j_min}; "
            "lower j_min (or no level finds leapfrogging worthwhile)"
        )
    return ValueSolution(levels, V, V_LF, V_NLF, j0, m, residuals)


def solve_leapfrog_only(params: EconomicParams, m: int, j_min: int = 0, tol=1e-10, max_iter=200_000):
    """Value iteration for the leapfrog-only model.

    ``V(j) = p_j + beta*a*V(j) + (1-a)*max(beta*V(m) - C, beta*V(j-1))``
    """
    _check_grid(m, j_min)
    if tol <= 0:
        raise ParameterError("tol must be positive")
    a, beta, C = params.a, params.beta, params.C
    levels = np.arange(j_min, m + 1)
    p = params.payoffs(levels, m)

    def update(V):
        jump = beta * V[-1] - C
        cont = np.empty_like(V)
        cont[0] = jump
        cont[1:] = np.maximum(jump, beta * V[:-1])
        return p + beta * a * V + (1.0 - a) * cont

    V, residuals = _value_iterate(update, np.zeros(levels.size), beta, tol, max_iter)
    V_LF = p + beta * a * V + (1.0 - a) * (beta * V[-1] - C)
    V_NLF = np.full_like(V, np.nan)
    V_NLF[1:] = p[1:] + beta * a * V[1:] + beta * (1.0 - a) * V[:-1]
    return _finish(levels, V, V_LF, V_NLF, m, residuals, j_min)


def support_size_invariance_check(params: EconomicParams, m1: int, m2: int, depth: int | None = None, tol=1e-10):
    """Whether the endogenous support size is the same at frontier ``m1`` and ``m2``.

    ``depth`` is the grid depth below the frontier (default: ``m1``).
    """
    depth = m1 if depth is None else depth
    s1 = solve_leapfrog_only(params, m1, m1 - depth, tol).support_size
    s2 = solve_leapfrog_only(params, m2, m2 - depth, tol).support_size
    return s1 == s2


def delta_v(params: EconomicParams, V, j, f=None, q_m=None, m=None, j_min=0):
    """Gain from leapfrogging (or paying to imitate) at level ``j``.

    ``V`` is indexed from ``j_min``. Without ``f``: ``(1-a)[beta V(m) - C - beta V(j-1)]``.
    With a density ``f`` on the same grid and leapfrog weight ``q_m``:
    ``(1-a)(beta * sum_{k>=j} q_k(f) [V(k) - V(j-1)] - C)``.
    """
    V = np.asarray(V, dtype=float)
    m = j_min + V.size - 1 if m is None else m
    i = j - j_min
    if i < 1 or j > m:
        raise ParameterError(f"delta_v needs V at j-1 and j; got j={j}")
    a, beta, C = params.a, params.beta, params.C
    if f is None:
        return (1.0 - a) * (beta * V[-1] - C - beta * V[i - 1])
    q = imitation_weights(f, q_m)
    return (1.0 - a) * (beta * np.dot(q[i:], V[i:] - V[i - 1]) - C)


def imitation_weights(f, q_m):
    """``q_k(f) = (1 - q_m) f^{k+1}`` for ``k < m`` and the exogenous ``q_m``."""
    f = np.asarray(f, dtype=float)
    q = np.empty_like(f)
    q[:-1] = (1.0 - q_m) * f[1:]
    q[-1] = q_m
    return q


def stationary_on_grid(levels, m, s, q_m, a=0.5):
    """Stationary density of size-``s`` support ``{m-s+1..m}`` laid on the grid."""
    f = np.zeros(levels.size)
    if s == 1:
        f[-1] = 1.0
    else:
        f[-s:] = solve_stationary_density(DensityModelConfig(s, a, q_m)).x
    return f


def solve_coupled_values(params: EconomicParams, m, f, q_m, j_min=0, tol=1e-10, max_iter=200_000):
    """Stationary Bellman system with imitation against a fixed density ``f``."""
    a, beta, C = params.a, params.beta, params.C
    levels = np.arange(j_min, m + 1)
    p = params.payoffs(levels, m)
    q = imitation_weights(f, q_m)
    # mass of jumps landing at or above j, and the matrix of sums over k >= j
    tail = np.cumsum(q[::-1])[::-1]
    if tail[0] < 1.0 - 1e-12:
        raise GridTooSmallError("density support reaches the grid floor; lower j_min")
    upper = np.triu(np.ones((levels.size, levels.size))) * q[None, :]

    def lf_cont(V):
        below = np.empty_like(V)
        below[0] = 0.0
        below[1:] = V[:-1]
        return beta * (upper @ V) + beta * (1.0 - tail) * below - C

    def update(V):
        cont = lf_cont(V)
        cont[1:] = np.maximum(cont[1:], beta * V[:-1])
        return p + beta * a * V + (1.0 - a) * cont

    V, residuals = _value_iterate(update, np.zeros(levels.size), beta, tol, max_iter)
    V_LF = p + beta * a * V + (1.0 - a) * lf_cont(V)
    V_NLF = np.full_like(V, np.nan)
    V_NLF[1:] = p[1:] + beta * a * V[1:] + beta * (1.0 - a) * V[:-1]
    return _finish(levels, V, V_LF, V_NLF, m, residuals, j_min)


@dataclass(frozen=True)
class CoupledSolution:
    values: ValueSolution
    density: object  # StationarySolution, or None when the support is a single level
    f: np.ndarray
    s: int
    visited: tuple


def solve_leapfrog_imitation(params: EconomicParams, m: int, q_m: float, j_min: int = 0, tol=1e-10,
                             max_outer=100, s0=None):
    """Self-consistent support size for the leapfrog + imitation model.

    Fixed-point iteration on the support size ``s``: the stationary density
    on ``s`` levels sets the imitation odds, the Bellman system gives a
    threshold ``j0`` and ``s <- m - j0 + 1``. Stops when ``s`` repeats.
    """
    _check_grid(m, j_min)
    if not 0.0 < q_m < 1.0:
        raise ParameterError(f"q_m must lie in (0, 1), got {q_m!r}")
    levels = np.arange(j_min, m + 1)
    max_s = m - j_min + 1 - BOUNDARY_MARGIN
    if s0 is None:
        try:
            s0 = solve_leapfrog_only(params, m, j_min, tol).support_size
        except GridTooSmallError:
            s0 = 1
    s = int(min(max(s0, 1), max_s))
    visited = [s]
    for _ in range(max_outer):
        f = stationary_on_grid(levels, m, s, q_m, params.a)
        sol = solve_coupled_values(params, m, f, q_m, j_min, tol)
        s_new = sol.support_size
        if s_new == s:
            dens = None if s == 1 else solve_stationary_density(DensityModelConfig(s, params.a, q_m))
            return CoupledSolution(sol, dens, f, s, tuple(visited))
        if s_new in visited:
            cycle = visited[visited.index(s_new):]
            raise ConvergenceError(f"support size cycles through {cycle}", visited=tuple(visited))
        visited.append(s_new)
        s = s_new
    raise ConvergenceError(f"no fixed support size after {max_outer} outer iterations", visited=tuple(visited))


def self_consistent_supports(params: EconomicParams, m: int, q_m: float, j_min: int = 0, tol=1e-10):
    """Every ``s`` whose induced threshold reproduces ``s`` (exhaustive scan)."""
    levels = np.arange(j_min, m + 1)
    found = []
    for s in range(1, m - j_min + 2 - BOUNDARY_MARGIN):
        f = stationary_on_grid(levels, m, s, q_m, params.a)
        try:
            sol = solve_coupled_values(params, m, f, q_m, j_min, tol)
        except GridTooSmallError:
            continue
        if sol.support_size == s:
            found.append(s)
    return found


def long_run_distribution(sol: ValueSolution, a: float, steps: int, f0=None):
    """Evolve a density on the grid under the leapfrog-only threshold policy.

    Innovators keep their relabeled level; non-innovators at ``j <= j0`` jump
    to the frontier and the others fall back one level. ``f0`` defaults to
    uniform on the grid.
    """
    n = sol.levels.size
    f = np.full(n, 1.0 / n) if f0 is None else np.asarray(f0, dtype=float)
    k0 = sol.at(sol.j0)
    for _ in range(steps):
        g = a * f
        g[k0:-1] += (1.0 - a) * f[k0 + 1:]
        g[-1] += (1.0 - a) * f[: k0 + 1].sum()
        f = g
    return f
