"""Mean-field ladder with exogenous imitation and leapfrog weights.

Levels are always in the relabeled frame ``1..m``: after every step the
ladder is shifted down by one so the occupied window never moves. Vectors
are plain ``float64`` arrays; index ``i`` holds level ``i + 1``.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, NumericError, ParameterError

NORM_TOL = 1e-12
RENORM_TOL = 1e-9


def _normalized(v, what):
    v = np.asarray(v, dtype=float)
    if v.ndim != 1:
        raise ParameterError(f"{what} must be one-dimensional")
    if not np.all(np.isfinite(v)) or np.any(v < 0):
        raise ParameterError(f"{what} must be finite and non-negative")
    s = v.sum()
    err = abs(s - 1.0)
    if err <= NORM_TOL:
        return v
    if err <= RENORM_TOL:
        warnings.warn(f"{what} off by {err:.2e}; renormalizing", RuntimeWarning, stacklevel=3)
        return v / s
    raise ParameterError(f"{what} sums to {s!r}, expected 1")


def as_density(f, m=None):
    """Validate a density vector, renormalizing tiny rounding drift."""
    f = _normalized(f, "density")
    if m is not None and f.shape[0] != m:
        raise ParameterError(f"density has length {f.shape[0]}, ladder has m={m}")
    return f


@dataclass(frozen=True)
class LadderConfig:
    m: int
    a: float
    q: tuple

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 2:
            raise ParameterError(f"m must be an integer >= 2, got {self.m!r}")
        if not 0.0 < self.a < 1.0:
            raise ParameterError(f"a must lie in (0, 1), got {self.a!r}")
        q = _normalized(self.q, "q")
        if q.shape[0] != self.m:
            raise ParameterError(f"q has length {q.shape[0]}, expected m={self.m}")
        object.__setattr__(self, "m", int(self.m))
        object.__setattr__(self, "a", float(self.a))
        object.__setattr__(self, "q", tuple(float(x) for x in q))

    @property
    def q_array(self):
        return np.array(self.q)

    @property
    def Q(self):
        """Tail sums ``Q_s = q_s + ... + q_m``; ``Q_1 = 1``."""
        return np.cumsum(self.q_array[::-1])[::-1]

    @classmethod
    def leapfrog_only(cls, m, a):
        q = np.zeros(m)
        q[-1] = 1.0
        return cls(m, a, tuple(q))


def build_transition(config: LadderConfig) -> np.ndarray:
    """Column-stochastic matrix ``A`` with ``f_{t+1} = A f_t``."""
    m, a = config.m, config.a
    A = a * np.eye(m)
    A[np.arange(m - 1), np.arange(1, m)] = 1.0 - a
    A[:, 0] += (1.0 - a) * config.q_array
    return A


def _step(f, a, q):
    # fall back from the level above, innovation, and bottom-level jumpers
    out = a * f + (1.0 - a) * f[0] * q
    out[:-1] += (1.0 - a) * f[1:]
    return out


def step_exogenous(f, config: LadderConfig) -> np.ndarray:
    f = as_density(f, config.m)
    return _step(f, config.a, config.q_array)


def stationary_exogenous(config: LadderConfig) -> np.ndarray:
    """Closed-form stationary density ``f^s = Q_s / sum(Q)``."""
    Q = config.Q
    return Q / Q.sum()


def power_iterate(f0, config: LadderConfig, tol=1e-13, max_steps=1_000_000):
    """Iterate ``A`` from ``f0`` until the L1 step is below ``tol``.

    Returns ``(f, steps)``. Raises ``ConvergenceError`` carrying the last
    iterate when ``max_steps`` is exhausted.
    """
    if tol <= 0:
        raise ParameterError("tol must be positive")
    f = as_density(f0, config.m)
    A = build_transition(config)
    for k in range(max_steps):
        g = A @ f
        if np.abs(g - f).sum() < tol:
            return (f if k == 0 else g), k
        f = g
    raise ConvergenceError(f"power iteration did not converge in {max_steps} steps", last=f)


def second_eigenvalue(config: LadderConfig) -> complex:
    """Eigenvalue of ``A`` with the second-largest modulus."""
    try:
        ev = np.linalg.eigvals(build_transition(config))
    except np.linalg.LinAlgError as exc:  # pragma: no cover
        raise NumericError(str(exc)) from exc
    order = np.argsort(np.abs(ev))
    lam = ev[order[-2]]
    return complex(lam)


def second_eigenvalue_modulus(config: LadderConfig) -> float:
    lam = abs(second_eigenvalue(config))
    if not lam < 1.0:
        raise NumericError(f"second eigenvalue modulus {lam} is not below 1")
    return float(lam)
