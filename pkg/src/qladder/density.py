"""Ladder with density-dependent imitation.

Bottom-level firms that do not innovate jump to level ``j < m`` with
probability ``mu_t * f^{j+1}`` and leapfrog to ``m`` with probability
``q_m``; ``mu_t`` is fixed by normalization. The stationary profile is a
geometric (truncated power-law) sequence with ratio ``q_m^{-1/(m-1)}``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import IllDefinedModelError, NoStationarySolutionError, ParameterError
from .ladder import _step, as_density


@dataclass(frozen=True)
class DensityModelConfig:
    m: int
    a: float
    q_m: float

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 2:
            raise ParameterError(f"m must be an integer >= 2, got {self.m!r}")
        if not 0.0 < self.a < 1.0:
            raise ParameterError(f"a must lie in (0, 1), got {self.a!r}")
        if not 0.0 <= self.q_m <= 1.0:
            raise ParameterError(f"q_m must lie in [0, 1], got {self.q_m!r}")
        object.__setattr__(self, "m", int(self.m))


@dataclass(frozen=True)
class StationarySolution:
    x: np.ndarray
    mu: float
    x1: float
    at_boundary: bool = False

    @property
    def ratio(self):
        """Consecutive ratio ``x_i / x_{i+1}``."""
        return 1.0 + self.mu * self.x1


def _check_open(q_m):
    if not 0.0 < q_m < 1.0:
        raise ParameterError(f"q_m must lie in (0, 1), got {q_m!r}")


def _ratio_minus_one(m, q_m):
    # q_m^{-1/(m-1)} - 1 without cancellation near q_m = 1
    return math.expm1(-math.log(q_m) / (m - 1))


def mu_closed_form(m: int, q_m: float) -> float:
    _check_open(q_m)
    if m < 2:
        raise ParameterError("m must be >= 2")
    return _ratio_minus_one(m, q_m) + (1.0 - q_m)


def solve_stationary_density(config: DensityModelConfig) -> StationarySolution:
    m, q_m = config.m, config.q_m
    if q_m == 0.0:
        raise NoStationarySolutionError(
            "q_m = 0: without leapfrogging the upper levels empty out and no stationary density exists"
        )
    if q_m == 1.0:
        x = np.full(m, 1.0 / m)
        return StationarySolution(x, 0.0, 1.0 / m, at_boundary=True)
    rm1 = _ratio_minus_one(m, q_m)
    mu = rm1 + (1.0 - q_m)
    x1 = rm1 / mu
    # x_i = q_m x1 r^(m-i) = x1 q_m^((i-1)/(m-1)); avoids 1 - x1 when x1 is near 1
    x = x1 * np.exp(np.arange(m) * (math.log(q_m) / (m - 1)))
    return StationarySolution(x, mu, x1)


def jump_weights(f, q_m):
    """Jump probabilities ``(q_1..q_m)`` induced by density ``f``.

    ``1 - f^1`` is evaluated as the mass above the bottom level, which keeps
    the weights accurate when almost all firms sit at level 1.
    """
    tail = f[1:].sum()
    if not tail > 0.0:
        raise IllDefinedModelError("all mass on level 1: imitation intensity is unbounded")
    q = np.empty_like(f)
    q[:-1] = (1.0 - q_m) * f[1:] / tail
    q[-1] = q_m
    return q


def imitation_intensity(f, q_m):
    """``mu_t = (1 - q_m) / (1 - f^1)``."""
    tail = np.asarray(f, dtype=float)[1:].sum()
    if not tail > 0.0:
        raise IllDefinedModelError("all mass on level 1: imitation intensity is unbounded")
    return (1.0 - q_m) / tail


def step_density(f, config: DensityModelConfig) -> np.ndarray:
    f = as_density(f, config.m)
    return _step(f, config.a, jump_weights(f, config.q_m))


def iterate_density(f0, config: DensityModelConfig, steps: int) -> np.ndarray:
    """Trajectory of ``steps`` applications of ``step_density``; row 0 is ``f0``."""
    f = as_density(f0, config.m)
    out = np.empty((steps + 1, config.m))
    out[0] = f
    for t in range(steps):
        f = _step(f, config.a, jump_weights(f, config.q_m))
        out[t + 1] = f
    return out


def decay_trajectory_q0(f2_0: float, a: float, t: int) -> float:
    """Top-level mass after ``t`` steps of the two-level model with ``q_m = 0``."""
    return f2_0 * a**t
