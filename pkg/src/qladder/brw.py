"""Finite-population branching random walk with selection.

Each firm independently innovates (moves up one level) with probability
``a`` and is imitated (gains a copy at its current level) with probability
``mu``; then firms at the bottom are culled, either down to ``N`` survivors
(N-BRW) or by removing everyone ``L`` or more levels behind the leader
(L-BRW). The state is a vector of counts per level above a moving floor.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np

from . import _kernels
from ._accel import backend_name
from .errors import ExtinctionError, ParameterError

GENERATOR_ID = "numpy.random.Generator(PCG64)"
SEED_MIXING = "PCG64(SeedSequence([base_seed, replica_index]))"


@dataclass(frozen=True)
class BRWParams:
    a: float
    mu: float

    def __post_init__(self):
        if not 0.0 < self.a < 1.0:
            raise ParameterError(f"a must lie in (0, 1), got {self.a!r}")
        if not 0.0 < self.mu <= 1.0:
            raise ParameterError(f"mu must lie in (0, 1], got {self.mu!r}")

    @property
    def outcomes(self):
        """The four single-firm outcomes as ``(probability, child offsets)``."""
        a, mu = self.a, self.mu
        return (
            ((1 - a) * (1 - mu), (0,)),
            ((1 - a) * mu, (0, 0)),
            (a * (1 - mu), (1,)),
            (a * mu, (0, 1)),
        )


@dataclass(frozen=True)
class KeepTopN:
    N: int

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise ParameterError(f"N must be a positive integer, got {self.N!r}")

    mode = _kernels.MODE_TOP_N

    @property
    def param(self):
        return float(self.N)


@dataclass(frozen=True)
class WindowL:
    L: int

    def __post_init__(self):
        if int(self.L) != self.L or self.L < 1:
            raise ParameterError(f"L must be a positive integer, got {self.L!r}")

    mode = _kernels.MODE_WINDOW

    @property
    def param(self):
        return float(self.L)


CullPolicy = Union[KeepTopN, WindowL]


@dataclass(frozen=True)
class ParticleState:
    """Counts per level for levels ``floor, floor+1, ...`` (float64 holding integers)."""

    floor: int
    counts: np.ndarray
    time: int = 0

    def __post_init__(self):
        c = np.asarray(self.counts, dtype=np.float64)
        if c.ndim != 1 or c.size == 0:
            raise ParameterError("counts must be a non-empty 1-d array")
        if np.any(c < 0) or np.any(c != np.floor(c)):
            raise ParameterError("counts must be non-negative integers")
        c, floor = _kernels.trim_np(c, int(self.floor))
        if c.size == 0:
            raise ExtinctionError("state has no firms", step=self.time)
        c.setflags(write=False)
        object.__setattr__(self, "counts", c)
        object.__setattr__(self, "floor", floor)

    @classmethod
    def point_mass(cls, n, level=0):
        return cls(level, np.array([float(n)]))

    @property
    def total(self):
        return _kernels.total_np(self.counts)

    @property
    def y_min(self):
        return self.floor

    @property
    def y_max(self):
        return self.floor + self.counts.size - 1

    def levels(self):
        return np.arange(self.y_min, self.y_max + 1)


@dataclass
class TrajectoryRecord:
    y_max: np.ndarray
    y_min: np.ndarray
    total: np.ndarray
    snapshot_steps: np.ndarray
    snapshots: list  # counts from y_min upward, one array per snapshot
    final: ParticleState
    meta: dict = field(default_factory=dict)

    @property
    def steps(self):
        return np.arange(1, self.y_max.size + 1)

    @property
    def support(self):
        return self.y_max - self.y_min

    def snapshots_after(self, burn_in):
        return [s for t, s in zip(self.snapshot_steps, self.snapshots) if t > burn_in]


def make_rng(seed, replica=None):
    """Generator for ``seed``; with ``replica`` the stream is ``SeedSequence([seed, replica])``."""
    if isinstance(seed, np.random.Generator):
        return seed
    entropy = [int(seed)] if replica is None else [int(seed), int(replica)]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))


def evolve_step(state: ParticleState, params: BRWParams, rng) -> ParticleState:
    """Reproduction phase only: every firm draws one of the four outcomes."""
    rng = make_rng(rng)
    c = _kernels.evolve_counts_np(np.asarray(state.counts), params.a, params.mu, rng)
    return ParticleState(state.floor, c, state.time + 1)


def cull(state: ParticleState, policy: CullPolicy) -> ParticleState:
    """Selection phase. ``KeepTopN`` is a no-op while the population is below ``N``."""
    c, floor = _kernels.cull_np(np.asarray(state.counts), state.floor, policy.mode, policy.param)
    if c.size == 0:
        raise ExtinctionError("culling removed every firm", step=state.time)
    return ParticleState(floor, c, state.time)


def run(initial: ParticleState, params: BRWParams, policy: CullPolicy, steps: int, seed=0,
        snapshot_every: int = 0, replica=None) -> TrajectoryRecord:
    """Alternate reproduction and culling for ``steps`` steps.

    Observables are recorded after every cull; the surviving counts are kept
    every ``snapshot_every`` steps (0 disables snapshots). The run is a pure
    function of its arguments.
    """
    if int(steps) != steps or steps < 1:
        raise ParameterError("steps must be a positive integer")
    if snapshot_every < 0:
        raise ParameterError("snapshot_every must be >= 0")
    rng = make_rng(seed, replica)
    out = _kernels.run_trajectory(
        np.array(initial.counts, dtype=np.float64), np.int64(initial.floor), float(params.a),
        float(params.mu), np.int64(policy.mode), float(policy.param), np.int64(steps), rng,
        np.int64(snapshot_every),
    )
    c, floor, ymax, ymin, tot, snap_steps, offs, data = out
    snaps = [data[offs[i]: offs[i + 1]].copy() for i in range(snap_steps.size)]
    final = ParticleState(int(floor), c, initial.time + int(steps))
    meta = {
        "a": params.a,
        "mu": params.mu,
        "policy": type(policy).__name__,
        "policy_param": int(policy.param),
        "steps": int(steps),
        "seed": None if isinstance(seed, np.random.Generator) else int(seed),
        "replica": replica,
        "generator": GENERATOR_ID,
        "seed_mixing": SEED_MIXING,
        "backend": backend_name(),
    }
    return TrajectoryRecord(ymax, ymin, tot, snap_steps, snaps, final, meta)


def run_replicas(initial, params, policy, steps, base_seed, replicas, snapshot_every=0, workers=1):
    """Independent replicas seeded by ``(base_seed, i)``; returned in replica order."""
    def one(i):
        return run(initial, params, policy, steps, base_seed, snapshot_every, replica=i)

    if workers <= 1:
        return [one(i) for i in range(replicas)]
    from concurrent.futures import ThreadPoolExecutor

    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(one, range(replicas)))
