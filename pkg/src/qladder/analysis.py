"""Front-velocity theory for the branching walk and estimators for simulations."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.special import expit

from . import _kernels
from .brw import BRWParams, TrajectoryRecord
from .errors import ConvergenceError, DomainError, NoMinimumError, NumericError, ParameterError, WindowError

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def _log_moment(gamma, params):
    # log[1 + mu + a(e^g - 1)], stable for large g
    a, mu = params.a, params.mu
    return np.logaddexp(math.log1p(mu - a), math.log(a) + gamma)


def speed_function(gamma, params: BRWParams):
    """``v(gamma) = log[1 + mu + a(e^gamma - 1)] / gamma``."""
    g = np.asarray(gamma, dtype=float)
    if np.any(g <= 0):
        raise ParameterError("gamma must be positive")
    out = _log_moment(g, params) / g
    return float(out) if out.ndim == 0 else out


def speed_function_enumerated(gamma, params: BRWParams):
    """Same quantity from ``(1/gamma) log E[sum_i exp(gamma eps_i)]`` over the four outcomes."""
    if gamma <= 0:
        raise ParameterError("gamma must be positive")
    moment = sum(p * sum(math.exp(gamma * e) for e in offsets) for p, offsets in params.outcomes)
    return math.log(moment) / gamma


def speed_derivative(gamma, params: BRWParams):
    """``v'(gamma) = (gamma F'(gamma) - F(gamma)) / gamma**2`` with ``F`` the log moment."""
    a, mu = params.a, params.mu
    dF = expit(gamma + math.log(a) - math.log1p(mu - a))
    return (gamma * dF - _log_moment(gamma, params)) / gamma**2


def bracket_minimum(f, x0=1.0, factor=2.0, lo_limit=1e-12, hi_limit=1e6):
    """Triple ``(x_lo, x_mid, x_hi)`` with ``f(x_mid)`` below both ends, by geometric expansion."""
    fx = f(x0)
    up, f_up = x0 * factor, f(x0 * factor)
    if f_up < fx:
        lo, mid, f_mid = x0, up, f_up
        while True:
            hi = mid * factor
            if hi > hi_limit:
                raise NoMinimumError(f"function keeps decreasing past x={mid:g}")
            f_hi = f(hi)
            if f_hi > f_mid:
                return lo, mid, hi
            lo, mid, f_mid = mid, hi, f_hi
    hi, mid, f_mid = up, x0, fx
    while True:
        lo = mid / factor
        if lo < lo_limit:
            raise NoMinimumError(f"function keeps decreasing below x={mid:g}")
        f_lo = f(lo)
        if f_lo > f_mid:
            return lo, mid, hi
        hi, mid, f_mid = mid, lo, f_lo


def golden_section(f, lo, hi, tol=1e-12, max_iter=500):
    """Minimizer of a unimodal ``f`` on ``[lo, hi]`` to interval width ``tol * (1 + |x|)``."""
    x1 = hi - INV_PHI * (hi - lo)
    x2 = lo + INV_PHI * (hi - lo)
    f1, f2 = f(x1), f(x2)
    for _ in range(max_iter):
        if hi - lo <= tol * (1.0 + abs(x1)):
            break
        if f1 <= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - INV_PHI * (hi - lo)
            f1 = f(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + INV_PHI * (hi - lo)
            f2 = f(x2)
    return 0.5 * (lo + hi)


def _second_difference(f, x, h):
    return (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h)


def second_derivative(f, x, rel_step=1e-2, check=1e-5):
    """Richardson-extrapolated central difference, cross-checked at half the step."""
    h = rel_step * max(abs(x), 1.0)

    def rich(h):
        return (4.0 * _second_difference(f, x, h / 2) - _second_difference(f, x, h)) / 3.0

    d1, d2 = rich(h), rich(h / 2)
    if abs(d1 - d2) > check * max(abs(d2), 1e-300):
        raise NumericError(f"second derivative unstable: {d1!r} vs {d2!r}")
    return d2


@dataclass(frozen=True)
class SpeedProfile:
    gamma_c: float
    v_c: float
    v_second: float
    params: BRWParams


def find_gamma_c(params: BRWParams) -> SpeedProfile:
    """Minimize the speed function: bracket, golden section, then polish ``v'(gamma) = 0``."""
    f = lambda g: speed_function(g, params)  # noqa: E731
    lo, _, hi = bracket_minimum(f, 1.0)
    g = golden_section(f, lo, hi)
    # golden section stalls at ~sqrt(eps) on the flat bottom; refine on the derivative
    d = lambda x: speed_derivative(x, params)  # noqa: E731
    w = 1e-4 * g
    while d(g - w) > 0 or d(g + w) < 0:
        w *= 2.0
        if w > g:
            break
    if d(g - w) < 0 < d(g + w):
        g = brentq(d, g - w, g + w, xtol=1e-15, rtol=1e-15, maxiter=200)
    v2 = second_derivative(f, g)
    if not v2 > 0:
        raise NoMinimumError(f"speed function is not convex at gamma={g!r}")
    return SpeedProfile(g, f(g), v2, params)


def _profile(p):
    return p if isinstance(p, SpeedProfile) else find_gamma_c(p)


def predict_L0(p, N):
    if N < 2:
        raise ParameterError("N must be >= 2")
    return math.log(N) / _profile(p).gamma_c


def predict_vN(p, N):
    """``v_c - pi^2 v''(gamma_c) / (2 L0^2)`` with ``L0 = log(N) / gamma_c``."""
    prof = _profile(p)
    L0 = predict_L0(prof, N)
    return prof.v_c - math.pi**2 * prof.v_second / (2.0 * L0**2)


def predict_N0(p, L):
    if L < 2:
        raise ParameterError("L must be >= 2")
    return math.exp(_profile(p).gamma_c * L)


def predict_vL(p, L):
    if L < 2:
        raise ParameterError("L must be >= 2")
    prof = _profile(p)
    return prof.v_c - math.pi**2 * prof.v_second / (2.0 * L**2)


def cutoff_shape(z, L0, gamma_c, A=1.0):
    """Bulk front ``A L0 sin(pi z / L0) exp(-gamma_c z)`` for ``0 < z < L0``."""
    z = np.asarray(z, dtype=float)
    if np.any(z <= 0) or np.any(z >= L0):
        raise DomainError("the cutoff shape only holds for 0 < z < L0")
    out = A * L0 * np.sin(np.pi * z / L0) * np.exp(-gamma_c * z)
    return float(out) if out.ndim == 0 else out


def cutoff_density_shape(z, L0, gamma_c, A=1.0):
    return cutoff_shape(z, L0, gamma_c, A * (1.0 - math.exp(-gamma_c)))


def estimate_velocity(record, burn_in: int):
    """Least-squares slope of ``y_max`` against time after ``burn_in``.

    The standard error assumes independent residuals and is optimistic for
    these strongly autocorrelated series.
    """
    y = record.y_max if isinstance(record, TrajectoryRecord) else np.asarray(record)
    if y.size <= burn_in + 100:
        raise ParameterError(f"need more than burn_in + 100 = {burn_in + 100} steps, have {y.size}")
    t = np.arange(burn_in + 1, y.size + 1, dtype=float)
    y = y[burn_in:].astype(float)
    tc = t - t.mean()
    sxx = np.dot(tc, tc)
    slope = np.dot(tc, y - y.mean()) / sxx
    resid = y - y.mean() - slope * tc
    stderr = math.sqrt(max(np.dot(resid, resid), 0.0) / (t.size - 2) / sxx)
    return float(slope), stderr


@dataclass(frozen=True)
class FrontProfile:
    z: np.ndarray
    h: np.ndarray
    n_snapshots: int
    mean_support: float
    N: float | None = None


def snapshot_profile(counts):
    """Upper-cumulative fraction ``h(z)``, ``z`` measured from the lowest firm."""
    c = np.asarray(counts, dtype=float)
    tail = np.cumsum(c[::-1])[::-1]
    return tail / tail[0]


def estimate_front_profile(snapshots, N=None, min_snapshots=100) -> FrontProfile:
    if len(snapshots) < min_snapshots:
        raise ParameterError(f"need at least {min_snapshots} snapshots, have {len(snapshots)}")
    width = max(len(s) for s in snapshots)
    acc = np.zeros(width)
    for s in snapshots:
        acc[: len(s)] += snapshot_profile(s)
    h = acc / len(snapshots)
    support = float(np.mean([len(s) - 1 for s in snapshots]))
    return FrontProfile(np.arange(width), h, len(snapshots), support, N)


def default_window(profile: FrontProfile):
    return math.ceil(0.25 * profile.mean_support), math.floor(0.75 * profile.mean_support)


def fit_decay_slope(profile: FrontProfile, window=None):
    """Least-squares slope of ``log h(z)`` over integer ``z`` in the bulk window."""
    Lbar = profile.mean_support
    z_lo, z_hi = default_window(profile) if window is None else window
    if z_lo < 0.25 * Lbar or z_hi > 0.75 * Lbar or z_hi - z_lo < 1:
        raise WindowError(f"window ({z_lo}, {z_hi}) must span >= 2 levels inside [{0.25 * Lbar:.3g}, {0.75 * Lbar:.3g}]")
    z = np.arange(z_lo, z_hi + 1)
    h = profile.h[z]
    floor = 10.0 / profile.N if profile.N else 0.0
    if np.any(h <= floor):
        raise WindowError(f"profile drops below {floor:g} inside the window")
    return float(np.polyfit(z, np.log(h), 1)[0])


@dataclass(frozen=True)
class CutoffFrontResult:
    velocity: float
    steps: int
    window: int


def cutoff_front_velocity(params: BRWParams, N, max_steps=1 << 23, tol=1e-6, window=1 << 14, burn_in=1 << 14):
    """Asymptotic speed of the mean-field front with values below ``1/N`` zeroed.

    Position is the interpolated crossing of ``h = 1/2``. Windows double in
    length until two successive window speeds agree within ``tol``.
    ``N = math.inf`` disables the cutoff (only float underflow remains).
    """
    if not N >= 10:
        raise ParameterError("N must be >= 10")
    eps = 1.0 / N if math.isfinite(N) else np.nextafter(0.0, 1.0)
    h = np.ones(1)
    base = np.int64(0)
    h, base, pos = _kernels.cutoff_advance(h, base, params.a, params.mu, eps, np.int64(burn_in))
    x0 = pos[-1]
    used = burn_in
    prev = None
    while used + window <= max_steps:
        h, base, pos = _kernels.cutoff_advance(h, base, params.a, params.mu, eps, np.int64(window))
        v = (pos[-1] - x0) / window
        x0 = pos[-1]
        used += window
        if prev is not None and abs(v - prev) < tol:
            return CutoffFrontResult(float(v), used, window)
        prev = v
        window *= 2
    raise ConvergenceError(f"cutoff front speed not steady within {max_steps} steps", last=prev)


def excursion_report(record: TrajectoryRecord, L0: float, threshold: float, burn_in: int = 0):
    """Exploratory count of support-size excursions above ``L0 + threshold``."""
    s = record.support[burn_in:].astype(float)
    above = s > L0 + threshold
    edges = np.diff(above.astype(np.int8))
    starts = np.flatnonzero(edges == 1) + 1
    ends = np.flatnonzero(edges == -1) + 1
    if above.size and above[0]:
        starts = np.r_[0, starts]
    if above.size and above[-1]:
        ends = np.r_[ends, above.size]
    durations = ends - starts
    return {
        "threshold": L0 + threshold,
        "count": int(starts.size),
        "mean_duration": float(durations.mean()) if durations.size else 0.0,
        "mean_spacing": float(np.diff(starts).mean()) if starts.size > 1 else float("nan"),
        "fraction_above": float(above.mean()) if above.size else 0.0,
    }
