import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qladder.analysis import (
    bracket_minimum,
    cutoff_density_shape,
    cutoff_front_velocity,
    cutoff_shape,
    default_window,
    estimate_front_profile,
    estimate_velocity,
    excursion_report,
    find_gamma_c,
    fit_decay_slope,
    golden_section,
    predict_L0,
    predict_N0,
    predict_vL,
    predict_vN,
    second_derivative,
    speed_derivative,
    speed_function,
    speed_function_enumerated,
    FrontProfile,
)
from qladder.brw import BRWParams, KeepTopN, ParticleState, run
from qladder.errors import DomainError, NoMinimumError, ParameterError, WindowError

mp.mp.dps = 50


def mp_oracle(a, mu):
    """gamma_c from v'(gamma) = 0 at 50 digits, with the analytic v''."""
    a, mu = mp.mpf(a), mp.mpf(mu)
    F = lambda g: mp.log(1 + mu + a * (mp.e**g - 1))  # noqa: E731
    dF = lambda g: a * mp.e**g / (1 + mu + a * (mp.e**g - 1))  # noqa: E731
    g = mp.findroot(lambda g: g * dF(g) - F(g), 2.0)
    v = F(g) / g
    v2 = dF(g) * (1 - dF(g)) / g  # F''/gamma, using F'(g_c) = v_c
    return float(g), float(v), float(v2)


def test_speed_function_example():
    assert abs(speed_function(1.0, BRWParams(0.5, 1.0)) - math.log(2 + 0.5 * (math.e - 1))) < 1e-15
    assert abs(speed_function(1.0, BRWParams(0.5, 1.0)) - 1.0505212) < 1e-7


def test_small_gamma_limit():
    # gamma v(gamma) = log(1 + mu) + a gamma / (1 + mu) + O(gamma^2)
    p = BRWParams(0.3, 0.6)
    g = 1e-6
    assert abs(g * speed_function(g, p) - math.log1p(0.6) - 0.3 * g / 1.6) < 1e-12
    # with imitation switched off the speed tends to the innovation drift
    p0 = BRWParams(0.3, 1e-12)
    assert abs(speed_function(1e-6, p0) - 0.3) < 1e-5


def test_rejects_nonpositive_gamma():
    with pytest.raises(ParameterError):
        speed_function(0.0, BRWParams(0.3, 0.5))
    with pytest.raises(ParameterError):
        speed_function_enumerated(-1.0, BRWParams(0.3, 0.5))


@settings(max_examples=100, deadline=None)
@given(st.floats(0.01, 0.99), st.floats(0.01, 1.0), st.floats(0.01, 20.0))
def test_enumeration_identity(a, mu, g):
    p = BRWParams(a, mu)
    assert abs(speed_function(g, p) - speed_function_enumerated(g, p)) < 1e-12 * max(1, speed_function(g, p))


def test_gamma_c_against_high_precision():
    prof = find_gamma_c(BRWParams(0.25, 1.0))
    g, v, v2 = mp_oracle(0.25, 1.0)
    assert abs(prof.gamma_c - g) < 1e-10 * g
    assert abs(prof.v_c - v) < 1e-14
    assert abs(prof.v_second - v2) < 1e-6 * v2
    assert abs(speed_derivative(prof.gamma_c, prof.params)) < 1e-14


def test_coarse_grid_scan_agrees():
    p = BRWParams(0.25, 1.0)
    grid = np.linspace(0.5, 6.0, 5501)
    g0 = grid[np.argmin(speed_function(grid, p))]
    g = golden_section(lambda x: speed_function(x, p), g0 - 2e-3, g0 + 2e-3, tol=1e-14)
    assert abs(g - find_gamma_c(p).gamma_c) < 1e-7


@pytest.mark.parametrize("a", [0.05, 0.25, 0.5, 0.9])
@pytest.mark.parametrize("mu", [0.05, 0.5, 1.0])
def test_gamma_c_grid(a, mu):
    prof = find_gamma_c(BRWParams(a, mu))
    g, v, v2 = mp_oracle(a, mu)
    assert abs(prof.gamma_c - g) < 1e-10 * g
    assert a < prof.v_c < 1
    assert prof.v_second > 0
    for s in (0.9, 1.1):
        assert prof.v_c <= speed_function(prof.gamma_c * s, prof.params)
    audit = np.linspace(prof.gamma_c / 10, 10 * prof.gamma_c, 2001)
    assert np.all(speed_function(audit, prof.params) >= prof.v_c - 1e-15)


def test_no_minimum_detected():
    with pytest.raises(NoMinimumError):
        bracket_minimum(lambda x: -x, 1.0)
    with pytest.raises(NoMinimumError):
        bracket_minimum(lambda x: x, 1.0)


def test_second_derivative_check():
    assert abs(second_derivative(np.cosh, 0.7) - math.cosh(0.7)) < 1e-8


def test_predictions(theorem_params):
    prof = find_gamma_c(theorem_params)
    L0 = predict_L0(prof, 10**4)
    assert abs(L0 - math.log(1e4) / prof.gamma_c) < 1e-14
    assert predict_vN(prof, 10**4) < predict_vN(prof, 10**6) < prof.v_c
    assert abs(prof.v_c - predict_vN(prof, 1e300)) < 2e-3
    assert predict_vL(prof, 10) < predict_vL(prof, 15)
    for L in (10, 15, 20):
        N = predict_N0(prof, L)
        assert abs(predict_L0(prof, N) - L) < 1e-12
        assert abs(predict_vN(prof, N) - predict_vL(prof, L)) < 1e-12
    with pytest.raises(ParameterError):
        predict_L0(prof, 1)
    with pytest.raises(ParameterError):
        predict_vL(prof, 1)


def test_cutoff_shape():
    L0, g = 4.0, 2.4
    assert abs(cutoff_shape(2.0, L0, g, 1.5) - 1.5 * L0 * math.exp(-g * 2.0)) < 1e-15
    assert cutoff_shape(L0 - 1e-9, L0, g) < 1e-8
    eps = 1e-6
    slope = (math.log(cutoff_shape(2 + eps, L0, g)) - math.log(cutoff_shape(2 - eps, L0, g))) / (2 * eps)
    assert abs(slope + g) < 1e-8
    assert abs(cutoff_density_shape(1.0, L0, g) - (1 - math.exp(-g)) * cutoff_shape(1.0, L0, g)) < 1e-15
    for z in (0.0, L0, -1.0):
        with pytest.raises(DomainError):
            cutoff_shape(z, L0, g)


def test_estimate_velocity_synthetic():
    v, se = estimate_velocity(3 * np.arange(1, 501), 100)
    assert abs(v - 3) < 1e-12 and se < 1e-10
    with pytest.raises(ParameterError):
        estimate_velocity(np.arange(150), 100)


def test_profile_invariants():
    rec = run(ParticleState.point_mass(500), BRWParams(0.25, 1.0), KeepTopN(500), 3000, seed=4,
              snapshot_every=10)
    snaps = rec.snapshots_after(500)
    for s in snaps:
        h = np.r_[np.cumsum(s[::-1])[::-1] / s.sum(), 0.0]
        assert abs(np.sum(h[:-1] - h[1:]) - 1.0) < 1e-12
    prof = estimate_front_profile(snaps, N=500)
    assert prof.h[0] == 1.0 and np.all(np.diff(prof.h) <= 0)
    with pytest.raises(ParameterError):
        estimate_front_profile(snaps[:50])


def test_decay_window_rules():
    z = np.arange(12)
    prof = FrontProfile(z, np.exp(-2.0 * z), 200, 10.0, N=1e12)
    assert default_window(prof) == (3, 7)
    assert abs(fit_decay_slope(prof) + 2.0) < 1e-12
    with pytest.raises(WindowError):
        fit_decay_slope(prof, (1, 7))
    with pytest.raises(WindowError):
        fit_decay_slope(prof, (4, 4))
    small_n = FrontProfile(z, np.exp(-2.0 * z), 200, 10.0, N=1e4)
    with pytest.raises(WindowError):
        fit_decay_slope(small_n)


def test_cutoff_front_velocity_ordering(theorem_params):
    prof = find_gamma_c(theorem_params)
    vs = [cutoff_front_velocity(theorem_params, N).velocity for N in (1e3, 1e5, 1e8)]
    assert vs[0] < vs[1] < vs[2] < prof.v_c


def test_cutoff_front_without_cutoff(theorem_params):
    prof = find_gamma_c(theorem_params)
    res = cutoff_front_velocity(theorem_params, math.inf, max_steps=1 << 22)
    assert abs(res.velocity - prof.v_c) < 1e-3


def test_cutoff_front_rejects_small_n(theorem_params):
    with pytest.raises(ParameterError):
        cutoff_front_velocity(theorem_params, 5)


def test_excursion_report():
    from qladder.brw import TrajectoryRecord

    ymax = np.array([3, 4, 9, 9, 4, 4, 9, 5])
    rec = TrajectoryRecord(ymax, np.zeros(8, int), np.ones(8), np.empty(0), [], None)
    rep = excursion_report(rec, 5.0, 2.0)
    assert rep["count"] == 2 and rep["mean_duration"] == 1.5 and rep["mean_spacing"] == 4.0
