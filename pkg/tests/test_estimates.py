import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from riccilab.curvature import OperatorSpectrum, PinchingParams, eta, g_quantity
from riccilab.estimates import (
    EstimateReport, check_curvature_time, check_distance_bounds,
    check_hamilton_ivey, check_ricci_lower, check_sec_lower,
    check_volume_persistence, check_volume_ratio, shifted_time, empirical_S,
    g_monitor, necklike_report, necklike_scan, sup_Rt, window_monitor)
from riccilab.flow import (
    OMEGA3, FlatTorus, FlowSnapshot, ReactionSource, RescaleTransform,
    RoundSphereQuotient, Trajectory, flow_trajectory, integrate_reaction,
    rescale)

SPHERE = RoundSphereQuotient(1.0)
S_EXACT = (1 - 0.75 ** (2 / 3)) / 4


@pytest.fixture(scope="module")
def sphere_tr():
    return flow_trajectory(SPHERE, np.linspace(0, 0.2, 41))


@pytest.fixture(scope="module")
def torus_tr():
    return flow_trajectory(FlatTorus(1, 1, 1), np.linspace(0, 1.0, 11))


# ---------------------------------------------------------------- report basics

@given(st.lists(st.floats(-1, 1, allow_nan=False), min_size=1, max_size=30))
def test_report_soundness_against_linear_scan(ms):
    t = np.arange(len(ms), dtype=float)
    rep = EstimateReport("x", "x", t, np.array(ms), np.zeros(len(ms)))
    first = next((ti for ti, m in zip(t, ms) if m < -1e-9), None)
    assert rep.first_violation == first
    assert rep.passed == (min(ms) >= -1e-9)
    assert (rep.first_violation is None) == rep.passed


def test_report_shape_checked():
    with pytest.raises(ValueError):
        EstimateReport("x", "x", [0, 1], [0], [0, 1])


# ---------------------------------------------------------------- curvature-time

def test_curvature_time_flat(torus_tr):
    direct, sched = check_curvature_time(torus_tr, 1.0)
    assert direct.passed and sched.passed
    assert direct.min_margin == 1.0


def test_curvature_time_sphere_sup(sphere_tr):
    assert sup_Rt(sphere_tr) == pytest.approx(6.0, abs=1e-12)
    direct, _ = check_curvature_time(sphere_tr, 6.0)
    assert direct.passed


def test_curvature_time_sphere_violation(sphere_tr):
    direct, _ = check_curvature_time(sphere_tr, 5.0)
    assert not direct.passed
    assert direct.first_violation == pytest.approx(0.195)
    assert direct.crossing == pytest.approx(5 / 26, abs=1e-12)


def test_shift_schedule():
    assert shifted_time(0.3) == 0.3
    assert shifted_time(0.5) == 0.5
    for t in np.linspace(0.51, 3.9, 50):
        assert 0.5 <= shifted_time(t) < 1.0


def test_schedule_matches_direct_shifted_scan():
    # long-lived flat-ish family: a large sphere, scanned past t = 1/2
    f = RoundSphereQuotient(0.2)
    tr = flow_trajectory(f, np.linspace(0, 1.2, 97))
    for c in (0.5, 1.0, 1.5, 3.0):
        _, sched = check_curvature_time(tr, c)
        # direct oracle: apply R*tau <= c to each restarted solution
        direct = []
        for s in tr.snapshots:
            if s.t <= 0.5:
                direct.append(s.R * s.t <= c + 1e-9)
            else:
                N = math.floor(2 * s.t)
                direct.append(s.R * (s.t - (N - 1) / 2) <= c + 1e-9)
        assert [r[4] for r in sched.rows()] == direct


def test_curvature_time_rescaling_covariance(sphere_tr):
    out = rescale(sphere_tr, RescaleTransform(3.0, 0.0))
    a, _ = check_curvature_time(sphere_tr, 5.5)
    b, _ = check_curvature_time(out, 5.5)
    np.testing.assert_allclose(a.margin, b.margin, atol=1e-9)
    assert b.crossing == pytest.approx(3 * a.crossing, abs=1e-9)


def test_curvature_time_monotone_in_c(sphere_tr):
    times = []
    for c in np.linspace(2, 7, 11):
        direct, _ = check_curvature_time(sphere_tr, c)
        times.append(direct.first_violation if direct.first_violation is not None else math.inf)
    assert all(a <= b for a, b in zip(times, times[1:]))


# ---------------------------------------------------------------- pinching

def test_ricci_nonnegative_passes_with_eps0_margin():
    e0 = 0.004
    tr = integrate_reaction((0.1, 0.5, 1.0), 0.12, n_points=25)
    rep = check_ricci_lower(tr, PinchingParams(e0, "ricci-4.1"))
    assert rep.passed and rep.min_margin >= e0


@pytest.mark.parametrize("variant, t_end", [("ricci-4.2", 1 / 200), ("ricci-4.1", 0.1249)])
def test_ricci_reaction_example(variant, t_end):
    e0 = 0.005
    tr = integrate_reaction((-e0 / 2, 1, 1), t_end, n_points=51)
    rep = check_ricci_lower(tr, PinchingParams(e0, variant))
    assert rep.passed
    assert rep.t[-1] <= PinchingParams(e0, variant).window


def test_ricci_window_limits():
    e0 = 0.005
    tr = integrate_reaction((-e0 / 2, 1, 1), 0.2, n_points=41)
    rep = check_ricci_lower(tr, PinchingParams(e0, "ricci-4.1"))
    assert rep.t.max() < 0.125
    rep = check_ricci_lower(tr, PinchingParams(e0, "ricci-4.2"))
    assert rep.t.max() <= 1 / 200


def test_ricci_hypothesis_rejected():
    tr = integrate_reaction((-1, 0, 1), 0.01)
    with pytest.raises(ValueError):
        check_ricci_lower(tr, PinchingParams(0.005, "ricci-4.2"))
    with pytest.raises(ValueError):
        check_ricci_lower(tr, PinchingParams(0.005, "sec-4.2"))


def test_sec_nonnegative_passes_with_half_eps0_margin():
    e0 = 0.006
    tr = integrate_reaction((0.0, 0.2, 0.3), 0.12, n_points=25)
    rep = check_sec_lower(tr, PinchingParams(e0, "sec-4.1"))
    assert rep.passed and rep.min_margin >= e0 / 2


@pytest.mark.parametrize("variant", ["sec-4.1", "sec-4.2"])
def test_sec_reaction_example(variant):
    e0 = 0.005
    tr = integrate_reaction((-e0 / 8, 0.5, 0.5), 0.1249, n_points=51)
    assert check_sec_lower(tr, PinchingParams(e0, variant)).passed


def test_sec_boundary_margin_zero():
    p = PinchingParams(0.005, "sec-4.1")
    t = 0.05
    e = p.eps(t)
    b, c = 0.3, 0.7
    a = (-e * (b + c) - e) / (1 + e)
    snaps = [FlowSnapshot(0.0, OperatorSpectrum(0.0, 0.3, 0.7)),
             FlowSnapshot(t, OperatorSpectrum(a, b, c))]
    tr = Trajectory(ReactionSource(OperatorSpectrum(0, 0.3, 0.7)), snaps)
    rep = check_sec_lower(tr, p)
    assert abs(rep.margin[1]) <= 1e-16


# ---------------------------------------------------------------- Hamilton-Ivey

def test_hamilton_ivey_vacuous():
    rep = check_hamilton_ivey(integrate_reaction((0, 1, 2), 0.1))
    assert rep.passed and np.all(np.isinf(rep.margin))


def test_hamilton_ivey_first_margin():
    rep = check_hamilton_ivey(integrate_reaction((-1, 0, 3), 0.2))
    assert rep.margin[0] == 5.0
    assert rep.passed


def test_hamilton_ivey_second_example():
    rep = check_hamilton_ivey(integrate_reaction((-0.5, -0.5, 4), 0.1))
    assert rep.passed


def test_hamilton_ivey_hypothesis():
    with pytest.raises(ValueError):
        check_hamilton_ivey(integrate_reaction((-2, 0, 3), 0.01))


# ---------------------------------------------------------------- distances

def test_distance_bounds_torus(torus_tr):
    reps = check_distance_bounds(torus_tr, "corner", c0=0.0)
    assert [r.kind for r in reps] == ["distance-lower", "distance-upper", "diameter-upper"]
    assert all(r.passed for r in reps)


def test_distance_bounds_sphere(sphere_tr):
    lower, upper, dia = check_distance_bounds(sphere_tr, "antipodal", c0=0.0, C=4.0)
    assert lower.passed and upper.passed and dia.passed
    t = sphere_tr.grid
    np.testing.assert_allclose(upper.margin, math.pi * (1 - np.sqrt(1 - 4 * t)),
                               atol=1e-14)
    assert upper.lhs[0] == upper.rhs[0] == math.pi


def test_distance_lower_curvature_time_mode(sphere_tr):
    lower, _, _ = check_distance_bounds(sphere_tr, "antipodal", C=4.0,
                                        curvature_time_c=0.25)
    # 2 sqrt(c t) with c = 1/4 is sqrt(t): the bound reads pi(1 - sqrt(1-4t)) <= 4 sqrt(t)
    assert lower.passed
    ratio = max(math.pi * (1 - math.sqrt(1 - 4 * t)) / math.sqrt(t)
                for t in sphere_tr.grid[1:])
    assert ratio < 4.0


def test_distance_lower_needs_large_enough_C(sphere_tr):
    lower, _, _ = check_distance_bounds(sphere_tr, "antipodal", C=3.0)
    assert not lower.passed


def test_distance_errors(sphere_tr):
    with pytest.raises(ValueError):
        check_distance_bounds(sphere_tr, "nonexistent")
    tr = integrate_reaction((-1, 0, 2), 0.01)
    with pytest.raises(ValueError):
        check_distance_bounds(tr, "antipodal")


# ---------------------------------------------------------------- volumes

def test_volume_persistence_torus(torus_tr):
    rep = check_volume_persistence(torus_tr, 1.0)
    assert rep.passed and empirical_S(rep) == 1.0


def test_volume_persistence_sphere(sphere_tr):
    v0 = sphere_tr.snapshots[0].volume
    rep = check_volume_persistence(sphere_tr, v0)
    assert empirical_S(rep) == pytest.approx(S_EXACT, abs=1e-12)


def test_volume_persistence_rescaled(sphere_tr):
    c, t0 = 2.0, 0.01
    out = rescale(sphere_tr, RescaleTransform(c, t0))
    v0 = sphere_tr.snapshots[0].volume
    # same absolute threshold, expressed in the rescaled metric
    rep = check_volume_persistence(out, v0 * c ** 1.5,
                                   window=(out.grid[0], out.grid[-1]))
    assert empirical_S(rep) == pytest.approx(c * (S_EXACT - t0), abs=1e-12)


def test_volume_persistence_monotone_in_v0(sphere_tr):
    v = sphere_tr.snapshots[0].volume
    prev = -math.inf
    for frac in np.linspace(1.0, 0.5, 11):
        s = empirical_S(check_volume_persistence(sphere_tr, v * frac))
        assert s >= prev
        prev = s


def test_volume_persistence_initial_check(sphere_tr):
    with pytest.raises(ValueError):
        check_volume_persistence(sphere_tr, 1e6)


def test_volume_ratio_torus(torus_tr):
    qmin = min(q for s in torus_tr for _, q in s.ball_profile)
    reps = check_volume_ratio(torus_tr, OMEGA3 + 0.01, 0.9 * qmin)
    assert all(r.passed for r in reps)


def test_volume_ratio_immediate_violation(torus_tr):
    up, _, _ = check_volume_ratio(torus_tr, OMEGA3 - 0.5, 0.0)
    assert up.first_violation == 0.0


def test_volume_ratio_rescaled_identical(sphere_tr):
    out = rescale(sphere_tr, RescaleTransform(7.0, 0.0))
    a = check_volume_ratio(sphere_tr, 4.2, 0.5)
    b = check_volume_ratio(out, 4.2, 0.5)
    for x, y in zip(a, b):
        np.testing.assert_allclose(x.margin, y.margin, atol=1e-9)
        assert x.passed == y.passed


# ---------------------------------------------------------------- Theorem 6.1 window

def test_window_monitor_torus(torus_tr):
    w = window_monitor(torus_tr, 1.0, 1.0)
    assert w.volume_violation is None and w.ricci_violation is None
    assert w.diameter_violation is None and w.T_prime == 1.0


def test_window_monitor_sphere(sphere_tr):
    s0 = sphere_tr.snapshots[0]
    w = window_monitor(sphere_tr, s0.volume, s0.diameter, eps=0.001, c=6.0)
    assert w.volume_violation == pytest.approx((1 - 0.5 ** (2 / 3)) / 4, abs=1e-12)
    assert w.T_prime == w.volume_violation
    assert w.T_double_prime == 1 / 200
    assert w.T_triple_prime == pytest.approx(S_EXACT, abs=1e-12)
    assert w.ricci_half_held
    assert w.coupling_feasible is True    # 0.001 <= 1/360
    w2 = window_monitor(sphere_tr, s0.volume, s0.diameter, eps=0.003, c=6.0)
    assert w2.coupling_feasible is False
    assert w.Rt_within_c


def test_window_monitor_ricci_crossing_bisection():
    s0 = (-0.99, -0.99, 5.0)
    tr = integrate_reaction(s0, 0.2, n_points=21)
    w = window_monitor(tr, 1.0, 1.0)
    assert w.ricci_violation is not None

    def lam(t):
        if t == 0:
            a, b = -0.99, -0.99
        else:
            a, b, _ = integrate_reaction(s0, t, n_points=2).spectra()[-1]
        return (a + b) / 2
    lo, hi = 0.0, 0.2
    for _ in range(60):
        mid = (lo + hi) / 2
        if lam(mid) >= -1.0:
            lo = mid
        else:
            hi = mid
    assert w.ricci_violation == pytest.approx(hi, abs=1e-9)
    assert w.T_prime == w.ricci_violation


def test_window_monitor_hypotheses(sphere_tr):
    s0 = sphere_tr.snapshots[0]
    with pytest.raises(ValueError):
        window_monitor(sphere_tr, 2 * s0.volume, s0.diameter)


# ---------------------------------------------------------------- G and necks

def test_g_monitor_round_is_zero():
    tr = integrate_reaction((1, 1, 1), 0.2, n_points=11)
    mono, env = g_monitor(tr, 0.5, time_offset=-1.0)
    assert np.all(env.rhs == 0.0) and mono.passed


def test_g_monitor_oracle():
    tr = integrate_reaction((0, 1, 1), 1.0, n_points=21)
    delta = 1.0
    mono, env = g_monitor(tr, delta, time_offset=-2.0)
    e = eta(delta)
    direct = [g_quantity(s.spectrum, s.t - 2.0, e) for s in tr.snapshots]
    np.testing.assert_allclose(env.rhs, direct, rtol=1e-15)
    assert mono.passed
    assert all(a > b for a, b in zip(direct, direct[1:]))
    assert env.experimental


def test_g_monitor_delta_scaling():
    tr = integrate_reaction((0, 1, 1), 0.5, n_points=11)
    _, env1 = g_monitor(tr, 0.5, time_offset=-2.0)
    _, env2 = g_monitor(tr, 1.0, time_offset=-2.0)
    assert env1.constants["eps"] == eta(0.5)
    assert env2.constants["eps"] == eta(1.0)
    direct = [g_quantity(s.spectrum, s.t - 2.0, eta(1.0)) for s in tr.snapshots]
    np.testing.assert_allclose(env2.rhs, direct, rtol=1e-15)


def test_g_monitor_errors():
    tr = integrate_reaction((0, 1, 1), 0.5, n_points=11)
    with pytest.raises(ValueError):
        g_monitor(tr, 1.0, time_offset=0.0)
    with pytest.raises(ValueError):
        g_monitor(integrate_reaction((-1, -1, 0), 0.1), 1.0, time_offset=-1.0)


def test_necklike_scan_examples():
    rows = necklike_scan(integrate_reaction((0, 0, 0), 1.0, n_points=5), 1.0, 0.1, -2.0)
    assert all(not r.essential and not r.necklike for r in rows)
    rows = necklike_scan(integrate_reaction((0, 0, 2), 0.2, n_points=5), 1.0, 1e-6, -1.0)
    assert all(r.necklike and r.defect == 0.0 for r in rows)
    rows = necklike_scan(integrate_reaction((2, 2, 2), 0.1, n_points=5), 1.0, 1.4, -1.0)
    assert all(not r.necklike for r in rows)
    assert all(r.essential for r in rows)
    rep = necklike_report(rows, 1.4)
    assert not rep.passed
