import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

import pwlab
from pwlab import (
    Cause,
    DampingProfile,
    Equilibrium,
    detect_equilibrium,
    evolve,
    fit_decay,
    gcc_check_1d,
    lyapunov_eps,
    make_state,
    observability_ratio,
    virial_series,
)
from pwlab.errors import (
    InsufficientSamples,
    NoDissipation,
    NonPositiveEnergy,
    NotKPlus,
    WindowOutOfRange,
)


# -- virial --------------------------------------------------------------------


def test_virial_zero_run(dom):
    s = make_state(dom, dom.zero_field(), dom.zero_field())
    traj = evolve(dom, DampingProfile.zero(dom), s, 0.5, dt=0.01,
                  store_fields=False)
    report = virial_series(traj)
    assert all(v.M == 0 and v.Mp == 0 and v.Mpp_formula == 0
               for v in report.samples)


def test_virial_stationary_state(dom, gs):
    s = make_state(dom, gs.q, dom.zero_field())
    traj = evolve(dom, DampingProfile.constant(dom, 2.0), s, 1.0, dt=0.005,
                  store_fields=False)
    report = virial_series(traj)
    m0 = report.samples[0].M
    assert all(abs(v.M - m0) <= 1e-8 * m0 for v in report.samples)
    assert all(abs(v.Mp) <= 1e-8 * m0 for v in report.samples)
    # Mpp_formula = -2 K(Q) = 0 when u_t = 0
    assert all(abs(v.Mpp_formula) <= 1e-7 * m0 for v in report.samples)


def test_virial_fd_consistency_ratio(dom, gs, q_h01):
    # K- run without damping: central differences of M converge at O(dt^2)
    devs = {}
    for dt in (0.01, 0.005, 0.0025):
        s = make_state(dom, 1.2 * gs.q, dom.zero_field())
        traj = evolve(dom, DampingProfile.zero(dom), s, 1.0, dt=dt,
                      q_h01=q_h01, store_fields=False)
        assert traj.cause is Cause.COMPLETED and traj.halvings == 0
        devs[dt] = virial_series(traj).max_mpp_deviation
    assert 3.0 <= devs[0.01] / devs[0.005] <= 5.0
    assert 3.0 <= devs[0.005] / devs[0.0025] <= 5.0


def test_virial_mp_fd_consistency(dom, gs):
    devs = {}
    for dt in (0.01, 0.005):
        s = make_state(dom, 0.8 * gs.q, dom.zero_field())
        traj = evolve(dom, DampingProfile.constant(dom, 1.0), s, 2.0, dt=dt,
                      store_fields=False)
        devs[dt] = virial_series(traj).max_mp_deviation
    assert 3.0 <= devs[0.01] / devs[0.005] <= 5.0


def test_virial_convexity_surrogate_on_kminus_tail(dom, gs, q_h01):
    s = make_state(dom, 1.2 * gs.q, dom.zero_field())
    traj = evolve(dom, DampingProfile.constant(dom, 1.0), s, 1.0, dt=0.005,
                  q_h01=q_h01, store_fields=False)
    assert traj.cause is Cause.COMPLETED
    report = virial_series(traj, c_e=1.0, tail_fraction=0.4)
    assert report.convexity_tail_ok


def test_virial_insufficient_samples(dom):
    s = make_state(dom, dom.zero_field(), dom.zero_field())
    traj = evolve(dom, DampingProfile.zero(dom), s, 0.03, dt=0.01,
                  store_fields=False)
    with pytest.raises(InsufficientSamples):
        virial_series(traj)


# -- decay fit -------------------------------------------------------------------


def _synthetic_trajectory(ts, e):
    from pwlab.dynamics import Trajectory, State, EnergyLedger

    n = len(ts)
    z = np.zeros(n)
    dummy = State(np.zeros(4), np.zeros(4), ts[-1], EnergyLedger(0, 0, 0))
    return Trajectory(ts=ts, e=e, j=z, k=z, h01=z, l2t=z, dissipated=z,
                      residual=z, l2_sq=z, u_ut=z, l4_4=z, gamma_u_ut=z,
                      gamma_ut2=z, us=None, uts=None, cause=Cause.COMPLETED,
                      t_detect=None, final_state=dummy, dt_initial=0.01,
                      dt_final=0.01, halvings=0, sample_every=1)


def test_fit_decay_exact_exponential():
    ts = np.linspace(0, 5, 501)
    traj = _synthetic_trajectory(ts, 3.0 * np.exp(-2.0 * ts))
    fit = fit_decay(traj, window=(0.0, 5.0))
    assert_allclose(fit.lambda_fit, 2.0, atol=1e-6)
    assert_allclose(fit.c_fit, 3.0, rtol=1e-6)
    assert fit.r_squared > 0.999999


def test_fit_decay_default_window_is_tail():
    ts = np.linspace(0, 10, 1001)
    traj = _synthetic_trajectory(ts, np.exp(-ts))
    fit = fit_decay(traj)
    assert fit.window[0] >= 3.9


def test_fit_decay_clamps_tiny_energy():
    ts = np.linspace(0, 5, 501)
    e = np.exp(-ts)
    e[300:] = 1e-20  # below the relative floor: excluded from the fit
    traj = _synthetic_trajectory(ts, e)
    fit = fit_decay(traj, window=(0.0, 5.0))
    assert fit.window[1] < 3.01
    assert_allclose(fit.lambda_fit, 1.0, atol=1e-6)


def test_fit_decay_no_positive_energy():
    ts = np.linspace(0, 1, 11)
    traj = _synthetic_trajectory(ts, np.zeros(11))
    with pytest.raises(NonPositiveEnergy):
        fit_decay(traj, window=(0.0, 1.0))


def test_fit_decay_stabilization_runs(dom, gs, q_h01):
    for gamma in (DampingProfile.constant(dom, 1.0),
                  DampingProfile.indicator(dom, 0.0, dom.size / 4, 1.0)):
        s = make_state(dom, 0.8 * gs.q, dom.zero_field())
        traj = evolve(dom, gamma, s, 40.0, dt=0.01, sample_every=10,
                      q_h01=q_h01, store_fields=False)
        fit = fit_decay(traj)
        assert fit.lambda_fit > 0
        assert fit.r_squared >= 0.95


def _linear_indicator_rate(n_modes, dt):
    dom = pwlab.interval_domain(np.pi, n_modes, beta=1.0)
    gamma = DampingProfile.indicator(dom, 0.5, 1.5, 1.0)
    rng = np.random.default_rng(21)
    u0 = pwlab.random_field(dom, rng, decay=2.0)
    ut0 = pwlab.random_field(dom, rng, decay=2.0)
    s = make_state(dom, u0, ut0)
    traj = evolve(dom, gamma, s, 60.0, dt=dt, sample_every=10,
                  cubic_coeff=0.0, store_fields=False)
    return fit_decay(traj).lambda_fit


def test_linear_decay_rate_positive_and_stable():
    # nonlinearity off, indicator damping on a subinterval: the fitted rate
    # is positive and stable (+-20%) under dt halving and mode doubling
    base = _linear_indicator_rate(64, 0.01)
    assert base > 0
    finer_dt = _linear_indicator_rate(64, 0.005)
    more_modes = _linear_indicator_rate(128, 0.01)
    assert abs(finer_dt - base) <= 0.2 * base
    assert abs(more_modes - base) <= 0.2 * base


# -- gcc -------------------------------------------------------------------------


def test_gcc_everywhere(dom):
    holds, l_control = gcc_check_1d(dom, DampingProfile.constant(dom, 1.0))
    assert holds
    assert_allclose(l_control, dom.size, rtol=1e-12)


def test_gcc_empty(dom):
    holds, _ = gcc_check_1d(dom, DampingProfile.zero(dom))
    assert not holds


def test_gcc_centered_core(dom):
    L = dom.size
    gamma = DampingProfile.indicator(dom, L / 2 - L / 10, L / 2 + L / 10, 1.0)
    holds, l_control = gcc_check_1d(dom, gamma)
    assert holds
    assert_allclose(l_control, L, rtol=1e-12)


# -- observability ----------------------------------------------------------------


def test_observability_constant_damping(dom, gs, q_h01):
    s = make_state(dom, 0.5 * gs.q, dom.zero_field())
    gamma = DampingProfile.constant(dom, 1.0)
    traj = evolve(dom, gamma, s, 15.0, dt=0.01, sample_every=10,
                  q_h01=q_h01, store_fields=False)
    report = observability_ratio(dom, gamma, traj, 0.0, 10.0)
    assert report.ratio > 0
    assert math.isfinite(report.ratio)
    assert report.samples[0][0] == 0.0


def test_observability_no_dissipation(dom, gs):
    gamma = DampingProfile.zero(dom)
    s = make_state(dom, 0.5 * gs.q, dom.zero_field())
    traj = evolve(dom, gamma, s, 5.0, dt=0.01, sample_every=10,
                  store_fields=False)
    with pytest.raises(NoDissipation):
        observability_ratio(dom, gamma, traj, 0.0, 4.0)


def test_observability_window_out_of_range(dom, gs):
    gamma = DampingProfile.constant(dom, 1.0)
    s = make_state(dom, 0.5 * gs.q, dom.zero_field())
    traj = evolve(dom, gamma, s, 5.0, dt=0.01, sample_every=10,
                  store_fields=False)
    with pytest.raises(WindowOutOfRange):
        observability_ratio(dom, gamma, traj, 2.0, 10.0)


def test_observability_family_uniformity(dom, gs, q_h01):
    gamma = DampingProfile.indicator(dom, 0.0, dom.size / 4, 1.0)
    ratios = []
    for lam in (0.3, 0.5, 0.7, 0.8):
        s = make_state(dom, lam * gs.q, dom.zero_field())
        traj = evolve(dom, gamma, s, 15.0, dt=0.01, sample_every=10,
                      q_h01=q_h01, store_fields=False)
        ratios.append(observability_ratio(dom, gamma, traj, 0.0, 10.0).ratio)
    assert max(ratios) / np.median(ratios) <= 10.0


# -- lyapunov ---------------------------------------------------------------------


def test_lyapunov_eps_zero(dom, wc, gs):
    s = make_state(dom, 0.5 * gs.q, dom.zero_field())
    report = lyapunov_eps(dom, wc, s, 0.0)
    tri = pwlab.energies(dom, s.u, s.ut)
    assert report.e_eps == tri.E
    assert report.sandwich_ok


def test_lyapunov_zero_velocity_state(dom, wc, gs):
    # u_t = 0 makes the cross term vanish for every epsilon
    s = make_state(dom, 0.5 * gs.q, dom.zero_field())
    for eps in (0.01, 1.0, 100.0):
        report = lyapunov_eps(dom, wc, s, eps)
        assert report.e_eps == report.e_eps  # finite
        assert report.sandwich_ok
    assert lyapunov_eps(dom, wc, s, 1.0).eps_max == math.inf


def test_lyapunov_along_run(dom, wc, gs, q_h01):
    s0 = make_state(dom, 0.8 * gs.q, dom.zero_field())
    traj = evolve(dom, DampingProfile.constant(dom, 1.0), s0, 5.0, dt=0.01,
                  sample_every=50, q_h01=q_h01)
    for i in range(len(traj)):
        s = make_state(dom, traj.us[i], traj.uts[i], traj.ts[i])
        report = lyapunov_eps(dom, wc, s, 0.01)
        assert report.sandwich_ok


def test_lyapunov_eps_max_bisection(dom, wc, gs, q_h01):
    # pick a state with nonzero cross term and verify the located threshold
    s0 = make_state(dom, 0.8 * gs.q, dom.zero_field())
    traj = evolve(dom, DampingProfile.constant(dom, 1.0), s0, 1.0, dt=0.01,
                  sample_every=25, q_h01=q_h01)
    found = False
    for i in range(len(traj)):
        s = make_state(dom, traj.us[i], traj.uts[i], traj.ts[i])
        p = dom.inner_l2(s.u, s.ut)
        if abs(p) > 1e-10:
            report = lyapunov_eps(dom, wc, s, 0.01)
            assert math.isfinite(report.eps_max)
            assert lyapunov_eps(dom, wc, s, 0.99 * report.eps_max).sandwich_ok
            assert not lyapunov_eps(dom, wc, s, 1.01 * report.eps_max
                                    + 1e-9).sandwich_ok
            found = True
            break
    assert found


def test_lyapunov_not_kplus(dom, wc, gs):
    s = make_state(dom, 1.2 * gs.q, dom.zero_field())
    with pytest.raises(NotKPlus):
        lyapunov_eps(dom, wc, s, 0.01)


# -- equilibrium detection ----------------------------------------------------------


def test_detect_equilibrium_zero_after_stabilization(dom, gs, q_h01):
    s = make_state(dom, 0.8 * gs.q, dom.zero_field())
    traj = evolve(dom, DampingProfile.constant(dom, 1.0), s, 40.0, dt=0.01,
                  sample_every=100, q_h01=q_h01)
    report = detect_equilibrium(gs, traj)
    assert report.verdict is Equilibrium.ZERO
    assert report.nearest_level == 0.0


def test_detect_equilibrium_stationary_q(dom, gs, q_h01):
    s = make_state(dom, gs.q, dom.zero_field())
    traj = evolve(dom, DampingProfile.constant(dom, 1.0), s, 5.0, dt=0.01,
                  sample_every=100, q_h01=q_h01)
    report = detect_equilibrium(gs, traj)
    assert report.verdict is Equilibrium.PLUS_Q
    assert report.nearest_level == gs.d_level

    s = make_state(dom, -gs.q, dom.zero_field())
    traj = evolve(dom, DampingProfile.constant(dom, 1.0), s, 5.0, dt=0.01,
                  sample_every=100, q_h01=q_h01)
    assert detect_equilibrium(gs, traj).verdict is Equilibrium.MINUS_Q


def test_detect_equilibrium_zero_data(dom, gs):
    s = make_state(dom, dom.zero_field(), dom.zero_field())
    traj = evolve(dom, DampingProfile.constant(dom, 1.0), s, 1.0, dt=0.01,
                  sample_every=10)
    assert detect_equilibrium(gs, traj).verdict is Equilibrium.ZERO


def test_detect_equilibrium_undecided_mid_oscillation(dom, gs, q_h01):
    # undamped K+ run: at a generic time the state is far from all three
    s = make_state(dom, 0.8 * gs.q, dom.zero_field())
    traj = evolve(dom, DampingProfile.zero(dom), s, 3.0, dt=0.01,
                  sample_every=10, q_h01=q_h01)
    assert traj.cause is Cause.COMPLETED
    report = detect_equilibrium(gs, traj)
    assert report.verdict is Equilibrium.UNDECIDED
