import math
import time

import numpy as np
import pytest
from scipy.integrate import trapezoid

from qutrit_link.errors import SolverError
from qutrit_link.params import PulseProfile, TimeGrid, raman_coupling
from qutrit_link.pulse_solver import (balance, default_bracket, delayed_profile, solve_amplitude,
                                      solve_delay, solve_pulse)
from qutrit_link.receiver import area_functions, gamma_closed_form
from qutrit_link.sender import Wavepacket


def dense_areas(wp, profile2, G2, k, n=400001):
    t = np.linspace(*wp.window, n)
    a, b = wp.amplitudes(t)
    amp = profile2.amplitude(t)
    s = G2 / math.sqrt(k)
    I1, I2 = trapezoid(amp * a, t), trapezoid(amp * b, t)
    return 2 * s * I1, s * (I1 + I2)


def test_balance_changes_sign_across_bracket(wavepackets):
    wp = wavepackets[0.12]
    # Drive well before the photons: only the first photon is present (D > 0);
    # well after: the second photon dominates (D < 0).
    assert balance(wp, 0.12, -0.1)[0] > 0
    assert balance(wp, 0.12, 0.6)[0] < 0


def test_solved_plan_frozen(plan_012, params):
    assert plan_012.delay == pytest.approx(0.239801168, abs=1e-8)
    assert plan_012.amplitude_scale == pytest.approx(60.2507, abs=1e-3)
    assert plan_012.omega2_over_omega1 == pytest.approx(11.4157, abs=1e-3)
    assert plan_012.omega2_over_omega1 == pytest.approx(
        plan_012.amplitude_scale / raman_coupling(params, 1), rel=1e-14)


def test_solved_plan_residuals_and_independent_areas(plan_012, params, wavepackets):
    assert max(abs(r) for r in plan_012.residuals) < 1e-6
    eta, zeta = dense_areas(wavepackets[0.12], plan_012.profile2, plan_012.amplitude_scale, params.k)
    assert eta == pytest.approx(math.pi, abs=1e-6)
    assert zeta == pytest.approx(math.pi, abs=1e-6)


def test_solved_delay_is_positive_and_fast(params, wavepackets):
    t0 = time.perf_counter()
    plan = solve_pulse(wavepackets[0.12], params, 0.12)
    assert time.perf_counter() - t0 < 1.0
    assert plan.delay > 0


@pytest.mark.parametrize("T1,delay,ratio", [(0.22, 0.09344, 2.6466), (0.75, -0.4893, 1.2058)])
def test_plans_for_other_durations(params, wavepackets, T1, delay, ratio):
    plan = solve_pulse(wavepackets[T1], params, T1)
    assert plan.delay == pytest.approx(delay, abs=1e-4)
    assert plan.omega2_over_omega1 == pytest.approx(ratio, abs=1e-3)
    assert max(abs(r) for r in plan.residuals) < 1e-6


def test_solver_deterministic(params, wavepackets):
    a = solve_pulse(wavepackets[0.12], params, 0.12)
    b = solve_pulse(wavepackets[0.12], params, 0.12)
    assert a.as_dict() == b.as_dict()


def test_solved_plan_absorbs_both_branches(plan_012, params, wavepackets):
    area = area_functions(wavepackets[0.12], plan_012.params(params), plan_012.profile2)
    absorbed = gamma_closed_form(area).absorbed
    assert absorbed == pytest.approx((1.0, 1.0), abs=1e-12)


def test_amplitude_linear_in_overlap_scale(params, wavepackets, plan_012):
    # Scaling both photon amplitudes leaves the delay and scales G2 inversely.
    wp = wavepackets[0.12]
    scaled = Wavepacket.from_samples(wp.times, 2 * wp.phi_I, 2 * wp.phi_II, wp.center, wp.width)
    assert solve_delay(scaled, 0.12) == pytest.approx(plan_012.delay, abs=1e-6)
    G2 = solve_amplitude(scaled, 0.12, plan_012.delay, params.k)
    assert G2 == pytest.approx(plan_012.amplitude_scale / 2, rel=1e-5)


def test_tabulated_template_matches_gaussian(params, wavepackets, plan_012):
    t = np.linspace(-0.96, 0.96, 3841)
    tab = PulseProfile.tabulated(t, np.exp(-(t / 0.12) ** 2))
    assert solve_delay(wavepackets[0.12], tab) == pytest.approx(plan_012.delay, abs=1e-5)


def test_degenerate_packet_raises():
    t = np.linspace(-1, 1, 2001)
    phi = np.exp(-t ** 2 / 0.02)
    wp = Wavepacket.from_samples(t, phi, phi, 0.0, 0.1)
    with pytest.raises(SolverError, match="degenerate"):
        solve_delay(wp, 0.1)


def test_empty_packet_raises():
    t = np.linspace(-1, 1, 101)
    wp = Wavepacket.from_samples(t, np.zeros_like(t), np.zeros_like(t))
    with pytest.raises(SolverError, match="too weak"):
        solve_delay(wp, 0.1)


def test_bracket_without_root_raises(wavepackets):
    with pytest.raises(SolverError, match="no sign change"):
        solve_delay(wavepackets[0.12], 0.12, bracket=(0.3, 0.8))


def test_default_bracket_contains_solution(wavepackets, plan_012):
    lo, hi = default_bracket(wavepackets[0.12], 0.12)
    assert lo < plan_012.delay < hi
    assert plan_012.bracket_used == (lo, hi)


def test_no_overlap_amplitude_raises(params, wavepackets):
    with pytest.raises(SolverError, match="overlap"):
        solve_amplitude(wavepackets[0.12], 0.12, 50.0, params.k)


def test_delayed_profile_center(wavepackets):
    prof = delayed_profile(wavepackets[0.12], 0.12, 0.25)
    assert prof.center == pytest.approx(0.25) and prof.duration == 0.12
