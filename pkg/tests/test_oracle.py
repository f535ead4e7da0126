import dataclasses
import math

import numpy as np
import pytest

from qutrit_link.errors import ProtocolError
from qutrit_link.oracle import (approximation_report, branch_hamiltonian, integrate_branches,
                                quadrature_crosscheck, TWO_PHOTON_LINKS)
from qutrit_link.params import PulseProfile, TimeGrid, reference_params
from qutrit_link.pulse_solver import delayed_profile, solve_amplitude
from qutrit_link.receiver import area_functions, gamma_closed_form
from qutrit_link.sender import Wavepacket


@pytest.fixture(scope="module")
def solved(params, wavepackets, plan_012):
    wp = wavepackets[0.12]
    p2 = plan_012.params(params)
    area = area_functions(wp, p2, plan_012.profile2)
    branches = integrate_branches(wp, p2, plan_012.profile2, grid=area.grid)
    return wp, p2, area, branches


def symmetric_packet(width=0.1, n=2001):
    # Equal photon amplitudes, each normalised.
    norm = (2 / math.pi) ** 0.25 / math.sqrt(width)

    def source(t):
        a = norm * np.exp(-(np.asarray(t) / width) ** 2)
        return a, a

    grid = TimeGrid(-8 * width, 8 * width, n)
    a, b = source(grid.times)
    return Wavepacket(grid, a, b, 0.0, width, source)


def test_hamiltonian_hermitian():
    H = branch_hamiltonian(0.4, 0.9, 0.2, 1.1, TWO_PHOTON_LINKS, 4)
    assert np.allclose(H, H.conj().T)


def test_zero_drive_freezes_amplitudes(params, wavepackets, plan_012):
    out = integrate_branches(wavepackets[0.12], params.with_receiver_coupling(0.0), plan_012.profile2)
    assert np.all(out.two_photon[0] == 1) and not np.any(out.two_photon[1:])
    assert np.all(out.one_photon[0] == 1) and not np.any(out.one_photon[1])


def test_solved_plan_absorbs_two_photons(solved):
    *_, branches = solved
    c4 = branches.two_photon_populations[2, -1]
    assert c4 >= 0.97
    # Frozen regression: the two photons are absorbed independently, so the
    # solved plan transfers the whole branch.
    assert c4 == pytest.approx(1.0, abs=1e-8)
    n2, n1 = branches.norms
    assert np.max(np.abs(n2 - 1)) < 1e-8 and np.max(np.abs(n1 - 1)) < 1e-8


def test_two_photon_branch_is_product_of_single_rotations(solved):
    # Photon I rotates by eta(t), photon II by 2*zeta(t) - eta(t).
    _, _, area, branches = solved
    a, b = area.eta, 2 * area.zeta - area.eta
    expected = np.vstack([
        np.cos(a / 2) ** 2 * np.cos(b / 2) ** 2,
        np.sin(a / 2) ** 2 * np.cos(b / 2) ** 2 + np.cos(a / 2) ** 2 * np.sin(b / 2) ** 2,
        np.sin(a / 2) ** 2 * np.sin(b / 2) ** 2,
    ])
    assert np.max(np.abs(branches.two_photon_populations - expected)) < 1e-8


def test_one_photon_branch_exact(solved):
    _, _, area, branches = solved
    assert np.max(np.abs(branches.one_photon_populations[1] - np.sin(area.eta / 2) ** 2)) < 1e-8


def test_approximation_report_solved_plan(solved):
    _, _, area, branches = solved
    report = approximation_report(branches, gamma_closed_form(area))
    assert report.worst_final <= 0.03
    assert report.worst_overall == pytest.approx(0.0041, abs=5e-4)
    assert report.max_deviation["one_photon_mbar0"] < 1e-8
    assert report.overlap_ratio == pytest.approx(0.058, abs=2e-3)


def test_undelayed_drive_deviates_more(params, wavepackets, solved):
    wp, *_ = solved
    prof = delayed_profile(wp, 0.12, 0.0)
    G2 = solve_amplitude(wp, 0.12, 0.0, params.k)
    p2 = params.with_receiver_coupling(G2)
    area = area_functions(wp, p2, prof)
    branches = integrate_branches(wp, p2, prof, grid=area.grid)
    undelayed = approximation_report(branches, gamma_closed_form(area))
    solved_report = approximation_report(solved[3], gamma_closed_form(solved[2]))
    assert undelayed.worst_final > solved_report.worst_final
    assert branches.two_photon_populations[2, -1] == pytest.approx(0.856, abs=2e-3)


def test_symmetric_packet_reproduces_closed_form():
    params = reference_params()
    wp = symmetric_packet()
    prof = PulseProfile.gaussian(0.1, 0.05)
    G2 = solve_amplitude(wp, 0.1, 0.05, params.k)
    p2 = params.with_receiver_coupling(G2)
    area = area_functions(wp, p2, prof)
    branches = integrate_branches(wp, p2, prof, grid=area.grid)
    report = approximation_report(branches, gamma_closed_form(area))
    assert report.worst_overall < 1e-8
    assert report.overlap_ratio == 0.0


@pytest.mark.parametrize("phi2", [0.0, 0.7, math.pi, 4.0])
def test_populations_independent_of_drive_phase(solved, phi2):
    wp, p2, area, branches = solved
    rotated = integrate_branches(wp, dataclasses.replace(p2, phi2=phi2), area.profile2, grid=area.grid)
    assert np.allclose(rotated.two_photon_populations, branches.two_photon_populations, atol=1e-8)
    assert np.allclose(rotated.one_photon_populations, branches.one_photon_populations, atol=1e-8)


def test_scaling_invariance(params, solved):
    wp, p2, area, branches = solved
    s = 1.7
    scaled = Wavepacket(wp.grid, s * wp.phi_I, s * wp.phi_II, wp.center, wp.width,
                        lambda t: tuple(s * x for x in wp.source(t)))
    a = branches
    b = integrate_branches(scaled, p2.with_receiver_coupling(area.G2 / s), area.profile2, grid=area.grid)
    assert np.allclose(a.two_photon, b.two_photon, atol=1e-8)
    assert np.allclose(a.one_photon, b.one_photon, atol=1e-8)


def test_mismatched_configuration_rejected(params, solved, plan_012):
    wp, p2, area, branches = solved
    other = area_functions(wp, p2.with_receiver_coupling(1.0), plan_012.profile2, grid=area.grid)
    with pytest.raises(ProtocolError, match="different"):
        approximation_report(branches, gamma_closed_form(other))


def test_columns_cover_all_amplitudes(solved):
    cols = solved[3].columns()
    assert {"t", "re_c1", "im_c4", "re_d2", "norm2ph", "norm1ph"} <= set(cols)
    assert all(len(v) == len(cols["t"]) for v in cols.values())


@pytest.mark.parametrize("T1", (0.12, 0.75))
def test_quadrature_crosscheck(params, T1):
    report = quadrature_crosscheck(params, PulseProfile.gaussian(T1), n=100, seed=3)
    assert report.max_deviation < 1e-9


def test_crosscheck_zero_drive():
    report = quadrature_crosscheck(reference_params(omega1=0.0), PulseProfile.gaussian(0.12), n=10)
    assert report.max_deviation == 0.0
    assert not np.any(report.closed_form)


def test_crosscheck_needs_gaussian(params):
    t = np.linspace(-1, 1, 11)
    with pytest.raises(ProtocolError):
        quadrature_crosscheck(params, PulseProfile.tabulated(t, np.ones_like(t)))
