"""
Exact integration of the receiver branches without the symmetric-mode
approximation.

Two-photon branch basis (sender in ``m_F = -1``)::

    c1 = |mbar=+1; 1_I, 1_II>     c2 = |mbar=0; 0_I, 1_II>
    c3 = |mbar=0;  1_I, 0_II>     c4 = |mbar=-1; 0, 0>

One-photon branch (sender in ``m_F = 0``)::

    d1 = |mbar=+1; 1_I, 0>        d2 = |mbar=0; 0, 0>

Removing photon I couples with ``kappa(t) * phi_I(t)`` and removing photon
II with ``kappa(t) * phi_II(t)``, where ``kappa = |G2|/sqrt(k) f2^(1/2)``.
The Hamiltonian restricted to each branch is

    H[lower, upper] = -kappa * phi * exp(-i phi2),   H[upper, lower] = conj

which reproduces the closed-form amplitudes when ``phi_I = phi_II``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.integrate import solve_ivp, trapezoid

from .errors import OracleError, ProtocolError
from .params import PulseProfile, SystemParams, TimeGrid, raman_coupling
from .receiver import ReceiverResult, receiver_grid
from .sender import Wavepacket, theta, theta_by_quadrature

NORM_DRIFT_TOL = 1e-8

# (lower state, upper state, photon index) for each allowed transition.
TWO_PHOTON_LINKS = ((1, 0, 0), (2, 0, 1), (3, 1, 1), (3, 2, 0))
ONE_PHOTON_LINKS = ((1, 0, 0),)


def branch_hamiltonian(kappa: float, phi_I: float, phi_II: float, phi2: float, links, size: int) -> np.ndarray:
    H = np.zeros((size, size), dtype=complex)
    phase = np.exp(-1j * phi2)
    amps = (phi_I, phi_II)
    for lower, upper, idx in links:
        H[lower, upper] = -kappa * amps[idx] * phase
        H[upper, lower] = np.conj(H[lower, upper])
    return H


def _self_test() -> None:
    # Hermiticity and closed-form recovery for phi_I = phi_II at phi2 = pi/2.
    H = branch_hamiltonian(0.7, 1.3, 0.4, 0.9, TWO_PHOTON_LINKS, 4)
    if not np.allclose(H, H.conj().T):
        raise AssertionError("two-photon branch Hamiltonian is not Hermitian")
    # Symmetric packet: the generator on (c1, |+>, c4) must match the
    # closed-form one, d(c1, g01, c4)/dzeta = (-g01, c1 - c4, g01)/sqrt(2).
    H = branch_hamiltonian(1.0, 1.0, 1.0, math.pi / 2, TWO_PHOTON_LINKS, 4)
    c = np.array([0.3, 0.2, 0.2, 0.5], dtype=complex)
    dc = -1j * H @ c / 2.0  # dzeta/dt = kappa * (phi_I + phi_II) = 2
    g01 = (c[1] + c[2]) / math.sqrt(2)
    expected = np.array([-g01, (c[0] - c[3]), g01]) / math.sqrt(2)
    got = np.array([dc[0], (dc[1] + dc[2]) / math.sqrt(2), dc[3]])
    if not np.allclose(got, expected):
        raise AssertionError("branch Hamiltonian does not reduce to the closed form")


_self_test()


@dataclass(frozen=True, eq=False)
class BranchAmplitudes:
    grid: TimeGrid
    two_photon: np.ndarray = field(repr=False)  # (4, n) complex: c1..c4
    one_photon: np.ndarray = field(repr=False)  # (2, n) complex: d1, d2
    G2: float
    phi2: float
    profile2: PulseProfile
    wavepacket: Wavepacket = field(repr=False)

    @property
    def times(self) -> np.ndarray:
        return self.grid.times

    @property
    def two_photon_populations(self) -> np.ndarray:
        """Rows ``mbar = +1, 0, -1`` of the two-photon branch."""
        p = np.abs(self.two_photon) ** 2
        return np.vstack([p[0], p[1] + p[2], p[3]])

    @property
    def one_photon_populations(self) -> np.ndarray:
        """Rows ``mbar = +1, 0`` of the one-photon branch."""
        return np.abs(self.one_photon) ** 2

    @property
    def norms(self):
        return (np.sum(np.abs(self.two_photon) ** 2, axis=0),
                np.sum(np.abs(self.one_photon) ** 2, axis=0))

    def columns(self) -> dict:
        cols = {"t": self.times}
        for name, row in zip(("c1", "c2", "c3", "c4"), self.two_photon):
            cols[f"re_{name}"] = row.real
            cols[f"im_{name}"] = row.imag
        for name, row in zip(("d1", "d2"), self.one_photon):
            cols[f"re_{name}"] = row.real
            cols[f"im_{name}"] = row.imag
        n2, n1 = self.norms
        cols["norm2ph"] = n2
        cols["norm1ph"] = n1
        return cols


def integrate_branches(wavepacket: Wavepacket, params: SystemParams, profile2: PulseProfile,
                       grid: Optional[TimeGrid] = None, rtol: float = 1e-10,
                       atol: float = 1e-12) -> BranchAmplitudes:
    """Integrate both absorbing branches for the drive ``(params.omega2, profile2)``.

    Uses 8th-order Dormand-Prince with the given tolerances.  Raises
    :class:`OracleError` if a branch norm drifts by more than 1e-8.
    """
    if grid is None:
        grid = receiver_grid(wavepacket, profile2)
    G2 = abs(raman_coupling(params, 2))
    scale = G2 / math.sqrt(params.k)
    phi2 = params.phi2
    lo_w, hi_w = wavepacket.window
    phase = np.exp(-1j * phi2)

    def rhs(t, y):
        if t < lo_w or t > hi_w:
            return np.zeros(6, dtype=complex)
        kap = scale * float(profile2.amplitude(t))
        a, b = (float(x) for x in wavepacket.amplitudes(t))
        ka, kb = kap * a * phase, kap * b * phase
        c1, c2, c3, c4, d1, d2 = y
        # dy/dt = -i H y with H[lower, upper] = -kappa*phi*e^{-i phi2}
        return 1j * np.array([
            np.conj(ka) * c2 + np.conj(kb) * c3,
            ka * c1 + np.conj(kb) * c4,
            kb * c1 + np.conj(ka) * c4,
            kb * c2 + ka * c3,
            np.conj(ka) * d2,
            ka * d1,
        ])

    y0 = np.array([1, 0, 0, 0, 1, 0], dtype=complex)
    t = grid.times
    max_step = min(profile2.duration, wavepacket.width) / 10
    sol = solve_ivp(rhs, (t[0], t[-1]), y0, method="DOP853", t_eval=t,
                    rtol=rtol, atol=atol, max_step=max_step)
    if not sol.success:
        raise OracleError(f"branch integration failed: {sol.message}")
    out = BranchAmplitudes(grid, sol.y[:4], sol.y[4:], G2, phi2, profile2, wavepacket)
    n2, n1 = out.norms
    drift = max(np.max(np.abs(n2 - 1)), np.max(np.abs(n1 - 1)))
    if drift > NORM_DRIFT_TOL:
        raise OracleError(f"branch norm drifted by {drift:.3g} (limit {NORM_DRIFT_TOL:g})")
    return out


@dataclass(frozen=True)
class ApproximationReport:
    max_deviation: dict
    final_deviation: dict
    overlap_ratio: float

    @property
    def worst_final(self) -> float:
        return max(self.final_deviation.values())

    @property
    def worst_overall(self) -> float:
        return max(self.max_deviation.values())

    def as_dict(self) -> dict:
        return {
            "max_deviation": dict(self.max_deviation),
            "final_deviation": dict(self.final_deviation),
            "overlap_ratio": self.overlap_ratio,
        }


def _antisymmetric_overlap(oracle: BranchAmplitudes) -> float:
    t = oracle.times
    amp = oracle.profile2.amplitude(t)
    lo, hi = oracle.wavepacket.window
    inside = (t >= lo) & (t <= hi)
    a, b = oracle.wavepacket.amplitudes(t)
    num = trapezoid(amp * np.abs(a - b) * inside, t)
    den = trapezoid(amp * (a + b) * inside, t)
    return float(num / den) if den > 0 else math.nan


def approximation_report(oracle: BranchAmplitudes, closed: ReceiverResult) -> ApproximationReport:
    """Compare exact branch populations with the closed-form ones."""
    area = closed.area
    if (not np.array_equal(oracle.times, area.times)
            or not math.isclose(oracle.G2, area.G2, rel_tol=1e-12, abs_tol=1e-300)
            or oracle.phi2 != area.phi2
            or oracle.profile2 != area.profile2):
        raise ProtocolError("oracle and closed-form results describe different configurations")
    two = oracle.two_photon_populations
    one = oracle.one_photon_populations
    pairs = {
        "two_photon_mbar+1": (two[0], closed.gamma_1_2 ** 2),
        "two_photon_mbar0": (two[1], closed.gamma_0_1 ** 2),
        "two_photon_mbar-1": (two[2], closed.gamma_m1_0 ** 2),
        "one_photon_mbar+1": (one[0], closed.gamma_1_1 ** 2),
        "one_photon_mbar0": (one[1], closed.gamma_0_0 ** 2),
    }
    max_dev = {k: float(np.max(np.abs(x - y))) for k, (x, y) in pairs.items()}
    final_dev = {k: float(abs(x[-1] - y[-1])) for k, (x, y) in pairs.items()}
    return ApproximationReport(max_dev, final_dev, _antisymmetric_overlap(oracle))


@dataclass(frozen=True)
class CrosscheckReport:
    times: np.ndarray = field(repr=False)
    closed_form: np.ndarray = field(repr=False)
    quadrature: np.ndarray = field(repr=False)
    max_deviation: float


def quadrature_crosscheck(params: SystemParams, profile1: PulseProfile, n: int = 100,
                          seed: int = 0) -> CrosscheckReport:
    """erf-based pulse energy against adaptive quadrature at random times."""
    if profile1.shape != "gaussian":
        raise ProtocolError("the closed-form pulse energy exists only for gaussian profiles")
    rng = np.random.default_rng(seed)
    T = profile1.duration
    ts = np.sort(rng.uniform(profile1.center - 5 * T, profile1.center + 5 * T, n))
    closed = np.asarray(theta(ts, params, profile1), dtype=float)
    numeric = np.array([theta_by_quadrature(float(s), params, profile1) for s in ts])
    return CrosscheckReport(ts, closed, numeric, float(np.max(np.abs(closed - numeric))))
