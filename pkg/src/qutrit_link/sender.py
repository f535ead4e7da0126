"""
Sending node: Zeeman populations, emitted photon wavepackets and the
asymptotic atom-photon amplitudes.

With spontaneous losses neglected the populations depend on time only
through the accumulated pulse energy

    theta(t) = alpha_1 * int_{-inf}^{t} f_1(t') dt'

as ``(exp(-theta), theta*exp(-theta), 1 - (1+theta)*exp(-theta))`` for
``m_F = -1, 0, +1``.  Photon I is emitted while the atom leaves ``m_F=-1``
and photon II while it leaves ``m_F=0``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Tuple

import numpy as np
from scipy.integrate import quad, trapezoid
from scipy.optimize import brentq
from scipy.special import erfc

from .errors import ProtocolError
from .params import PulseProfile, SystemParams, TimeGrid, photon_generation_rate

QUAD_TOL = 1e-10
NORM_TOL = 1e-6


def _tabulated_integral(profile: PulseProfile, t: np.ndarray) -> np.ndarray:
    # Exact integral of the piecewise-linear interpolant from its first sample.
    ts, fs = (np.asarray(a) for a in profile.samples)
    cum = np.concatenate(([0.0], np.cumsum(0.5 * np.diff(ts) * (fs[1:] + fs[:-1]))))
    tc = np.clip(t, ts[0], ts[-1])
    i = np.clip(np.searchsorted(ts, tc, side="right") - 1, 0, ts.size - 2)
    ft = np.interp(tc, ts, fs)
    return cum[i] + 0.5 * (tc - ts[i]) * (fs[i] + ft)


def theta(t, params: SystemParams, profile1: PulseProfile):
    """Accumulated pulse energy ``alpha_1 * int f_1`` up to time ``t``."""
    alpha = photon_generation_rate(params)
    t = np.asarray(t, dtype=float)
    if profile1.shape == "gaussian":
        T = profile1.duration
        out = alpha * T * math.sqrt(math.pi) / 2 * erfc(-(t - profile1.center) / T)
    else:
        out = alpha * _tabulated_integral(profile1, t)
    return out if out.ndim else float(out)


def theta_inf(params: SystemParams, profile1: PulseProfile) -> float:
    alpha = photon_generation_rate(params)
    if profile1.shape == "gaussian":
        return alpha * profile1.duration * math.sqrt(math.pi)
    return float(alpha * _tabulated_integral(profile1, np.array(profile1.samples[0][-1])))


def theta_by_quadrature(t: float, params: SystemParams, profile1: PulseProfile) -> float:
    """Adaptive quadrature of the pulse energy, independent of the closed form."""
    alpha = photon_generation_rate(params)
    if alpha == 0:
        return 0.0
    lo, hi = profile1.support()
    if profile1.shape == "gaussian":
        lo = profile1.center - 12 * profile1.duration
    if t <= lo:
        return 0.0
    upper = min(t, hi) if profile1.shape == "tabulated" else t
    kinks = [profile1.center]
    if profile1.shape == "tabulated":
        kinks = list(profile1.samples[0])
    pts = [p for p in kinks if lo < p < upper] or None
    val, _ = quad(lambda s: profile1.envelope(s, zero_outside=True), lo, upper,
                  epsabs=1e-14, epsrel=1e-13, limit=max(500, 2 * len(kinks)), points=pts)
    return alpha * val


def population_from_theta(th) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    th = np.asarray(th, dtype=float)
    e = np.exp(-th)
    p_m1 = e
    p_0 = th * e
    p_p1 = -np.expm1(-th) - p_0
    return p_m1, p_0, p_p1


def populations(t, params: SystemParams, profile1: PulseProfile):
    """Zeeman populations ``(<s_-1>, <s_0>, <s_+1>)`` at time(s) ``t``."""
    out = population_from_theta(theta(t, params, profile1))
    if np.ndim(t) == 0:
        return tuple(float(x) for x in out)
    return out


def beta_from_theta(th_inf: float) -> Tuple[float, float, float]:
    p = population_from_theta(th_inf)
    return tuple(math.sqrt(max(float(x), 0.0)) for x in p)


def beta_coefficients(params: SystemParams, profile1: PulseProfile) -> Tuple[float, float, float]:
    """Final amplitudes ``(beta_-1, beta_0, beta_1)`` of the atom-photon state."""
    return beta_from_theta(theta_inf(params, profile1))


def cumulative_flux(t, params: SystemParams, profile1: PulseProfile):
    """Mean number of photons emitted up to ``t``; tends to ``beta_0^2 + 2 beta_1^2``."""
    th = np.asarray(theta(t, params, profile1))
    # int_0^theta (1 + x) e^{-x} dx
    out = 2.0 - (2.0 + th) * np.exp(-th)
    return out if out.ndim else float(out)


def time_of_theta(level: float, params: SystemParams, profile1: PulseProfile) -> float:
    """Earliest time at which the accumulated pulse energy reaches ``level``."""
    total = theta_inf(params, profile1)
    if not 0 < level < total:
        raise ProtocolError(f"theta never reaches {level} (theta_inf = {total:.6g})")
    lo, hi = profile1.support()
    return brentq(lambda s: theta(s, params, profile1) - level, lo, hi, xtol=1e-15, rtol=1e-15)


@dataclass(frozen=True)
class SenderResult:
    theta_inf: float
    times: np.ndarray = field(repr=False)
    populations: np.ndarray = field(repr=False)  # shape (3, n): m_F = -1, 0, +1
    beta: Tuple[float, float, float]

    @property
    def beta2(self) -> Tuple[float, float, float]:
        return tuple(b * b for b in self.beta)


def sender_result(params: SystemParams, profile1: PulseProfile,
                  grid: Optional[TimeGrid] = None) -> SenderResult:
    if grid is None:
        grid = default_sender_grid(profile1)
    t = grid.times
    pops = np.vstack(populations(t, params, profile1))
    return SenderResult(theta_inf(params, profile1), t, pops, beta_coefficients(params, profile1))


def default_sender_grid(profile1: PulseProfile, n_points: int = 2000) -> TimeGrid:
    return TimeGrid.around(profile1.center, profile1.duration, 5.0, n_points)


@dataclass(frozen=True, eq=False)
class Wavepacket:
    """Real, non-negative amplitudes of the two emitted photons.

    ``phi_I`` and ``phi_II`` are samples on ``grid`` in us**-0.5.  When the
    packet comes from :func:`photon_wavepackets` it also carries the analytic
    amplitude functions, which integrators use instead of the samples.
    Outside the grid window a sample-only packet is taken to be zero.
    """

    grid: TimeGrid
    phi_I: np.ndarray = field(repr=False)
    phi_II: np.ndarray = field(repr=False)
    center: float = 0.0
    width: float = 1.0
    source: Optional[Callable] = field(default=None, repr=False)

    def __post_init__(self):
        if self.phi_I.shape != (self.grid.n_points,) or self.phi_II.shape != (self.grid.n_points,):
            raise ProtocolError("wavepacket samples must match the grid")
        if np.any(self.phi_I < 0) or np.any(self.phi_II < 0):
            raise ProtocolError("wavepacket amplitudes must be non-negative")

    @classmethod
    def from_samples(cls, times, phi_I, phi_II, center=None, width=None) -> "Wavepacket":
        times = np.asarray(times, dtype=float)
        if times.size < 2 or np.any(np.diff(times) <= 0):
            raise ProtocolError("wavepacket times must be increasing with at least 2 points")
        spacing = np.diff(times)
        if not np.allclose(spacing, spacing[0], rtol=1e-9, atol=0):
            raise ProtocolError("wavepacket samples must lie on a uniform grid")
        grid = TimeGrid(float(times[0]), float(times[-1]), times.size)
        if center is None:
            center = 0.5 * (times[0] + times[-1])
        if width is None:
            width = 0.1 * (times[-1] - times[0])
        return cls(grid, np.asarray(phi_I, dtype=float).copy(), np.asarray(phi_II, dtype=float).copy(),
                   float(center), float(width))

    @property
    def times(self) -> np.ndarray:
        return self.grid.times

    @property
    def window(self) -> Tuple[float, float]:
        return self.grid.start, self.grid.end

    def amplitudes(self, t):
        """``(phi_I(t), phi_II(t))`` at arbitrary times."""
        if self.source is not None:
            return self.source(t)
        ts = self.times
        return (np.interp(t, ts, self.phi_I, left=0.0, right=0.0),
                np.interp(t, ts, self.phi_II, left=0.0, right=0.0))

    def breakpoints(self) -> list:
        # Kinks of the interpolant; quad benefits from knowing about them.
        if self.source is not None:
            return [self.center]
        return []

    def norms(self) -> Tuple[float, float]:
        """``(int |phi_I|^2, int |phi_II|^2)`` over the grid window."""
        lo, hi = self.window
        if self.source is None:
            t = self.times
            return (float(trapezoid(self.phi_I ** 2, t)), float(trapezoid(self.phi_II ** 2, t)))
        pts = [p for p in self.breakpoints() if lo < p < hi] or None
        out = []
        for idx in (0, 1):
            val, _ = quad(lambda s: float(self.amplitudes(s)[idx]) ** 2, lo, hi,
                          epsabs=1e-13, epsrel=QUAD_TOL, limit=500, points=pts)
            out.append(val)
        return tuple(out)


def _analytic_source(params: SystemParams, profile1: PulseProfile):
    alpha = photon_generation_rate(params)

    def source(t):
        f = profile1.envelope(t, zero_outside=True)
        th = theta(t, params, profile1)
        flux = alpha * f * np.exp(-th)
        return np.sqrt(flux), np.sqrt(flux * th)

    return source


def photon_wavepackets(params: SystemParams, profile1: PulseProfile,
                       grid: Optional[TimeGrid] = None) -> Wavepacket:
    """Sample the two photon amplitudes and verify their norms.

    Raises :class:`ProtocolError` if the grid is too narrow for the norms to
    match ``beta_0^2 + beta_1^2`` and ``beta_1^2`` within 1e-6.
    """
    if grid is None:
        grid = default_sender_grid(profile1)
    source = _analytic_source(params, profile1)
    phi_I, phi_II = source(grid.times)
    wp = Wavepacket(grid, np.asarray(phi_I, dtype=float), np.asarray(phi_II, dtype=float),
                    profile1.center, profile1.duration, source)
    _, b0, b1 = beta_coefficients(params, profile1)
    n_I, n_II = wp.norms()
    if abs(n_I - (b0 ** 2 + b1 ** 2)) > NORM_TOL:
        raise ProtocolError(
            f"norm identity int|phi_I|^2 = beta_0^2 + beta_1^2 violated on "
            f"[{grid.start}, {grid.end}]: {n_I:.9g} vs {b0 ** 2 + b1 ** 2:.9g}; widen the grid"
        )
    if abs(n_II - b1 ** 2) > NORM_TOL:
        raise ProtocolError(
            f"norm identity int|phi_II|^2 = beta_1^2 violated on "
            f"[{grid.start}, {grid.end}]: {n_II:.9g} vs {b1 ** 2:.9g}; widen the grid"
        )
    return wp


def waveform_columns(params: SystemParams, profile1: PulseProfile, wavepacket: Wavepacket) -> dict:
    """Columns of the sender CSV export, keyed by header name."""
    t = wavepacket.times
    p = populations(t, params, profile1)
    return {
        "t": t,
        "f1": profile1.envelope(t, zero_outside=True),
        "phi_I": wavepacket.phi_I,
        "phi_II": wavepacket.phi_II,
        "pop_m-1": p[0],
        "pop_m0": p[1],
        "pop_m+1": p[2],
    }
