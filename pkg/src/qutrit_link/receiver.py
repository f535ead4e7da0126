"""
Receiving node: effective pulse areas, closed-form absorption amplitudes and
the final two-atom state.

The receiver dynamics splits into independent branches labelled by the
sender's ``m_F``.  With the symmetric-mode approximation the one-photon
branch rotates through the area ``eta`` and the two-photon branch through
``zeta``::

    eta(t)  = 2 |G2|/sqrt(k) int f2^(1/2) phi_I
    zeta(t) =   |G2|/sqrt(k) int f2^(1/2) (phi_I + phi_II)

Complete absorption needs ``eta(inf) = zeta(inf) = pi``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import quad

from .errors import ProtocolError
from .params import PulseProfile, SystemParams, TimeGrid, raman_coupling
from .sender import Wavepacket

QUAD_TOL = 1e-10
COMPLETENESS_TOL = 1e-3
EDGE_FLUX_TOL = 1e-8
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(10)


def _integration_interval(wavepacket: Wavepacket, profile2: PulseProfile):
    lo_w, hi_w = wavepacket.window
    lo_p, hi_p = profile2.support()
    return max(lo_w, lo_p), min(hi_w, hi_p)


def _check_coverage(wavepacket: Wavepacket) -> None:
    if wavepacket.source is None:
        # Sample-only packets are zero outside their window by definition.
        return
    lo, hi = wavepacket.window
    edge = np.array([lo, hi])
    a, b = wavepacket.amplitudes(edge)
    edge_flux = float(np.max(a ** 2 + b ** 2))
    peak = float(np.max(wavepacket.phi_I ** 2 + wavepacket.phi_II ** 2))
    if peak > 0 and edge_flux > EDGE_FLUX_TOL * peak:
        raise ProtocolError(
            f"wavepacket grid [{lo}, {hi}] does not cover the photon support: "
            f"edge flux is {edge_flux / peak:.3g} of the peak"
        )


def overlap_integrals(wavepacket: Wavepacket, profile2: PulseProfile) -> Tuple[float, float]:
    """``(int f2^(1/2) phi_I, int f2^(1/2) phi_II)`` over the packet window."""
    lo, hi = _integration_interval(wavepacket, profile2)
    if lo >= hi:
        return 0.0, 0.0
    if wavepacket.source is None or profile2.shape == "tabulated":
        # Piecewise-linear integrands: Gauss-Legendre between consecutive kinks.
        nodes = np.linspace(lo, hi, max(wavepacket.grid.n_points, 200))
        if profile2.shape == "tabulated":
            nodes = np.union1d(nodes, np.clip(profile2.samples[0], lo, hi))
        totals = _panel_cumulative(wavepacket, profile2, nodes)
        return float(totals[0][-1]), float(totals[1][-1])
    pts = [p for p in wavepacket.breakpoints() + [profile2.center] if lo < p < hi] or None
    out = []
    for idx in (0, 1):
        val, _ = quad(lambda s: float(profile2.amplitude(s)) * float(wavepacket.amplitudes(s)[idx]),
                      lo, hi, epsabs=1e-14, epsrel=QUAD_TOL, limit=500, points=pts)
        out.append(val)
    return out[0], out[1]


def _panel_cumulative(wavepacket: Wavepacket, profile2: PulseProfile, times: np.ndarray):
    """Running integrals of ``f2^(1/2) phi_I`` and ``f2^(1/2) phi_II`` on ``times``.

    Each interval is integrated with 10-point Gauss-Legendre; the integrand is
    restricted to the packet window.
    """
    lo_w, hi_w = wavepacket.window
    a, b = times[:-1], times[1:]
    half, mid = 0.5 * (b - a), 0.5 * (b + a)
    s = mid[:, None] + half[:, None] * _GL_NODES[None, :]
    inside = (s >= lo_w) & (s <= hi_w)
    amp = profile2.amplitude(s) * inside
    p1, p2 = wavepacket.amplitudes(s)
    w = half[:, None] * _GL_WEIGHTS[None, :]
    c1 = np.concatenate(([0.0], np.cumsum(np.sum(w * amp * p1, axis=1))))
    c2 = np.concatenate(([0.0], np.cumsum(np.sum(w * amp * p2, axis=1))))
    return c1, c2


def _is_quarter_turn(phi2: float) -> bool:
    return abs(math.remainder(phi2 - math.pi / 2, 2 * math.pi)) < 1e-12


@dataclass(frozen=True, eq=False)
class AreaFunctions:
    grid: TimeGrid
    eta: np.ndarray = field(repr=False)
    zeta: np.ndarray = field(repr=False)
    eta_inf: float
    zeta_inf: float
    f2: np.ndarray = field(repr=False)
    G2: float
    phi2: float
    profile2: PulseProfile

    @property
    def times(self) -> np.ndarray:
        return self.grid.times


def receiver_grid(wavepacket: Wavepacket, profile2: PulseProfile) -> TimeGrid:
    """Packet window extended to cover five widths either side of ``f2``."""
    lo = profile2.center - 5 * profile2.duration
    hi = profile2.center + 5 * profile2.duration
    if profile2.shape == "tabulated":
        lo, hi = profile2.support()
    g = wavepacket.grid
    return TimeGrid(min(g.start, lo), max(g.end, hi), g.n_points, g.adaptive_tol)


def area_functions(wavepacket: Wavepacket, params: SystemParams, profile2: PulseProfile,
                   grid: Optional[TimeGrid] = None) -> AreaFunctions:
    """Effective pulse areas ``eta(t)`` and ``zeta(t)`` of the receiver drive."""
    _check_coverage(wavepacket)
    if grid is None:
        grid = receiver_grid(wavepacket, profile2)
    G2 = abs(raman_coupling(params, 2))
    scale = G2 / math.sqrt(params.k)
    t = grid.times
    c1, c2 = _panel_cumulative(wavepacket, profile2, t)
    I1, I2 = overlap_integrals(wavepacket, profile2)
    return AreaFunctions(
        grid=grid,
        eta=2 * scale * c1,
        zeta=scale * (c1 + c2),
        eta_inf=2 * scale * I1,
        zeta_inf=scale * (I1 + I2),
        f2=profile2.envelope(t, zero_outside=True),
        G2=G2,
        phi2=params.phi2,
        profile2=profile2,
    )


@dataclass(frozen=True, eq=False)
class ReceiverResult:
    """Closed-form receiver amplitudes, evaluated lazily from the areas.

    Amplitudes are labelled ``gamma_<mbar>_<photons>`` with ``m`` for a
    negative magnetic number, e.g. ``gamma_m1_0`` is the amplitude of
    ``|mbar=-1>`` with no photon left.
    """

    area: AreaFunctions

    @property
    def times(self) -> np.ndarray:
        return self.area.times

    # Zero-photon branch (sender m_F = +1): nothing to absorb.
    @property
    def gamma_1_0(self) -> np.ndarray:
        return np.ones_like(self.area.eta)

    # One-photon branch (sender m_F = 0).
    @property
    def gamma_0_0(self) -> np.ndarray:
        return np.sin(self.area.eta / 2)

    @property
    def gamma_1_1(self) -> np.ndarray:
        return np.cos(self.area.eta / 2)

    # Two-photon branch (sender m_F = -1).
    @property
    def gamma_1_2(self) -> np.ndarray:
        return (1 + np.cos(self.area.zeta)) / 2

    @property
    def gamma_0_1(self) -> np.ndarray:
        return np.sin(self.area.zeta) / math.sqrt(2)

    @property
    def gamma_m1_0(self) -> np.ndarray:
        return (1 - np.cos(self.area.zeta)) / 2

    @property
    def absorbed(self) -> Tuple[float, float]:
        """Final ``|gamma_0_0|^2`` and ``|gamma_m1_0|^2``."""
        return (math.sin(self.area.eta_inf / 2) ** 2,
                ((1 - math.cos(self.area.zeta_inf)) / 2) ** 2)

    @property
    def residuals(self) -> Tuple[float, float]:
        return abs(self.area.eta_inf - math.pi), abs(self.area.zeta_inf - math.pi)

    def branch_norms(self) -> Tuple[np.ndarray, np.ndarray]:
        one = self.gamma_0_0 ** 2 + self.gamma_1_1 ** 2
        two = self.gamma_1_2 ** 2 + self.gamma_0_1 ** 2 + self.gamma_m1_0 ** 2
        return one, two

    def weighted_norm(self, beta: Sequence[float]) -> np.ndarray:
        """Total norm of the joint state; 1 at every time."""
        b_m1, b_0, b_1 = beta
        one, two = self.branch_norms()
        return b_m1 ** 2 * two + b_0 ** 2 * one + b_1 ** 2 * self.gamma_1_0 ** 2

    def columns(self) -> dict:
        return {
            "t": self.times,
            "f2": self.area.f2,
            "eta": self.area.eta,
            "zeta": self.area.zeta,
            "gamma_00": self.gamma_0_0,
            "gamma_11": self.gamma_1_1,
            "gamma_12": self.gamma_1_2,
            "gamma_01": self.gamma_0_1,
            "gamma_m10": self.gamma_m1_0,
        }


def gamma_closed_form(area: AreaFunctions) -> ReceiverResult:
    """Closed-form amplitudes; only valid for a receiver drive phase of pi/2."""
    if not _is_quarter_turn(area.phi2):
        raise ProtocolError(
            f"closed-form amplitudes need phi2 = pi/2 (got {area.phi2!r}); "
            "use qutrit_link.oracle.integrate_branches for other phases"
        )
    return ReceiverResult(area)


def entanglement_entropy(populations: Sequence[float], tol: float = 1e-6) -> float:
    """Entropy ``-sum p log2 p`` in bits of the Schmidt weights ``beta**2``.

    Weights summing to 1 within ``tol`` are renormalised; anything further off
    is rejected.
    """
    p = np.asarray(populations, dtype=float)
    if p.ndim != 1 or p.size == 0:
        raise ProtocolError("populations must be a non-empty 1-D sequence")
    if np.any(p < -tol):
        raise ProtocolError(f"negative population in {p.tolist()}")
    total = float(p.sum())
    if abs(total - 1) > tol:
        raise ProtocolError(f"populations sum to {total:.9g}, not 1 within {tol:g}")
    p = np.clip(p, 0.0, None) / total
    nz = p[p > 0]
    return float(max(-np.sum(nz * np.log2(nz)), 0.0))


@dataclass(frozen=True)
class JointState:
    """Two-atom state ``sum beta_m |m>_1 |-m>_2`` with its entanglement.

    ``is_complete`` is False when the receiver did not reach both pi areas;
    ``absorbed`` then tells how much of the one- and two-photon branches was
    actually stored.
    """

    beta: Tuple[float, float, float]
    entropy: float
    is_complete: bool
    absorbed: Tuple[float, float] = (1.0, 1.0)
    residuals: Tuple[float, float] = (0.0, 0.0)

    @property
    def beta2(self) -> Tuple[float, float, float]:
        return tuple(b * b for b in self.beta)


def final_joint_state(beta: Sequence[float], receiver_result: ReceiverResult,
                      tol: float = COMPLETENESS_TOL) -> JointState:
    beta = tuple(float(b) for b in beta)
    entropy = entanglement_entropy([b * b for b in beta], tol=1e-12)
    residuals = receiver_result.residuals
    complete = all(r < tol for r in residuals)
    return JointState(beta, entropy, complete, receiver_result.absorbed, residuals)
