"""
Design of the receiver drive so that both effective areas equal pi.

Both areas are linear in ``|G2|``, so the two conditions decouple: the delay
of ``f2`` is fixed by ``eta(inf) = zeta(inf)``, i.e. by the root of

    D(t_d) = int f2^(1/2)(t - t_d) (phi_I(t) - phi_II(t)) dt,

and the amplitude then follows from ``zeta(inf) = pi``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np
from scipy.optimize import brentq

from .errors import SolverError
from .params import PulseProfile, SystemParams, raman_coupling
from .receiver import overlap_integrals
from .sender import Wavepacket

ROOT_TOL = 1e-10
MIN_PHOTON_NORM = 1e-6
SCAN_POINTS = 41


def _template(pulse: Union[float, PulseProfile]) -> PulseProfile:
    if isinstance(pulse, PulseProfile):
        return pulse
    return PulseProfile.gaussian(float(pulse))


def delayed_profile(wavepacket: Wavepacket, pulse: Union[float, PulseProfile], delay: float) -> PulseProfile:
    """Receiver envelope centred ``delay`` after the sender pulse centre."""
    return _template(pulse).shifted(wavepacket.center + delay)


def _check_nontrivial(wavepacket: Wavepacket) -> None:
    n_I, n_II = wavepacket.norms()
    if n_I <= MIN_PHOTON_NORM or n_II <= MIN_PHOTON_NORM:
        raise SolverError(
            f"wavepacket too weak to design a receiver pulse: photon norms "
            f"{n_I:.3g} and {n_II:.3g} (need > {MIN_PHOTON_NORM:g})"
        )


def balance(wavepacket: Wavepacket, pulse: Union[float, PulseProfile], delay: float) -> Tuple[float, float]:
    """``(D(delay), int f2^(1/2) (phi_I + phi_II))`` at the given delay."""
    I1, I2 = overlap_integrals(wavepacket, delayed_profile(wavepacket, pulse, delay))
    return I1 - I2, I1 + I2


def default_bracket(wavepacket: Wavepacket, pulse: Union[float, PulseProfile]) -> Tuple[float, float]:
    T2 = _template(pulse).duration
    return -5 * T2, 10 * T2 + 5 * wavepacket.width


def solve_delay(wavepacket: Wavepacket, pulse: Union[float, PulseProfile], bracket=None) -> float:
    """Delay of the receiver pulse at which ``eta(inf) == zeta(inf)``.

    ``pulse`` is either the gaussian duration ``T2`` or a profile template
    whose shape is kept fixed and only shifted.
    """
    _check_nontrivial(wavepacket)
    lo, hi = bracket if bracket is not None else default_bracket(wavepacket, pulse)
    # Bracket ends can lie where the drive misses the packet entirely and D is
    # exactly zero, so scan for a strict sign change instead of trusting them.
    delays = np.linspace(lo, hi, SCAN_POINTS)
    values = np.array([balance(wavepacket, pulse, d) for d in delays])
    d, overlap = values[:, 0], values[:, 1]
    scale = float(np.max(overlap))
    if scale <= 0 or np.max(np.abs(d)) <= ROOT_TOL * scale:
        raise SolverError("degenerate wavepacket: phi_I and phi_II overlap the drive identically")
    for i in range(SCAN_POINTS - 1):
        if d[i] * d[i + 1] < 0:
            return brentq(lambda x: balance(wavepacket, pulse, x)[0], delays[i], delays[i + 1],
                          xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
    raise SolverError(
        f"no sign change of D on [{lo:.6g}, {hi:.6g}] us: "
        f"D(lo) = {d[0]:.6g}, D(hi) = {d[-1]:.6g}"
    )


def solve_amplitude(wavepacket: Wavepacket, pulse: Union[float, PulseProfile], delay: float, k: float) -> float:
    """``|G2|`` that makes ``zeta(inf) = pi`` at the given delay."""
    _, overlap = balance(wavepacket, pulse, delay)
    if overlap <= 0:
        raise SolverError(f"receiver pulse at delay {delay:.6g} us does not overlap the photons")
    return math.pi * math.sqrt(k) / overlap


@dataclass(frozen=True)
class ReceiverPulsePlan:
    delay: float
    amplitude_scale: float
    omega2_over_omega1: float
    residuals: Tuple[float, float]
    bracket_used: Tuple[float, float]
    profile2: PulseProfile

    def params(self, params: SystemParams) -> SystemParams:
        """``params`` with the receiver Rabi frequency set by this plan."""
        return params.with_receiver_coupling(self.amplitude_scale)

    def as_dict(self) -> dict:
        return {
            "delay_us": self.delay,
            "G2_rad_per_us": self.amplitude_scale,
            "omega2_over_omega1": self.omega2_over_omega1,
            "eta_residual": self.residuals[0],
            "zeta_residual": self.residuals[1],
        }


def plan_residuals(wavepacket: Wavepacket, pulse, delay: float, G2: float, k: float) -> Tuple[float, float]:
    """Signed ``(eta(inf) - pi, zeta(inf) - pi)`` of a given drive."""
    I1, I2 = overlap_integrals(wavepacket, delayed_profile(wavepacket, pulse, delay))
    scale = abs(G2) / math.sqrt(k)
    return 2 * scale * I1 - math.pi, scale * (I1 + I2) - math.pi


def solve_pulse(wavepacket: Wavepacket, params: SystemParams, pulse: Union[float, PulseProfile],
                bracket=None) -> ReceiverPulsePlan:
    bracket = tuple(bracket) if bracket is not None else default_bracket(wavepacket, pulse)
    delay = solve_delay(wavepacket, pulse, bracket)
    G2 = solve_amplitude(wavepacket, pulse, delay, params.k)
    G1 = abs(raman_coupling(params, 1))
    ratio = G2 / G1 if G1 > 0 else math.inf
    residuals = plan_residuals(wavepacket, pulse, delay, G2, params.k)
    return ReceiverPulsePlan(delay, G2, ratio, residuals, bracket,
                             delayed_profile(wavepacket, pulse, delay))
