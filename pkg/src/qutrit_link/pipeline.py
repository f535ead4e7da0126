"""Protocol stages composed from a :class:`~qutrit_link.config.RunConfig`."""
from __future__ import annotations

import math
from dataclasses import dataclass

from .config import RunConfig
from .errors import ConfigError
from .oracle import approximation_report, integrate_branches
from .params import REFERENCE_T1_VALUES, REFERENCE_POPULATIONS, PulseProfile, SystemParams, raman_coupling
from .pulse_solver import (ReceiverPulsePlan, default_bracket, delayed_profile, plan_residuals,
                           solve_amplitude, solve_delay, solve_pulse)
from .receiver import area_functions, entanglement_entropy, final_joint_state, gamma_closed_form
from .sender import (SenderResult, Wavepacket, beta_coefficients, cumulative_flux, photon_wavepackets,
                     sender_result, theta_inf)


@dataclass(frozen=True)
class SenderStage:
    params: SystemParams
    profile1: PulseProfile
    result: SenderResult
    wavepacket: Wavepacket

    def summary(self) -> dict:
        n_I, n_II = self.wavepacket.norms()
        return {
            "theta_inf": self.result.theta_inf,
            "beta": list(self.result.beta),
            "beta2": list(self.result.beta2),
            "photon_norms": [n_I, n_II],
            "mean_photon_number": cumulative_flux(math.inf, self.params, self.profile1),
        }


def run_sender(cfg: RunConfig) -> SenderStage:
    params, profile1, grid = cfg.params, cfg.profile1, cfg.sender_grid
    return SenderStage(params, profile1, sender_result(params, profile1, grid),
                       photon_wavepackets(params, profile1, grid))


def run_pulse_design(cfg: RunConfig, stage: SenderStage) -> ReceiverPulsePlan:
    """Solve for the receiver drive, or take it from the config when given."""
    r = cfg.block("receiver")
    wp, params, T2 = stage.wavepacket, stage.params, r["T2"]
    delay, ratio = r["delay"], r["omega2_over_omega1"]
    if delay is None and ratio is None:
        if not r["solve"]:
            raise ConfigError("receiver.solve is false but neither receiver.delay nor "
                              "receiver.omega2_over_omega1 is given")
        return solve_pulse(wp, params, T2)
    if delay is None:
        delay = solve_delay(wp, T2)
    G1 = abs(raman_coupling(params, 1))
    G2 = ratio * G1 if ratio is not None else solve_amplitude(wp, T2, delay, params.k)
    return ReceiverPulsePlan(delay, G2, G2 / G1 if G1 else math.inf,
                             plan_residuals(wp, T2, delay, G2, params.k),
                             default_bracket(wp, T2), delayed_profile(wp, T2, delay))


@dataclass(frozen=True)
class ReceiverStage:
    plan: ReceiverPulsePlan
    params: SystemParams
    area: object
    result: object
    joint: object


def run_receiver(stage: SenderStage, plan: ReceiverPulsePlan) -> ReceiverStage:
    params2 = plan.params(stage.params)
    area = area_functions(stage.wavepacket, params2, plan.profile2)
    result = gamma_closed_form(area)
    joint = final_joint_state(stage.result.beta, result)
    return ReceiverStage(plan, params2, area, result, joint)


def receiver_summary(rs: ReceiverStage) -> dict:
    return {
        "plan": rs.plan.as_dict(),
        "eta_inf": rs.area.eta_inf,
        "zeta_inf": rs.area.zeta_inf,
        "residuals": list(rs.result.residuals),
        "absorbed": list(rs.result.absorbed),
    }


def entangle_summary(stage: SenderStage, rs: ReceiverStage) -> dict:
    j = rs.joint
    return {
        "beta": list(j.beta),
        "beta2": list(j.beta2),
        "entropy_bits": j.entropy,
        "is_complete": j.is_complete,
        "residuals": list(j.residuals),
        "absorbed": list(j.absorbed),
        "plan": rs.plan.as_dict(),
    }


def run_oracle(stage: SenderStage, rs: ReceiverStage):
    branches = integrate_branches(stage.wavepacket, rs.params, rs.plan.profile2, grid=rs.area.grid)
    return branches, approximation_report(branches, rs.result)


def table1(params: SystemParams, t0: float = 0.0) -> list:
    """Closed-form populations and entropies next to the published values."""
    rows = []
    for T1 in REFERENCE_T1_VALUES:
        profile = PulseProfile.gaussian(T1, t0)
        beta2 = [b * b for b in beta_coefficients(params, profile)]
        ref_beta2, ref_E = REFERENCE_POPULATIONS[T1]
        rows.append({
            "T1_us": T1,
            "theta_inf": theta_inf(params, profile),
            "beta2": beta2,
            "entropy_bits": entanglement_entropy(beta2),
            "reference_beta2": list(ref_beta2),
            "reference_entropy_bits": ref_E,
        })
    return rows
