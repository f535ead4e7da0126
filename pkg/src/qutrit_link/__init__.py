"""Deterministic qutrit entanglement between two atom-cavity nodes via two-photon exchange."""

__version__ = "0.1.0"

from .errors import ConfigError, OracleError, ProtocolError, SolverError
from .params import (
    REFERENCE_PARAMS_MHZ,
    PulseProfile,
    SystemParams,
    TimeGrid,
    build_params,
    cooperativity,
    envelope_eval,
    reference_params,
    raman_coupling,
    validate_regime,
)
from .sender import (
    Wavepacket,
    beta_coefficients,
    cumulative_flux,
    photon_wavepackets,
    populations,
    theta,
)
from .receiver import (
    area_functions,
    entanglement_entropy,
    final_joint_state,
    gamma_closed_form,
)
from .pulse_solver import solve_amplitude, solve_delay, solve_pulse
