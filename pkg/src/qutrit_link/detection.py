"""
Monte Carlo readout of the receiving atom's Zeeman state.

The atom in ``mbar = +1`` (``-1``) is converted into a sigma+ (sigma-)
photon, which a quarter-wave plate and a polarising beam splitter route to
detector D2 (D1).  ``mbar = 0`` gives no photon in this first stage; a
second pulse then produces a photon that is detected without resolving its
polarisation.

Random numbers
--------------
All draws come from numpy's Philox4x64-10 counter-based generator keyed by
the 64-bit seed.  Trial ``i`` reads the fixed block of uniforms starting at
stream position ``i * draws_per_trial``, so the counts do not depend on how
trials are chunked or distributed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence, Union

import numpy as np

from .errors import ProtocolError
from .receiver import JointState

SIGMA_MINUS = -1
NO_CLICK = 0
SIGMA_PLUS = 1
SECOND_STAGE = 2

READOUT_DRAWS = 8
PAIR_DRAWS = 16
DEFAULT_CHUNK = 1 << 17


@dataclass(frozen=True)
class DetectorModel:
    efficiency: float = 1.0
    dark_prob: float = 0.0
    seed: int = 0

    def __post_init__(self):
        for name in ("efficiency", "dark_prob"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ProtocolError(f"{name} must lie in [0, 1], got {v!r}")
        if not 0 <= self.seed < 2 ** 64:
            raise ProtocolError(f"seed must be an unsigned 64-bit integer, got {self.seed!r}")


def trial_uniforms(seed: int, first_trial: int, n_trials: int, draws_per_trial: int) -> np.ndarray:
    """Uniforms of trials ``first_trial .. first_trial + n_trials - 1``.

    Philox emits four 64-bit words per counter value, so a trial block of
    ``draws_per_trial`` (a multiple of 4) starts at counter
    ``first_trial * draws_per_trial / 4``.
    """
    if draws_per_trial % 4:
        raise ValueError("draws_per_trial must be a multiple of 4")
    counter = first_trial * (draws_per_trial // 4)
    bitgen = np.random.Philox(key=seed, counter=[counter & (2 ** 64 - 1), counter >> 64, 0, 0])
    return np.random.Generator(bitgen).random((n_trials, draws_per_trial))


def _as_beta2(state: Union[JointState, Sequence[float]], tol: float) -> np.ndarray:
    p = np.asarray(state.beta2 if isinstance(state, JointState) else state, dtype=float)
    if p.shape != (3,):
        raise ProtocolError(f"expected three populations (m_F = -1, 0, +1), got shape {p.shape}")
    if np.any(p < 0) or not np.all(np.isfinite(p)):
        raise ProtocolError(f"populations must be finite and non-negative, got {p.tolist()}")
    if abs(p.sum() - 1) > tol:
        raise ProtocolError(f"populations sum to {p.sum():.9g}, not 1")
    return p / p.sum()


def _sample_sender_state(u: np.ndarray, beta2: np.ndarray) -> np.ndarray:
    """Sender ``m_F`` in {-1, 0, +1} drawn from ``beta2``."""
    edges = np.cumsum(beta2)
    idx = np.searchsorted(edges[:2], u, side="right")
    return idx.astype(np.int8) - 1


def _node_readout(mbar: np.ndarray, u: np.ndarray, det: DetectorModel) -> np.ndarray:
    """Outcome code per trial from seven uniforms ``u[:, 0:7]``."""
    eta, pd = det.efficiency, det.dark_prob
    real = u[:, 0] < eta
    click1 = ((mbar == -1) & real) | (u[:, 1] < pd)   # D1, sigma-
    click2 = ((mbar == 1) & real) | (u[:, 2] < pd)    # D2, sigma+
    # A double click is resolved by a fair coin.
    coin = u[:, 3] < 0.5
    plus = click2 & (~click1 | coin)
    minus = click1 & ~plus
    silent = ~(click1 | click2)
    second = silent & (((mbar == 0) & (u[:, 4] < eta)) | (u[:, 5] < pd))
    out = np.full(mbar.shape, NO_CLICK, dtype=np.int8)
    out[plus] = SIGMA_PLUS
    out[minus] = SIGMA_MINUS
    out[second] = SECOND_STAGE
    return out


@dataclass(frozen=True)
class CountRecord:
    n_plus: int
    n_minus: int
    n_silent: int
    n_second_stage: int
    n_trials: int
    detector: DetectorModel = field(default_factory=DetectorModel)

    def __post_init__(self):
        if self.n_plus + self.n_minus + self.n_silent != self.n_trials:
            raise ProtocolError("click counts do not add up to the number of trials")
        if self.n_second_stage > self.n_silent:
            raise ProtocolError("second-stage clicks exceed silent first-stage trials")


def simulate_readout(state: Union[JointState, Sequence[float]], detector: DetectorModel,
                     n_trials: int, chunk_size: int = DEFAULT_CHUNK, tol: float = 1e-6) -> CountRecord:
    """Click statistics at node B for the sender populations ``beta**2``.

    The receiver holds ``mbar = -m_F``, so sigma+ clicks sample
    ``beta_-1**2`` and sigma- clicks ``beta_1**2``.
    """
    if n_trials < 1:
        raise ProtocolError("n_trials must be at least 1")
    beta2 = _as_beta2(state, tol)
    counts = np.zeros(4, dtype=np.int64)
    for start in range(0, n_trials, chunk_size):
        n = min(chunk_size, n_trials - start)
        u = trial_uniforms(detector.seed, start, n, READOUT_DRAWS)
        mbar = -_sample_sender_state(u[:, 0], beta2)
        out = _node_readout(mbar, u[:, 1:], detector)
        counts += [np.count_nonzero(out == SIGMA_PLUS), np.count_nonzero(out == SIGMA_MINUS),
                   np.count_nonzero((out == NO_CLICK) | (out == SECOND_STAGE)),
                   np.count_nonzero(out == SECOND_STAGE)]
    return CountRecord(int(counts[0]), int(counts[1]), int(counts[2]), int(counts[3]),
                       n_trials, detector)


class RatioEstimate(NamedTuple):
    ratio: float
    se: float
    upper: float  # one-sided 95% upper bound


def estimate_ratio(record: CountRecord) -> RatioEstimate:
    """``N+/N-`` with its standard error.

    For multinomial counts the delta method gives
    ``Var(R)/R**2 = (1-p+)/N+ + (1-p-)/N- + 2/N = 1/N+ + 1/N-``.
    With ``N+ = 0`` the error is zero and the upper bound uses the rule of
    three.
    """
    if record.n_minus == 0:
        raise ProtocolError("no sigma- clicks: the ratio N+/N- is undefined")
    r = record.n_plus / record.n_minus
    if record.n_plus == 0:
        return RatioEstimate(0.0, 0.0, 3.0 / record.n_minus)
    se = r * math.sqrt(1.0 / record.n_plus + 1.0 / record.n_minus)
    return RatioEstimate(r, se, r + 1.6448536269514722 * se)


def expected_ratio(state: Union[JointState, Sequence[float]]) -> float:
    b2 = _as_beta2(state, 1e-6)
    return b2[0] / b2[2] if b2[2] > 0 else math.inf


class FidelityEstimate(NamedTuple):
    fidelity: float
    se: float


def fidelity_estimate(record: CountRecord, target_state_index: int = -1) -> FidelityEstimate:
    """Squared diagonal element ``<mbar|rho|mbar>**2`` of the receiver state.

    The population is estimated as the click fraction of the matching channel
    divided by the detector efficiency.
    """
    channels = {-1: record.n_minus, 0: record.n_second_stage, 1: record.n_plus}
    if target_state_index not in channels:
        raise ValueError(f"target_state_index must be -1, 0 or 1, got {target_state_index!r}")
    if record.n_plus + record.n_minus + record.n_second_stage == 0:
        raise ProtocolError("no clicks recorded: fidelity cannot be estimated")
    eta = record.detector.efficiency
    if eta == 0:
        raise ProtocolError("zero detector efficiency: populations cannot be corrected")
    n = record.n_trials
    q = channels[target_state_index] / n
    p = min(q / eta, 1.0)
    se_p = math.sqrt(q * (1 - q) / n) / eta
    return FidelityEstimate(p * p, 2 * p * se_p)


@dataclass(frozen=True, eq=False)
class CoincidenceRecord:
    n_trials: int
    outcome_a: np.ndarray = field(repr=False)
    outcome_b: np.ndarray = field(repr=False)
    violation_count: int
    coincidences: int
    second_stage_coincidences: int
    lost: int

    def __post_init__(self):
        if not 0 <= self.violation_count <= self.n_trials:
            raise ProtocolError("violation count out of range")

    @property
    def coincidence_yield(self) -> float:
        return (self.coincidences + self.second_stage_coincidences) / self.n_trials


def classify_pairs(a: np.ndarray, b: np.ndarray):
    """``(violations, opposite-polarisation pairs, second-stage pairs)`` masks."""
    pol_a = (a == SIGMA_PLUS) | (a == SIGMA_MINUS)
    pol_b = (b == SIGMA_PLUS) | (b == SIGMA_MINUS)
    opposite = pol_a & pol_b & (a == -b)
    both_second = (a == SECOND_STAGE) & (b == SECOND_STAGE)
    violation = ((pol_a & pol_b & (a == b))
                 | (pol_a & (b == SECOND_STAGE))
                 | (pol_b & (a == SECOND_STAGE)))
    return violation, opposite, both_second


def simulate_two_node_correlation(joint_state: JointState, detector: DetectorModel, n_trials: int,
                                  chunk_size: int = DEFAULT_CHUNK) -> CoincidenceRecord:
    """Readout of both atoms of a complete joint state, trial by trial.

    Atom A sits in ``m_F`` and atom B in ``-m_F``.  Trials where a photon was
    lost at one node are counted in ``lost``, never as violations.
    """
    if not joint_state.is_complete:
        raise ProtocolError("joint state is incomplete: the photons were not fully absorbed")
    if n_trials < 1:
        raise ProtocolError("n_trials must be at least 1")
    beta2 = _as_beta2(joint_state, 1e-6)
    out_a = np.empty(n_trials, dtype=np.int8)
    out_b = np.empty(n_trials, dtype=np.int8)
    for start in range(0, n_trials, chunk_size):
        n = min(chunk_size, n_trials - start)
        u = trial_uniforms(detector.seed, start, n, PAIR_DRAWS)
        m = _sample_sender_state(u[:, 0], beta2)
        out_a[start:start + n] = _node_readout(m, u[:, 1:8], detector)
        out_b[start:start + n] = _node_readout(-m, u[:, 8:15], detector)
    violation, opposite, both_second = classify_pairs(out_a, out_b)
    n_viol = int(np.count_nonzero(violation))
    n_opp = int(np.count_nonzero(opposite))
    n_sec = int(np.count_nonzero(both_second))
    return CoincidenceRecord(n_trials, out_a, out_b, n_viol, n_opp, n_sec,
                             n_trials - n_viol - n_opp - n_sec)
