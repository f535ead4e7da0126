import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qutrit_link.detection import (CountRecord, DetectorModel, estimate_ratio, expected_ratio,
                                   fidelity_estimate, simulate_readout, simulate_two_node_correlation,
                                   trial_uniforms)
from qutrit_link.errors import ProtocolError
from qutrit_link.receiver import JointState

REFERENCE_ROW = (0.31, 0.36, 0.33)


def joint(beta2, complete=True):
    return JointState(tuple(math.sqrt(b) for b in beta2), 0.0, complete)


def test_trial_uniforms_are_counter_addressed():
    full = trial_uniforms(11, 0, 10, 8)
    assert np.array_equal(trial_uniforms(11, 4, 3, 8), full[4:7])
    # Same stream as a plain Philox generator keyed by the seed.
    ref = np.random.Generator(np.random.Philox(key=11)).random(80).reshape(10, 8)
    assert np.array_equal(full, ref)
    with pytest.raises(ValueError):
        trial_uniforms(0, 0, 1, 6)


@pytest.mark.parametrize("beta2,field", [((1, 0, 0), "n_plus"), ((0, 0, 1), "n_minus"),
                                         ((0, 1, 0), "n_second_stage")])
def test_pure_states_ideal_detectors(beta2, field):
    rec = simulate_readout(beta2, DetectorModel(), 1000)
    assert getattr(rec, field) == 1000


def test_zero_efficiency_all_silent():
    rec = simulate_readout(REFERENCE_ROW, DetectorModel(efficiency=0.0), 5000)
    assert rec.n_silent == 5000 and rec.n_second_stage == 0
    with pytest.raises(ProtocolError):
        fidelity_estimate(rec)


def test_double_clicks_split_by_coin():
    rec = simulate_readout((0, 1, 0), DetectorModel(efficiency=0.0, dark_prob=1.0, seed=2), 20000)
    assert rec.n_plus + rec.n_minus == 20000
    assert abs(rec.n_plus - 10000) < 4 * math.sqrt(5000)


def test_ratio_within_four_standard_errors():
    rec = simulate_readout(REFERENCE_ROW, DetectorModel(seed=7), 10 ** 6)
    est = estimate_ratio(rec)
    assert abs(est.ratio - 0.31 / 0.33) < 4 * est.se
    for count, p in ((rec.n_plus, 0.31), (rec.n_second_stage, 0.36), (rec.n_minus, 0.33)):
        assert abs(count - p * 1e6) < 4 * math.sqrt(1e6 * p * (1 - p))


def test_ratio_standard_error_example():
    est = estimate_ratio(CountRecord(310, 330, 360, 360, 1000))
    assert est.ratio == pytest.approx(310 / 330)
    assert est.se == pytest.approx(0.07431, abs=1e-5)
    assert est.upper > est.ratio


def test_ratio_edge_cases():
    assert estimate_ratio(CountRecord(0, 100, 0, 0, 100)) == (0.0, 0.0, 0.03)
    with pytest.raises(ProtocolError):
        estimate_ratio(CountRecord(5, 0, 0, 0, 5))


def test_standard_error_matches_seed_spread():
    ratios, ses = [], []
    for seed in range(200):
        est = estimate_ratio(simulate_readout(REFERENCE_ROW, DetectorModel(seed=seed), 10000))
        ratios.append(est.ratio)
        ses.append(est.se)
    assert np.std(ratios, ddof=1) == pytest.approx(np.mean(ses), rel=0.15)


def test_expected_ratio():
    assert expected_ratio(REFERENCE_ROW) == pytest.approx(0.31 / 0.33)
    assert expected_ratio((0.5, 0.5, 0.0)) == math.inf


def test_seed_determinism():
    a = simulate_readout(REFERENCE_ROW, DetectorModel(0.8, 0.01, 5), 30000)
    b = simulate_readout(REFERENCE_ROW, DetectorModel(0.8, 0.01, 5), 30000)
    c = simulate_readout(REFERENCE_ROW, DetectorModel(0.8, 0.01, 6), 30000)
    assert a == b and a != c


@settings(deadline=None, max_examples=15)
@given(st.integers(1, 5000), st.integers(0, 2 ** 64 - 1))
def test_chunk_size_invariance(chunk, seed):
    det = DetectorModel(0.7, 0.02, seed)
    assert simulate_readout(REFERENCE_ROW, det, 7000, chunk) == simulate_readout(REFERENCE_ROW, det, 7000)


@pytest.mark.parametrize("eta", [1.0, 0.5])
def test_ratio_insensitive_to_efficiency(eta):
    est = estimate_ratio(simulate_readout(REFERENCE_ROW, DetectorModel(efficiency=eta, seed=3), 400000))
    assert abs(est.ratio - 0.31 / 0.33) < 4 * est.se


def test_unnormalised_state_rejected():
    with pytest.raises(ProtocolError, match="sum"):
        simulate_readout((0.5, 0.5, 0.5), DetectorModel(), 10)
    with pytest.raises(ProtocolError):
        simulate_readout((0.5, 0.5), DetectorModel(), 10)
    with pytest.raises(ProtocolError):
        DetectorModel(efficiency=1.5)


def test_count_record_invariants():
    with pytest.raises(ProtocolError):
        CountRecord(1, 1, 1, 0, 4)
    with pytest.raises(ProtocolError):
        CountRecord(1, 1, 1, 2, 3)


def test_two_node_ideal_no_violations():
    rec = simulate_two_node_correlation(joint(REFERENCE_ROW), DetectorModel(seed=1), 200000)
    assert rec.violation_count == 0
    assert rec.coincidence_yield == 1.0 and rec.lost == 0


def test_two_node_lossy_no_violations():
    rec = simulate_two_node_correlation(joint(REFERENCE_ROW), DetectorModel(efficiency=0.5, seed=1), 200000)
    assert rec.violation_count == 0
    assert rec.coincidence_yield == pytest.approx(0.25, abs=4 * math.sqrt(0.25 * 0.75 / 2e5))


def test_two_node_dark_counts_cause_violations():
    rec = simulate_two_node_correlation(joint(REFERENCE_ROW), DetectorModel(dark_prob=0.05, seed=1), 20000)
    assert rec.violation_count > 0


def test_two_node_requires_complete_state():
    with pytest.raises(ProtocolError, match="incomplete"):
        simulate_two_node_correlation(joint(REFERENCE_ROW, complete=False), DetectorModel(), 10)


def test_fidelity_examples():
    # T1 = 0.75 us leaves the receiver almost surely in mbar = -1.
    rec = simulate_readout((3.866e-4, 3.038e-3, 0.996575), DetectorModel(seed=4), 200000)
    fid = fidelity_estimate(rec, -1)
    assert fid.fidelity == pytest.approx(0.9966 ** 2, abs=4 * fid.se + 1e-4)
    assert fidelity_estimate(CountRecord(0, 100, 0, 0, 100), -1).fidelity == 1.0
    assert fidelity_estimate(CountRecord(100, 0, 0, 0, 100), -1).fidelity == 0.0
    with pytest.raises(ProtocolError):
        fidelity_estimate(CountRecord(0, 0, 100, 0, 100))
    with pytest.raises(ValueError):
        fidelity_estimate(CountRecord(0, 100, 0, 0, 100), 2)


def test_fidelity_corrects_for_efficiency():
    rec = simulate_readout((0, 0, 1), DetectorModel(efficiency=0.5, seed=9), 100000)
    fid = fidelity_estimate(rec, -1)
    assert fid.fidelity == pytest.approx(1.0, abs=4 * fid.se)
