import pytest

from qutrit_link.params import PulseProfile, reference_params
from qutrit_link.pulse_solver import solve_pulse
from qutrit_link.sender import photon_wavepackets


@pytest.fixture(scope="session")
def params():
    return reference_params()


@pytest.fixture(scope="session")
def wavepackets(params):
    return {T1: photon_wavepackets(params, PulseProfile.gaussian(T1)) for T1 in (0.75, 0.22, 0.12)}


@pytest.fixture(scope="session")
def plan_012(params, wavepackets):
    return solve_pulse(wavepackets[0.12], params, 0.12)


_acceptance = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _acceptance[report.nodeid] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for nodeid, outcome in _acceptance.items():
        name = nodeid.split("::")[-1]
        terminalreporter.write_line(f"{'PASS' if outcome == 'passed' else 'FAIL'}  {name}")
