import pytest

from emdapf.apf import ApfConfig, run_apf
from emdapf.plant import ScenarioConfig, synthesize

# one line per acceptance criterion, filled by tests/test_acceptance.py
ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture(scope="session")
def default_plant():
    return synthesize(ScenarioConfig())


@pytest.fixture(scope="session")
def traces(default_plant):
    return {
        "baseline": run_apf(default_plant, ApfConfig(mode="baseline")),
        "emd_enhanced": run_apf(default_plant, ApfConfig(mode="emd_enhanced")),
    }


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])
