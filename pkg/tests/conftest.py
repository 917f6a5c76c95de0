import pytest

from quantum_slide.experiments import DEFAULTS, run_gate

# lines collected by the acceptance suite, echoed in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def ub_run():
    return run_gate(dict(DEFAULTS["gate_run"], gate="ub", t_off="auto"))


@pytest.fixture(scope="session")
def uc_run():
    return run_gate(dict(DEFAULTS["gate_run"], gate="uc", t_off="auto"))
