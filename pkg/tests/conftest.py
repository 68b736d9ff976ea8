import numpy as np
import pytest

from fbqos.channel import ChannelConfig
from fbqos.montecarlo import MonteCarloSpec


@pytest.fixture
def siso10():
    return ChannelConfig.from_snr_db(10.0)


@pytest.fixture
def mc10k():
    return MonteCarloSpec(samples=10_000, seed=1)


def joint(a, b):
    return float(np.hypot(a, b))


ACCEPTANCE_LINES = []


@pytest.fixture
def report(capsys):
    """Record and print one PASS/FAIL line for an acceptance criterion."""

    def _report(number, title, ok, detail=""):
        line = f"ACCEPTANCE {number:>2} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
        ACCEPTANCE_LINES.append(line)
        with capsys.disabled():
            print("\n" + line)
        return ok

    return _report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
