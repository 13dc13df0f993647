import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from bridgedham.params import ModelParams  # noqa: E402

# calibrated high-probability regime (alpha = 8L - 1)
CALIBRATED = dict(n=10_000, alpha=319.0, omega=5.0, eps1=1.0, L=40, M=4)
# moderate occupancy, sparse tiles present, H almost always holds
PRACTICAL = dict(n=2_000, alpha=50.0, omega=5.0, eps1=1.0, L=9, M=4)
# lower occupancy: F, I and J all fail in a fair share of trials
MIXED = dict(n=2_000, alpha=40.0, omega=5.0, eps1=1.0, L=9, M=4)


@pytest.fixture
def calibrated():
    return ModelParams(**CALIBRATED)


@pytest.fixture
def practical():
    return ModelParams(**PRACTICAL)


@pytest.fixture
def mixed():
    return ModelParams(**MIXED)


ACCEPTANCE_LINES = []


def record(criterion, ok, detail):
    """Store one acceptance verdict; printed in the terminal summary."""
    ACCEPTANCE_LINES.append(f"criterion {criterion}: {'PASS' if ok else 'FAIL'} - {detail}")
    print(ACCEPTANCE_LINES[-1])
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
