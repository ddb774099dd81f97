import time

import pytest
from hypothesis import settings

from polaritonlab.blockade.sweep import calibrate_kappa

settings.register_profile("pkg", deadline=None, max_examples=25, derandomize=True)
settings.load_profile("pkg")

CAL_GAMMAS = (0.120, 0.220)  # meV
CAL_GRID = (0.02, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5)


@pytest.fixture(scope="session")
def calibration():
    """Full kappa/b calibration, computed once and shared; returns (result, seconds)."""
    t0 = time.perf_counter()
    cal = calibrate_kappa(CAL_GAMMAS, CAL_GRID)
    return cal, time.perf_counter() - t0


ACCEPTANCE = {}


@pytest.fixture
def acceptance():
    """Record one line per acceptance criterion, then assert it."""
    def record(number, title, ok, detail):
        ACCEPTANCE[number] = (title, bool(ok), detail)
        assert ok, f"criterion {number} ({title}) failed: {detail}"
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        title, ok, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number} [{'PASS' if ok else 'FAIL'}] {title}: {detail}")
