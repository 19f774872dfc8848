import numpy as np
import pytest

from xwq.units import MediumParams


@pytest.fixture
def medium():
    """Natural-unit medium with beta = sqrt(1.5); numbers are arbitrary but fixed."""
    return MediumParams.natural(omega1=2.0, k=3.0, omega0=1.0e3)


@pytest.fixture
def kerr_medium():
    return MediumParams.natural(omega1=2.0, k=3.0, omega0=1.0e3, chi=-1.0e-4)


def rel_l2(a, b, w=None):
    a = np.asarray(a)
    b = np.asarray(b)
    w = 1.0 if w is None else w
    return float(np.sqrt(np.sum(np.abs(a - b) ** 2 * w) / np.sum(np.abs(b) ** 2 * w)))


ACCEPTANCE_LINES = []


def acceptance_report(number, title, ok, detail):
    """Print and remember one pass/fail line for an acceptance criterion."""
    line = f"criterion {number:>2} [{'PASS' if ok else 'FAIL'}] {title}: {detail}"
    print(line)
    ACCEPTANCE_LINES.append((number, line))
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
