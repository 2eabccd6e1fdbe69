import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))


@pytest.fixture
def rng():
    return np.random.default_rng(20261014)


ACCEPTANCE = {}


def record(number: int, title: str, ok: bool, detail: str = ""):
    """Store one acceptance verdict; printed in the terminal summary."""
    ACCEPTANCE[number] = (title, bool(ok), detail)
    line = f"criterion {number:2d} [{'PASS' if ok else 'FAIL'}] {title}: {detail}"
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        title, ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(
            f"criterion {n:2d} [{'PASS' if ok else 'FAIL'}] {title}: {detail}")
