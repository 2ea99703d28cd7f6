import numpy as np
import pytest

ACCEPTANCE_LINES = []

from wannier_stark import SystemParams


@pytest.fixture
def he():
    """Z=2, F=1: the reference system used throughout."""
    return SystemParams(2.0, 1.0)


def random_config(rng, scale=2.0, min_sep=0.2):
    while True:
        q = rng.uniform(-scale, scale, size=6)
        r1, r2 = q[:3], q[3:]
        if min(np.linalg.norm(r1), np.linalg.norm(r2), np.linalg.norm(r1 - r2)) > min_sep:
            return q


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
