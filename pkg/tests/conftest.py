import numpy as np
import pytest

from yamabe_concentration.config import resolve_geometry
from yamabe_concentration.constants import compute_constants
from yamabe_concentration.manifold import load_geometry

import oracles


@pytest.fixture(scope="session")
def constants7():
    return compute_constants(7)


@pytest.fixture(scope="session")
def mp7():
    return oracles.mp_constants(7)


@pytest.fixture(scope="session")
def bundled():
    return {name: load_geometry(resolve_geometry(name)) for name in ("circle_constant", "circle_cosine", "torus_constant")}


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


@pytest.fixture
def accept(capsys):
    """Record one pass/fail line for an acceptance criterion and echo it."""

    def record(number, ok, detail):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {detail}"
        ACCEPTANCE_LINES.append(line)
        with capsys.disabled():
            print("\n" + line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
