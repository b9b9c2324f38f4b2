from __future__ import annotations

import random

import mpmath
import pytest

from pfaffcubic.numerics import working_precision


@pytest.fixture(autouse=True)
def precision_256():
    with working_precision(256):
        yield


@pytest.fixture
def rng():
    return random.Random(12345)


def rand_complex(rng, scale=1.0):
    return mpmath.mpc(rng.uniform(-scale, scale), rng.uniform(-scale, scale))


def rand_matrix(rng, n, scale=1.0):
    return [[rand_complex(rng, scale) for _ in range(n)] for _ in range(n)]


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
