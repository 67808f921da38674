import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_spd(rng, d, jitter=0.5):
    A = rng.normal(size=(d, d))
    return A @ A.T + jitter * np.eye(d)


ACCEPTANCE = []


def record_acceptance(number, ok, detail):
    line = f"AC{number:<2} {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s[2:4])):
            terminalreporter.write_line(line)
