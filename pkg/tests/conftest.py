import math

import numpy as np
import pytest

from logeuc.spd import LogDescriptor, matrix_log, normalize_log


def random_spd(rng, d, floor=0.1):
    b = rng.standard_normal((d, d))
    return b @ b.T + floor * np.eye(d)


def random_unit_log(rng, d):
    return normalize_log(matrix_log(random_spd(rng, d)))


def random_unit_sym(rng, d):
    """Unit-norm symmetric matrix without going through the eigensolver."""
    a = rng.standard_normal((d, d))
    a = a + a.T
    return LogDescriptor(a / np.linalg.norm(a))


def expm_taylor(a):
    """Matrix exponential by scaling and squaring with a 30-term Taylor series."""
    a = np.asarray(a, dtype=np.float64)
    norm = np.linalg.norm(a, 1)
    s = max(0, int(math.ceil(math.log2(norm))) + 1) if norm > 0 else 0
    b = a / 2.0**s
    out = np.eye(a.shape[0])
    term = np.eye(a.shape[0])
    for k in range(1, 30):
        term = term @ b / k
        out = out + term
    for _ in range(s):
        out = out @ out
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def synthetic_descriptors():
    from logeuc.data import descriptor_pipeline, generate_synthetic

    return descriptor_pipeline(generate_synthetic(classes=3, per_class=8, joints=5,
                                                  frames_range=(40, 60), seed=7))


@pytest.fixture(scope="session")
def calibrated_set():
    """The default 5-class synthetic set (C=5, m=20, J=15)."""
    from logeuc.data import descriptor_pipeline, generate_synthetic

    return descriptor_pipeline(generate_synthetic(seed=0))


# one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE_LINES = []


def record_criterion(number, passed, detail):
    line = f"{'PASS' if passed else 'FAIL'} criterion {number}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
