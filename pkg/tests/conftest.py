import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from isomeasure.algebra import PAULI, build_spin_rep

settings.register_profile(
    "default", max_examples=40, deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")

SPINS = [k / 2 for k in range(1, 11)]


def random_su2(rng):
    q = rng.standard_normal(4)
    q /= np.linalg.norm(q)
    p, r = q[0] + 1j * q[1], q[2] + 1j * q[3]
    return np.array([[p, -np.conj(r)], [r, np.conj(p)]])


def random_sl2c(rng, scale=1.0):
    X = sum((rng.standard_normal() + 1j * rng.standard_normal()) * s for s in PAULI) * 0.5 * scale
    from isomeasure.algebra import mat_exp
    return mat_exp(X)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def half():
    return build_spin_rep(0.5)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import VERDICT_LINES
    if VERDICT_LINES:
        terminalreporter.section("acceptance verdicts")
        for line in VERDICT_LINES:
            terminalreporter.write_line(line)
