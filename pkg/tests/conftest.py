import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=100,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_matrix(rng, m, N, eps=None, concentration=1.0):
    P = rng.dirichlet(np.full(N, concentration), size=m)
    if eps is not None:
        P = (1 - N * eps) * P + eps
    return P


# acceptance criteria report: filled in by test_acceptance.py, printed after the run
ACCEPTANCE: dict[int, tuple[bool, str]] = {}
ACCEPTANCE_RAN = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RAN:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(set(ACCEPTANCE_RAN)):
        ok, detail = ACCEPTANCE.get(k, (False, "did not complete"))
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
