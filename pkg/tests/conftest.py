import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from edgecast.instance import make_instance
from edgecast.sampling import zipf_popularity

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def tiny_instance(seed: int, K: int = 2, F: int = 2, alpha: float = 3.0, tau: float = 0.004):
    """Random small instance with budgets drawn between zero and 'everything local'."""
    rng = np.random.default_rng(seed)
    I = rng.uniform(1e7, 1.5e7, F)
    s = rng.uniform(0.1, 0.5, K)
    P = rng.dirichlet(np.ones(F), size=K)
    base = make_instance(I, alpha, 10, 0, 0, 1.1e11, s, P, tau, 1e-27)
    C = rng.uniform(0, 1.0, K) * I.sum()
    E = rng.uniform(0, 1.0, K) * base.energy_cost.sum(axis=1)
    return base.replace(cache_bits=C, avg_energy=E)


def base_instance(cache_fraction: float = 0.175, tau: float = 0.0015, seed: int = 0):
    rng = np.random.default_rng(seed)
    I = rng.uniform(10e6, 15e6, 50)
    return make_instance(
        I, 3.0, 10, cache_fraction * I.sum(), 1.7e3, 1.1e11, 0.1 * np.arange(1, 5), zipf_popularity(50, 1.0), tau, 1e-27
    )


def two_by_two(**overrides):
    """K=2, F=2 instance with O=(1e6, 1e6), tau=0.1 and s=(0.1, 0.2); R4 = 1e7 bits/s."""
    kw = dict(
        input_bits=[5e5, 5e5], alpha=2.0, compute_load=10, cache_bits=0, avg_energy=0, cpu_freq=1.1e11,
        inv_spectral_eff=[0.1, 0.2], demand=[0.5, 0.5], tau=0.1, mu=1e-27,
    )
    kw.update(overrides)
    return make_instance(**kw)


@pytest.fixture
def tiny():
    return tiny_instance


# ---------------------------------------------------------------------------
# acceptance report: one line per criterion, printed after the test run
# ---------------------------------------------------------------------------

ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture
def report():
    def record(number: int, passed: bool, text: str) -> bool:
        ACCEPTANCE_LINES[number] = f"[{'PASS' if passed else 'FAIL'}] criterion {number:2d}: {text}"
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])
