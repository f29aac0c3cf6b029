import functools

import pytest
from hypothesis import HealthCheck, settings

from fk_ergo.oracle import dense_spectrum
from fk_ergo.scenario import SCENARIOS
from fk_ergo.semigroup import CONVERGENCE_TOL
from fk_ergo.spectral import solve

settings.register_profile(
    "default", max_examples=40, deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


@functools.lru_cache(maxsize=None)
def solved(name):
    """(scenario, kernel, W, solution, dense oracle) for a named scenario, cached per session."""
    s = SCENARIOS[name]
    K = s.config.kernel(s.grid)
    W = s.config.lyapunov_function(s.grid)
    return s, K, W, solve(K, W, tol=CONVERGENCE_TOL), dense_spectrum(K)


@pytest.fixture(params=sorted(SCENARIOS))
def scenario_name(request):
    return request.param


# one line per acceptance criterion, collected by tests/test_acceptance.py
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
