import numpy as np
import pytest

from garkit.models import exponential, lognormal, pareto, uniform
from garkit.quadrature import gauss_legendre

ACCEPTANCE_RESULTS: list = []


@pytest.fixture
def unit_uniform():
    return uniform(0.0, 1.0)


@pytest.fixture
def quad():
    return gauss_legendre(256)


@pytest.fixture(params=["uniform", "exp", "lognormal", "pareto3"])
def any_model(request):
    return {
        "uniform": uniform(0.0, 1.0),
        "exp": exponential(1.0),
        "lognormal": lognormal(0.0, 0.5),
        "pareto3": pareto(1.0, 3.0),
    }[request.param]


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(line)
