import numpy as np
import pytest

from attxray import CapMetric, EuclideanMetric, HyperbolicMetric

ACCEPTANCE_LINES = []


@pytest.fixture(params=["euclidean", "cap", "hyperbolic"])
def metric(request):
    return {"euclidean": EuclideanMetric(1.0), "cap": CapMetric(1.0, 0.5),
            "hyperbolic": HyperbolicMetric(1.0, 0.6)}[request.param]


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
