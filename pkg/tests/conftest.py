from pathlib import Path

import numpy as np
import pytest

from minsum.model import load_problem, normalize, problem_from_edges

DATA = Path(__file__).parent / "data"

# walk-summable fixtures shipped with the tests
WS_FIXTURES = [
    "three_cycle", "path3", "two_node", "cycle6_mixed", "grid8",
    "erdos8", "tree7", "erdos20", "grid16",
]


def fixture_path(name) -> Path:
    return DATA / f"{name}.txt"


def load_fixture(name):
    p, _ = normalize(load_problem(fixture_path(name)))
    return p


@pytest.fixture(params=WS_FIXTURES)
def ws_problem(request):
    return request.param, load_fixture(request.param)


@pytest.fixture
def three_cycle():
    return problem_from_edges(3, [(0, 1, -0.4), (1, 2, -0.4), (0, 2, -0.4)], np.ones(3))


@pytest.fixture
def path3():
    return problem_from_edges(3, [(0, 1, -0.5), (1, 2, -0.5)], [1.0, 0.0, 0.0])


@pytest.fixture
def two_node():
    return problem_from_edges(2, [(0, 1, -0.5)], [1.0, 0.0])
