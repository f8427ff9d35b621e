import numpy as np
import pytest

from minsum.errors import InvalidParams
from minsum.generate import MODELS, generate
from minsum.model import format_problem, validate
from minsum.spectral import spectral_radius


@pytest.mark.parametrize("model", MODELS)
@pytest.mark.parametrize("sign_mode", ["attractive", "mixed"])
def test_hits_target_and_is_positive_definite(model, sign_mode):
    for seed, target in [(0, 0.3), (1, 0.9), (2, 0.99)]:
        p = generate(17, model, target, sign_mode, seed)
        assert abs(spectral_radius(p.abs_R()) - target) <= 1e-6
        assert validate(p).ok
        assert np.all(np.abs(p.h) <= 1.0)


def test_constant_weights_examples():
    p = generate(3, "cycle", 0.8, weights="constant")
    np.testing.assert_allclose(p.coupling, -0.4, rtol=1e-12)
    q = generate(2, "path", 0.5, weights="constant")
    np.testing.assert_allclose(q.coupling, -0.5, rtol=1e-12)


def test_sign_modes():
    p = generate(30, "erdos", 0.7, "attractive", seed=3)
    assert np.all(p.coupling < 0)
    q = generate(30, "erdos", 0.7, "mixed", seed=3)
    assert np.any(q.coupling > 0) and np.any(q.coupling < 0)


def test_deterministic_in_seed():
    a = format_problem(generate(12, "erdos", 0.6, "mixed", seed=4))
    b = format_problem(generate(12, "erdos", 0.6, "mixed", seed=4))
    c = format_problem(generate(12, "erdos", 0.6, "mixed", seed=5))
    assert a == b and a != c


def test_shapes():
    assert generate(10, "path", 0.5).num_edges == 9
    assert generate(10, "cycle", 0.5).num_edges == 10
    assert generate(10, "tree", 0.5, seed=2).is_tree
    g = generate(9, "grid", 0.5)
    assert g.num_edges == 12 and g.diameter == 4
    for seed in range(5):
        e = generate(25, "erdos", 0.5, seed=seed)
        assert e.diameter < 25  # connected


def test_single_vertex():
    p = generate(1, "path", 0.5)
    assert p.n == 1 and p.num_edges == 0


@pytest.mark.parametrize("args", [
    (5, "path", 0.0), (5, "path", 1.0), (5, "path", -0.2), (0, "path", 0.5),
    (5, "star", 0.5), (2, "cycle", 0.5),
])
def test_invalid(args):
    with pytest.raises(InvalidParams):
        generate(*args)


def test_invalid_modes():
    with pytest.raises(InvalidParams):
        generate(5, "path", 0.5, sign_mode="repulsive")
    with pytest.raises(InvalidParams):
        generate(5, "path", 0.5, weights="heavy")
    with pytest.raises(InvalidParams):
        generate(5, "path", 0.5, seed=-1)
