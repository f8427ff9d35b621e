import numpy as np
import pytest

from minsum.analysis import (
    analyze,
    build_A_D,
    compute_gamma_star,
    in_domain,
    iterate_F,
    operator_F,
    z_fixed,
    z_series,
)
from minsum.decomposition import construct_witness, is_convex_decomposition
from minsum.engine import run_sync
from minsum.errors import MissingEdgeValue, NotWalkSummable, SpectralRadiusTooLarge
from minsum.model import direct_solve, problem_from_edges
from minsum.spectral import spectral_radius

from conftest import WS_FIXTURES, load_fixture

GAMMA_3CYCLE = (1 - np.sqrt(1 - 4 * 0.16)) / (2 * 0.16)


def test_closed_form_value():
    assert GAMMA_3CYCLE == pytest.approx(1.25, abs=1e-15)


def test_operator_examples(three_cycle):
    np.testing.assert_array_equal(operator_F(three_cycle, np.zeros(6)), np.ones(6))
    assert np.all(operator_F(three_cycle, np.zeros(6)) <= operator_F(three_cycle, np.full(6, 0.5)))
    Fv = operator_F(three_cycle, np.full(6, 2.5))
    np.testing.assert_allclose(Fv, 1 / 0.6, rtol=1e-15)
    assert np.all(Fv < 2.5)
    assert in_domain(three_cycle, np.full(6, 2.5))
    assert not in_domain(three_cycle, np.full(6, 7.0))


def test_gamma_star_examples(three_cycle, path3):
    r = compute_gamma_star(three_cycle)
    np.testing.assert_allclose(r.gamma_star, GAMMA_3CYCLE, atol=1e-12)
    g = compute_gamma_star(path3).gamma_star
    expect = {(0, 1): 1.0, (2, 1): 1.0, (1, 0): 4 / 3, (1, 2): 4 / 3}
    for e, val in expect.items():
        assert g[path3.index_of(*e)] == pytest.approx(val, abs=1e-15)
    single = problem_from_edges(1, [], [1.0])
    r1 = compute_gamma_star(single)
    assert r1.gamma_star.size == 0 and r1.iterations == 0


def test_gamma_star_not_walk_summable():
    hot = problem_from_edges(3, [(0, 1, -0.6), (1, 2, -0.6), (0, 2, 0.6)], np.ones(3))
    with pytest.raises(NotWalkSummable):
        compute_gamma_star(hot)


@pytest.mark.parametrize("name", WS_FIXTURES)
def test_fixed_point_properties(name):
    p = load_fixture(name)
    tol = 1e-12
    up = compute_gamma_star(p, tol=tol)
    down = compute_gamma_star(p, tol=tol, start="witness")
    g = up.gamma_star
    assert np.max(np.abs(operator_F(p, g) - g)) <= 10 * tol
    assert np.all(g > 0) and np.all(g < construct_witness(p).v)
    assert np.max(np.abs(up.gamma_star - down.gamma_star)) <= 10 * tol
    s, _ = run_sync(p)
    assert np.max(np.abs(s.params.gamma - g)) <= 10 * 1e-10


def test_A_D_three_cycle(three_cycle):
    ops = build_A_D(three_cycle, np.full(6, 1.25))
    assert np.all(np.count_nonzero(ops.A, axis=1) == 1)
    np.testing.assert_allclose(ops.A[ops.A != 0], 0.5, rtol=1e-15)
    np.testing.assert_allclose(np.diag(ops.D), 0.5, rtol=1e-15)
    np.testing.assert_array_equal(ops.y, np.ones(6))


def test_A_D_path(path3):
    g = compute_gamma_star(path3).gamma_star
    ops = build_A_D(path3, g)
    for e in [(0, 1), (2, 1)]:
        assert not np.any(ops.A[path3.index_of(*e)])
    with pytest.raises(MissingEdgeValue):
        build_A_D(path3, g[:2])


@pytest.mark.parametrize("name", WS_FIXTURES)
def test_A_sparsity_pattern(name):
    p = load_fixture(name)
    ops = build_A_D(p, compute_gamma_star(p).gamma_star)
    rows, cols = np.nonzero(ops.A)
    for r, c in zip(rows, cols):
        i, j = int(p.src[r]), int(p.dst[r])
        u, k = int(p.src[c]), int(p.dst[c])
        assert k == i and u != j
    assert np.count_nonzero(ops.D - np.diag(np.diag(ops.D))) == 0


def test_z_fixed_examples(three_cycle, path3):
    r = z_fixed(three_cycle, np.full(6, GAMMA_3CYCLE))
    np.testing.assert_allclose(r.z, -1.0, atol=1e-14)
    np.testing.assert_allclose(r.x, 5.0, atol=1e-13)
    rp = z_fixed(path3, compute_gamma_star(path3).gamma_star)
    assert rp.z[path3.index_of(1, 2)] == pytest.approx(-1 / 3, abs=1e-15)
    assert rp.x[2] == pytest.approx(0.5, abs=1e-15)
    r0 = z_fixed(three_cycle.with_h(np.zeros(3)), np.full(6, GAMMA_3CYCLE))
    assert np.all(r0.z == 0) and np.all(r0.x == 0)


def test_z_fixed_rejects_large_radius(three_cycle):
    with pytest.raises(SpectralRadiusTooLarge):
        z_fixed(three_cycle, np.full(6, 2.5))  # |A| entries 1.0 on a cycle


@pytest.mark.parametrize("name", WS_FIXTURES)
def test_series_matches_dense_solve(name):
    p = load_fixture(name)
    g = compute_gamma_star(p).gamma_star
    dense = z_fixed(p, g)
    series, terms = z_series(p, g)
    assert np.max(np.abs(dense.z - series)) <= 1e-10
    assert dense.exactness_error <= 1e-9
    assert spectral_radius(np.abs(build_A_D(p, g).A)) < 1.0


def _random_in_V(p, rng):
    """A perturbed witness that is still a member of the convex-decomposition set."""
    v = construct_witness(p).v
    while True:
        cand = v * (1.0 + rng.uniform(0.0, 0.05, v.shape))
        if is_convex_decomposition(p, cand)[0]:
            return cand


@pytest.mark.parametrize("name", ["three_cycle", "grid8", "erdos8"])
def test_monotone_and_positive(name):
    p = load_fixture(name)
    rng = np.random.default_rng(0)
    v = construct_witness(p).v
    for _ in range(100):
        a = rng.uniform(-2, 1, v.shape) * v
        b = a + rng.uniform(0, 1, v.shape) * (v - a)
        Fa, Fb = operator_F(p, a), operator_F(p, b)
        assert np.all(Fa <= Fb) and np.all(Fa > 0)


@pytest.mark.parametrize("name", ["three_cycle", "grid8", "erdos8", "tree7"])
def test_scaled_step_inequality(name):
    p = load_fixture(name)
    rng = np.random.default_rng(1)
    for _ in range(50):
        v = _random_in_V(p, rng)
        gamma = v - rng.uniform(0, 2, v.shape) * v
        alpha = rng.uniform(1.0, 10.0)
        if alpha == 1.0:
            continue
        lhs = alpha * operator_F(p, gamma)
        rhs = (alpha - 1) * v + operator_F(p, v - alpha * (v - gamma))
        assert np.all(lhs < rhs)
        assert np.all(operator_F(p, v) < v)


def test_iterate_F_counts(three_cycle):
    r = iterate_F(three_cycle, np.zeros(6), tol=1e-12)
    assert r.final_delta <= 1e-12 and r.iterations > 1


def test_analyze_report(three_cycle):
    rep = analyze(three_cycle)
    d = rep.as_dict()
    assert d["rho_R"] == pytest.approx(0.8, abs=1e-10)
    assert d["rho_A"] == pytest.approx(0.5, abs=1e-9)
    assert d["gamma_star_min"] == pytest.approx(1.25, abs=1e-12)
    assert d["witness_margin"] == pytest.approx(0.2, abs=1e-12)
    assert d["x_inf_residual"] <= 1e-12
    assert np.max(np.abs(z_fixed(three_cycle, compute_gamma_star(three_cycle).gamma_star).x
                         - direct_solve(three_cycle))) <= 1e-9
