import numpy as np
import pytest

from minsum.analysis import build_A_D, compute_gamma_star
from minsum.errors import BacktrackingWalk, EnumerationBudgetExceeded, InvalidWalk, NotWalkSummable
from minsum.generate import generate
from minsum.model import direct_solve, problem_from_edges
from minsum.walksum import (
    Walk,
    enumerate_walks,
    max_nb_depth,
    nb_sums_from,
    nu_weight,
    rho_weight,
    series_terms_for,
    truncated_series_solution,
    verify_nb_identity,
    verify_nb_identity_from,
    verify_self_return,
    walk_set_weight,
)

from conftest import WS_FIXTURES, load_fixture

SMALL = [name for name in WS_FIXTURES if load_fixture(name).n <= 8]


def test_rho_weight_examples(three_cycle, two_node):
    assert rho_weight(three_cycle, [2]) == 1.0
    assert rho_weight(three_cycle, [0, 1, 2]) == pytest.approx(0.16, abs=1e-16)
    assert rho_weight(two_node, [0, 1, 0]) == 0.25
    with pytest.raises(InvalidWalk):
        rho_weight(problem_from_edges(3, [(0, 1, -0.5), (1, 2, -0.5)], np.zeros(3)), [0, 2])
    with pytest.raises(InvalidWalk):
        rho_weight(two_node, [0, 5])
    with pytest.raises(InvalidWalk):
        Walk(())


def test_nu_weight_examples(three_cycle, path3):
    g = np.full(6, 1.25)
    assert nu_weight(three_cycle, g, [1]) == 1.0
    assert nu_weight(three_cycle, g, [0, 1, 2]) == pytest.approx(0.25, abs=1e-16)
    gp = compute_gamma_star(path3).gamma_star
    assert nu_weight(path3, gp, [0, 1, 2]) == pytest.approx(1 / 3, abs=1e-15)
    with pytest.raises(BacktrackingWalk):
        nu_weight(path3, gp, [0, 1, 0])


def test_enumerate_examples(path3, two_node, three_cycle):
    assert [w.vertices for w in enumerate_walks(path3, 0, 2, 2, nonbacktracking=True)] == [(0, 1, 2)]
    assert [w.vertices for w in enumerate_walks(two_node, 0, 0, 4)] == [(0,), (0, 1, 0), (0, 1, 0, 1, 0)]
    nb = [w.vertices for w in enumerate_walks(three_cycle, 0, 0, 3, nonbacktracking=True)]
    assert nb == [(0,), (0, 1, 2, 0), (0, 2, 1, 0)]


def test_enumeration_is_lexicographic():
    p = load_fixture("grid8")
    walks = [w.vertices for w in enumerate_walks(p, 0, 5, 5)]
    assert walks == sorted(walks)
    assert all(w.nonbacktracking for w in enumerate_walks(p, 0, 5, 5, nonbacktracking=True))


def test_enumeration_budget():
    p = load_fixture("grid16")
    with pytest.raises(EnumerationBudgetExceeded):
        next(enumerate_walks(p, 0, 1, 30))
    with pytest.raises(EnumerationBudgetExceeded):
        nb_sums_from(p, np.ones(p.num_directed), 0, 40)


def test_series_examples(three_cycle):
    x, bound = truncated_series_solution(three_cycle, 0)
    np.testing.assert_array_equal(x, three_cycle.h)
    T = series_terms_for(three_cycle, 1e-9)
    x, bound = truncated_series_solution(three_cycle, T)
    assert bound <= 1e-9
    assert np.max(np.abs(x - 5.0)) <= 2e-9
    x0, b0 = truncated_series_solution(three_cycle.with_h(np.zeros(3)), 10)
    assert np.all(x0 == 0) and b0 == 0


def test_series_regular_graph_bound_matches_simple_formula(three_cycle):
    _, bound = truncated_series_solution(three_cycle, 7)
    assert bound == pytest.approx(1.0 * 0.8**8 / 0.2, rel=1e-9)


@pytest.mark.parametrize("name", WS_FIXTURES)
def test_series_meets_its_bound(name):
    p = load_fixture(name)
    for tol in (1e-4, 1e-9):
        T = series_terms_for(p, tol)
        x, bound = truncated_series_solution(p, T)
        assert bound <= tol
        assert np.max(np.abs(x - direct_solve(p))) <= 2 * tol


def test_series_not_walk_summable():
    hot = problem_from_edges(3, [(0, 1, -0.6), (1, 2, -0.6), (0, 2, 0.6)], np.ones(3))
    with pytest.raises(NotWalkSummable):
        truncated_series_solution(hot, 3)


def test_nb_identity_path_example(path3):
    g = compute_gamma_star(path3).gamma_star
    rep = verify_nb_identity(path3, g, 0, 2, depth=4)
    assert rep.rhs == pytest.approx(0.5, abs=1e-15)
    assert rep.passed
    Ginv = np.linalg.inv(path3.dense())
    assert rep.lhs == pytest.approx(Ginv[0, 2], abs=1e-12)


def test_nb_identity_single_vertex():
    p = problem_from_edges(1, [], [1.0])
    rep = verify_nb_identity(p, np.zeros(0), 0, 0, depth=3)
    assert rep.lhs == 1.0 and rep.rhs == 1.0 and rep.passed


def test_nb_identity_three_cycle_depth_12(three_cycle):
    g = compute_gamma_star(three_cycle).gamma_star
    rep = verify_nb_identity(three_cycle, g, 0, 0, depth=12)
    assert rep.passed
    assert rep.discrepancy <= rep.lhs_bound + rep.rhs_bound + 1e-9


@pytest.mark.parametrize("name", SMALL)
def test_nb_identity_all_pairs(name):
    p = load_fixture(name)
    g = compute_gamma_star(p).gamma_star
    depth = max_nb_depth(p, budget=2 * 10**5, cap=60)
    for i in range(p.n):
        for rep in verify_nb_identity_from(p, g, i, depth):
            assert rep.passed, rep


@pytest.mark.parametrize("name", SMALL)
def test_nb_abs_sum_below_walk_sum(name):
    """sum |nu| over NB walks i->r is at most sum |rho| over all walks i->r."""
    p = load_fixture(name)
    g = compute_gamma_star(p).gamma_star
    depth = max_nb_depth(p, budget=10**5, cap=40)
    M = np.linalg.inv(np.eye(p.n) - p.abs_R())
    for i in range(p.n):
        _, abs_sums, _ = nb_sums_from(p, g, i, depth)
        assert np.all(abs_sums.sum(axis=0) <= M[i] + 1e-12)


@pytest.mark.parametrize("name", ["three_cycle", "two_node", "grid8", "erdos8"])
def test_matrix_power_identity(name):
    p = load_fixture(name)
    R = p.R()
    Rt = np.eye(p.n)
    for t in range(7):
        for i in range(p.n):
            for j in range(p.n):
                rep = walk_set_weight(p, i, j, t, exact_len=t)
                assert abs(rep.weight_sum - Rt[i, j]) <= 1e-12
        Rt = Rt @ R


def _nb_edge_walk_sum(p, g, first, last, length):
    u, k = int(p.src[first]), int(p.dst[first])
    i, j = int(p.src[last]), int(p.dst[last])
    total = 0.0
    for w in enumerate_walks(p, u, j, length, nonbacktracking=True):
        v = w.vertices
        if w.length == length and v[1] == k and v[-2] == i:
            total += nu_weight(p, g, w)
    return total


@pytest.mark.parametrize("p", [
    pytest.param(None, id="three_cycle"),
    pytest.param(7, id="random"),
])
def test_A_matrix_walk_identity(p, three_cycle):
    p = three_cycle if p is None else generate(6, "erdos", 0.8, "mixed", seed=p)
    g = compute_gamma_star(p).gamma_star
    ops = build_A_D(p, g)
    At = np.eye(p.num_directed)
    for t in range(5):
        M = At @ ops.D
        for a in range(p.num_directed):
            for b in range(p.num_directed):
                assert abs(M[a, b] - _nb_edge_walk_sum(p, g, b, a, t + 1)) <= 1e-12
        At = At @ ops.A


def test_self_return_tree_exact():
    p = load_fixture("tree7")
    g = compute_gamma_star(p).gamma_star
    i, j = p.directed_edges()[0]
    rep = verify_self_return(p, g, i, j, p.diameter)
    assert rep.max_error == 0.0 and rep.passed


def test_self_return_three_cycle(three_cycle):
    g = compute_gamma_star(three_cycle).gamma_star
    rep = verify_self_return(three_cycle, g, 0, 1, 40)
    assert rep.history[1] == pytest.approx(1 / 0.84, abs=1e-15)
    err = np.abs(np.array(rep.history) - 1.25)
    assert np.all(np.diff(err) <= 0)
    assert rep.passed
    r0 = verify_self_return(three_cycle, g, 0, 1, 0)
    assert r0.passed is None
    assert r0.max_error == pytest.approx(0.25, abs=1e-12)
