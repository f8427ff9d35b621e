import numpy as np
import pytest

from minsum.async_engine import ASYNC_COLUMNS, AsyncConfig, run_async, validate_schedule
from minsum.decomposition import EdgeParams, construct_witness
from minsum.engine import Status, run_sync
from minsum.model import direct_solve

from conftest import WS_FIXTURES, load_fixture


def test_degenerate_schedule_matches_sync(three_cycle):
    s, t = run_sync(three_cycle)
    sa, ta = run_async(three_cycle, cfg=AsyncConfig(activation_prob=1.0, max_delay=0))
    assert ta.core() == t.core()
    np.testing.assert_array_equal(sa.x, s.x)
    assert sa.t == s.t and sa.status is s.status


@pytest.mark.parametrize("name", WS_FIXTURES)
def test_degenerate_schedule_matches_sync_everywhere(name):
    p = load_fixture(name)
    rng = np.random.default_rng(0)
    init = EdgeParams(rng.uniform(0, 1, p.num_directed) * construct_witness(p).v,
                      rng.uniform(-1, 1, p.num_directed))
    _, t = run_sync(p, init)
    _, ta = run_async(p, init, AsyncConfig(activation_prob=1.0, max_delay=0))
    assert ta.core() == t.core()


def test_three_cycle_converges_with_delays(three_cycle):
    x = []
    traces = []
    for seed in (1, 2):
        s, tr = run_async(three_cycle, cfg=AsyncConfig(seed=seed, activation_prob=0.5, max_delay=3))
        assert s.status is Status.CONVERGED
        assert np.max(np.abs(s.x - 5.0)) <= 1e-6
        x.append(s.x)
        traces.append(tr.rows)
    assert traces[0] != traces[1]
    assert np.max(np.abs(x[0] - x[1])) <= 1e-6


def test_deterministic(three_cycle):
    cfg = AsyncConfig(seed=5, activation_prob=0.4, max_delay=4)
    a = run_async(three_cycle, cfg=cfg)[1].rows
    b = run_async(three_cycle, cfg=cfg)[1].rows
    assert repr(a) == repr(b)


def test_trace_columns(three_cycle):
    _, tr = run_async(three_cycle, cfg=AsyncConfig(seed=1, max_delay=2))
    assert tr.columns == ASYNC_COLUMNS
    ticks = tr.column("tick")
    np.testing.assert_array_equal(ticks, np.arange(len(ticks)))
    st = tr.column("max_staleness")
    assert np.all(st >= 0) and np.all(st <= tr.meta.window + 2)


def test_full_activation_staleness_equals_delay(three_cycle):
    s, tr = run_async(three_cycle, cfg=AsyncConfig(seed=3, activation_prob=1.0, max_delay=4))
    rep = validate_schedule(tr.meta)
    assert rep.ok
    assert rep.max_staleness == 4


def test_forced_activations_are_reported(three_cycle):
    cfg = AsyncConfig(seed=0, activation_prob=0.05, max_delay=1, activation_window=3)
    s, tr = run_async(three_cycle, cfg=cfg)
    rep = validate_schedule(tr.meta)
    assert rep.ok and rep.forced_activations > 0
    assert any("forced" in note for note in rep.notes)
    assert s.status is Status.CONVERGED


@pytest.mark.parametrize("name", WS_FIXTURES)
def test_schedule_audit(name):
    p = load_fixture(name)
    s, tr = run_async(p, cfg=AsyncConfig(seed=4, activation_prob=0.3, max_delay=5))
    rep = validate_schedule(tr.meta)
    assert rep.ok
    assert rep.undelivered == 0 and rep.late_messages == 0 and not rep.window_violations
    assert rep.max_staleness <= tr.meta.window + 5


def test_audit_flags_violations(three_cycle):
    _, tr = run_async(three_cycle, cfg=AsyncConfig(seed=1, max_delay=2))
    meta = tr.meta
    meta.window = 0
    assert not validate_schedule(meta).ok
    meta.window = 10**6
    meta.max_delay = -1
    assert validate_schedule(meta).late_messages > 0


@pytest.mark.parametrize("name", ["three_cycle", "grid8", "cycle6_mixed"])
def test_delivered_values_have_provenance(name):
    p = load_fixture(name)
    s, tr = run_async(p, cfg=AsyncConfig(seed=9, activation_prob=0.5, max_delay=5), history=True)
    hist = tr.meta.gamma_history
    n_checked = 0
    for (tick, versions), (edges, vers, g) in zip(tr.meta.deliveries, tr.meta.provenance):
        assert np.all(vers <= tick) and np.all(vers >= 1)
        for e, v, val in zip(edges, vers, g):
            assert hist[v][e] == val
            n_checked += 1
    assert n_checked == tr.meta.sent


@pytest.mark.parametrize("name", WS_FIXTURES)
def test_gamma_stays_below_witness(name):
    p = load_fixture(name)
    v = construct_witness(p).v
    for seed in range(3):
        _, tr = run_async(p, cfg=AsyncConfig(seed=seed, activation_prob=0.3, max_delay=5), history=True)
        H = np.array(tr.meta.gamma_history)
        assert np.all(H[1:][H[1:] != 0] > 0)
        assert np.all(H < v)


@pytest.mark.parametrize("name", WS_FIXTURES)
def test_async_matches_sync(name):
    p = load_fixture(name)
    s, _ = run_sync(p)
    for seed in range(3):
        sa, _ = run_async(p, cfg=AsyncConfig(seed=seed, activation_prob=0.5, max_delay=3))
        assert sa.status is Status.CONVERGED
        assert np.max(np.abs(sa.x - s.x)) <= 1e-6
        assert np.max(np.abs(sa.x - direct_solve(p))) <= 1e-6


def test_ill_posed_async(three_cycle):
    s, tr = run_async(three_cycle, EdgeParams(np.full(6, 7.0), np.zeros(6)),
                      AsyncConfig(seed=0, activation_prob=1.0))
    assert s.status is Status.ILL_POSED and s.ill_posed_at == 0


def test_max_ticks(three_cycle):
    s, tr = run_async(three_cycle, cfg=AsyncConfig(seed=0, max_ticks=5))
    assert s.status is Status.MAX_ITER and len(tr.rows) == 5


@pytest.mark.parametrize("kw", [
    dict(activation_prob=0.0), dict(activation_prob=1.5), dict(max_delay=-1),
    dict(max_ticks=0), dict(seed=-1), dict(tol_z=0.0), dict(activation_window=0),
])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        AsyncConfig(**kw)
