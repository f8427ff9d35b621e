"""Totally asynchronous min-sum, simulated tick by tick.

Vertex ``i`` owns the parameters of its outgoing directed edges.  At each
tick every vertex activates independently with probability
``activation_prob``; an active vertex recomputes its outgoing parameters from
the freshest values it has *received* and sends the results to the
corresponding neighbors with a random delay in ``[0, max_delay]`` ticks.
Messages may overtake each other; receivers keep the one with the latest
version.  A round-robin fallback forces any vertex that has been idle for
``ceil(2 / activation_prob) * n`` ticks to activate.

Version numbers follow the synchronous convention: values computed at tick
``t`` are iterate ``t + 1``.  With ``activation_prob = 1`` and
``max_delay = 0`` the simulation performs exactly the synchronous iteration.
"""
from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from .decomposition import EdgeParams
from .engine import SolverState, Status, Trace, estimate, excluded_sums
from .model import QuadraticProblem, residual

ASYNC_COLUMNS = ("t", "max_dgamma", "max_dz", "residual", "illposed", "tick", "activated", "max_staleness")


@dataclass(frozen=True)
class AsyncConfig:
    seed: int = 0
    activation_prob: float = 0.5
    max_delay: int = 0
    max_ticks: int = 200_000
    tol_gamma: float = 1e-10
    tol_z: float = 1e-10
    tol_residual: float = 1e-8
    activation_window: int | None = None  # default ceil(2 / activation_prob) * n

    def __post_init__(self):
        if not 0.0 < self.activation_prob <= 1.0:
            raise ValueError("activation_prob must lie in (0, 1]")
        if self.max_delay < 0:
            raise ValueError("max_delay must be >= 0")
        if self.max_ticks < 1:
            raise ValueError("max_ticks must be >= 1")
        if self.seed < 0:
            raise ValueError("seed must be nonnegative")
        if min(self.tol_gamma, self.tol_z, self.tol_residual) <= 0:
            raise ValueError("tolerances must be positive")
        if self.activation_window is not None and self.activation_window < 1:
            raise ValueError("activation_window must be >= 1")

    def window(self, n: int) -> int:
        """Ticks within which every vertex is guaranteed to activate."""
        if self.activation_window is not None:
            return self.activation_window
        return math.ceil(2.0 / self.activation_prob) * n


@dataclass
class ChannelState:
    """Receiver-side view of every directed edge plus in-flight messages.

    ``version[k]`` is tau for edge ``k``: the iterate index of the freshest
    value received so far.
    """

    version: np.ndarray
    gamma: np.ndarray
    z: np.ndarray
    in_flight: dict = field(default_factory=lambda: defaultdict(list))
    sent: int = 0
    delivered: int = 0

    @classmethod
    def initial(cls, init: EdgeParams) -> "ChannelState":
        m = init.gamma.shape[0]
        return cls(np.zeros(m, dtype=np.int64), np.array(init.gamma), np.array(init.z))

    def send(self, edges, version, gamma, z, arrive):
        for tick in np.unique(arrive):
            sel = arrive == tick
            self.in_flight[int(tick)].append((edges[sel], np.full(int(sel.sum()), version), gamma[sel], z[sel]))
        self.sent += edges.shape[0]

    def deliver(self, tick):
        """Apply messages arriving at ``tick``; returns (edges, versions, gamma, z) delivered."""
        batch = self.in_flight.pop(tick, None)
        if not batch:
            return None
        e = np.concatenate([b[0] for b in batch])
        v = np.concatenate([b[1] for b in batch])
        g = np.concatenate([b[2] for b in batch])
        z = np.concatenate([b[3] for b in batch])
        self.delivered += e.shape[0]
        order = np.lexsort((v, e))
        es, vs = e[order], v[order]
        last = np.r_[es[1:] != es[:-1], True]
        pick = order[last]
        newer = v[pick] > self.version[e[pick]]
        pick = pick[newer]
        self.version[e[pick]] = v[pick]
        self.gamma[e[pick]] = g[pick]
        self.z[e[pick]] = z[pick]
        return e, v, g, z

    def pending(self) -> int:
        return sum(b[0].shape[0] for msgs in self.in_flight.values() for b in msgs)


@dataclass
class ScheduleLog:
    n: int
    window: int
    max_delay: int
    ticks: int = 0
    activations: list = field(default_factory=list)  # per tick: active vertex ids
    forced: list = field(default_factory=list)  # per tick: forced vertex ids
    deliveries: list = field(default_factory=list)  # (tick, versions) per delivery batch
    max_staleness: int = 0
    sent: int = 0
    delivered: int = 0
    gamma_history: list | None = None  # gamma after each tick (index = version)
    provenance: list | None = None  # (edges, versions, gamma) of every delivery


def run_async(p: QuadraticProblem, init: EdgeParams | None = None, cfg: AsyncConfig | None = None,
              history: bool = False):
    """Simulate the asynchronous iteration; returns ``(SolverState, Trace)``.

    Converged when, over one *round*, no parameter moved by more than the
    tolerances.  A round ends once every vertex has activated at a tick at
    least ``max_delay`` ticks after the round began, so each recomputation
    in the round saw information no older than the round's start.
    """
    init = init or EdgeParams.zeros(p)
    cfg = cfg or AsyncConfig()
    n = p.n
    rng = np.random.default_rng(cfg.seed)
    W = cfg.window(n)
    D = cfg.max_delay
    gamma = np.array(init.gamma, dtype=float)
    z = np.array(init.z, dtype=float)
    chan = ChannelState.initial(init)
    log = ScheduleLog(n=n, window=W, max_delay=D)
    if history:
        log.gamma_history = [gamma.copy()]
        log.provenance = []
    trace = Trace(columns=ASYNC_COLUMNS, meta=log)

    last_act = np.full(n, -1, dtype=np.int64)
    used_in = p.degree[p.dst] >= 2  # in-edge u->i feeds some update of i
    hsrc = p.h[p.src]
    round_start, fresh = 0, np.zeros(n, dtype=bool)
    round_dg = round_dz = 0.0
    status = Status.MAX_ITER
    bad_edge = bad_t = None
    t = 0
    while t < cfg.max_ticks:
        got = chan.deliver(t)
        if got is not None:
            log.deliveries.append((t, got[1]))
            if history:
                log.provenance.append(got[:3])
        active = rng.random(n) < cfg.activation_prob
        forced = (~active) & (t - last_act >= W)
        active |= forced
        rows = np.flatnonzero(active[p.src])

        denom = 1.0 - excluded_sums(p, p.coef2 * chan.gamma)
        bad = rows[denom[rows] <= 0.0]
        stale_edges = active[p.dst] & used_in
        stale = int(np.max(t - chan.version[stale_edges])) if stale_edges.any() else 0
        log.activations.append(np.flatnonzero(active))
        log.forced.append(np.flatnonzero(forced))
        log.max_staleness = max(log.max_staleness, stale)
        if bad.size:
            trace.rows.append((t, float("nan"), float("nan"), float("nan"), True, t, int(active.sum()), stale))
            status, bad_edge, bad_t = Status.ILL_POSED, p.directed_edges()[int(bad[0])], t
            t += 1
            break
        zsum = excluded_sums(p, chan.z)
        g_new = 1.0 / denom[rows]
        z_new = p.gamma_dir[rows] * (hsrc[rows] - zsum[rows]) / denom[rows]
        dg = float(np.max(np.abs(g_new - gamma[rows]))) if rows.size else 0.0
        dz = float(np.max(np.abs(z_new - z[rows]))) if rows.size else 0.0
        gamma[rows] = g_new
        z[rows] = z_new
        if history:
            log.gamma_history.append(gamma.copy())
        x = estimate(p, gamma, z)
        res = residual(p, x) if np.all(np.isfinite(x)) else float("nan")
        trace.rows.append((t, dg, dz, res, False, t, int(active.sum()), stale))

        if rows.size:
            delays = rng.integers(0, D + 1, size=rows.size) if D else np.zeros(rows.size, dtype=np.int64)
            chan.send(rows, t + 1, g_new, z_new, t + 1 + delays)
        last_act[active] = t

        round_dg = max(round_dg, dg)
        round_dz = max(round_dz, dz)
        if t >= round_start + D:
            fresh |= active
        t += 1
        if fresh.all():
            if round_dg <= cfg.tol_gamma and round_dz <= cfg.tol_z:
                status = Status.CONVERGED
                break
            round_start, round_dg, round_dz = t, 0.0, 0.0
            fresh[:] = False

    # let every in-flight message land; parameters are unaffected
    for tick in sorted(chan.in_flight):
        got = chan.deliver(tick)
        if got is not None:
            log.deliveries.append((tick, got[1]))
            if history:
                log.provenance.append(got[:3])
    log.ticks = t
    log.sent, log.delivered = chan.sent, chan.delivered

    x = estimate(p, gamma, z)
    xs = x if np.all(np.isfinite(x)) else None
    state = SolverState(
        t=t,
        params=EdgeParams(gamma, z),
        x=xs,
        status=status,
        ill_posed_edge=bad_edge,
        ill_posed_at=bad_t,
        residual=residual(p, xs) if xs is not None else float("nan"),
    )
    return state, trace


@dataclass
class ScheduleReport:
    ok: bool
    window_violations: list
    late_messages: int
    undelivered: int
    max_staleness: int
    forced_activations: int
    notes: list = field(default_factory=list)


def validate_schedule(meta: ScheduleLog) -> ScheduleReport:
    """Audit a finished run's schedule against the total-asynchronism guarantees."""
    T = meta.ticks
    last = np.full(meta.n, -1, dtype=np.int64)
    violations = []
    for tick, act in enumerate(meta.activations):
        gap = tick - last[act]
        for v in act[gap > meta.window]:
            violations.append((int(v), int(last[v]), tick))
        last[act] = tick
    for v in np.flatnonzero(T - last > meta.window):
        violations.append((int(v), int(last[v]), T))
    late = 0
    for tick, versions in meta.deliveries:
        delay = tick - versions
        late += int(np.sum((delay < 0) | (delay > meta.max_delay)))
    undelivered = meta.sent - meta.delivered
    forced = int(sum(f.shape[0] for f in meta.forced))
    notes = []
    if forced:
        notes.append(f"round-robin fallback forced {forced} activations")
    return ScheduleReport(
        ok=not violations and late == 0 and undelivered == 0,
        window_violations=violations,
        late_messages=late,
        undelivered=undelivered,
        max_staleness=meta.max_staleness,
        forced_activations=forced,
        notes=notes,
    )
