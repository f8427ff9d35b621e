"""Synchronous min-sum iteration on the (gamma, z) parameters."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .decomposition import EdgeParams
from .errors import IllPosed
from .model import QuadraticProblem, residual


@dataclass(frozen=True)
class SolverConfig:
    max_iter: int = 1000
    tol_gamma: float = 1e-10
    tol_z: float = 1e-10
    tol_residual: float = 1e-8

    def __post_init__(self):
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if min(self.tol_gamma, self.tol_z, self.tol_residual) <= 0:
            raise ValueError("tolerances must be positive")

    @classmethod
    def for_problem(cls, p: QuadraticProblem, **overrides) -> "SolverConfig":
        """Defaults scaled to the instance: 10 * n * diameter, floor 1000, cap 100000."""
        if "max_iter" not in overrides:
            overrides["max_iter"] = min(100_000, max(1000, 10 * p.n * p.diameter))
        return cls(**overrides)


class Status(enum.Enum):
    RUNNING = "running"
    CONVERGED = "converged"
    ILL_POSED = "ill-posed"
    MAX_ITER = "max-iter"


@dataclass
class SolverState:
    t: int
    params: EdgeParams
    x: np.ndarray | None
    status: Status
    ill_posed_edge: tuple | None = None
    ill_posed_at: int | None = None
    residual: float = float("nan")


@dataclass
class Trace:
    columns: tuple = ("t", "max_dgamma", "max_dz", "residual", "illposed")
    rows: list = field(default_factory=list)
    meta: object = None

    def column(self, name) -> np.ndarray:
        c = self.columns.index(name)
        return np.array([r[c] for r in self.rows], dtype=float)

    def core(self) -> list:
        """Rows restricted to the five synchronous columns."""
        return [tuple(r[:5]) for r in self.rows]


# --------------------------------------------------------------------------
def excluded_sums(p: QuadraticProblem, values) -> np.ndarray:
    """For every directed edge i->j, the sum of ``values[u->i]`` over u in N(i) \\ j."""
    return kernels.csr_gather_sum(p.nb_ptr, p.nb_col, p.nb_row, values)


def vertex_sums(p: QuadraticProblem, values) -> np.ndarray:
    """For every vertex j, the sum of ``values[i->j]`` over i in N(j)."""
    return kernels.csr_gather_sum(p.in_ptr, p.in_col, p.in_row, values)


@dataclass
class WellPosedness:
    edges: list  # directed edges whose update denominator is <= 0
    vertices: list  # vertices whose estimate is undefined

    @property
    def ok(self) -> bool:
        return not self.edges

    def __iter__(self):
        return iter(self.edges)

    def __len__(self):
        return len(self.edges)


def check_well_posed(p: QuadraticProblem, gamma) -> WellPosedness:
    g = np.asarray(gamma, dtype=float)
    w = p.coef2 * g
    bad_e = np.flatnonzero(excluded_sums(p, w) >= 1.0)
    bad_v = np.flatnonzero(vertex_sums(p, w) >= 1.0)
    edges = p.directed_edges()
    return WellPosedness([edges[k] for k in bad_e], bad_v.tolist())


def _denominators(p, gamma):
    return 1.0 - excluded_sums(p, p.coef2 * gamma)


def _first_bad(p, denom):
    bad = np.flatnonzero(denom <= 0.0)
    return None if bad.size == 0 else p.directed_edges()[int(bad[0])]


def gamma_step(p: QuadraticProblem, gamma) -> np.ndarray:
    """gamma'_ij = 1 / (1 - sum_{u in N(i)\\j} G_ui^2 gamma_ui)."""
    gamma = np.asarray(gamma, dtype=float)
    denom = _denominators(p, gamma)
    bad = _first_bad(p, denom)
    if bad is not None:
        raise IllPosed(bad)
    return 1.0 / denom


def z_step(p: QuadraticProblem, gamma, z) -> np.ndarray:
    """z'_ij = G_ij (h_i - sum_{u in N(i)\\j} z_ui) / (1 - sum G_ui^2 gamma_ui), pre-step gamma."""
    gamma = np.asarray(gamma, dtype=float)
    z = np.asarray(z, dtype=float)
    denom = _denominators(p, gamma)
    bad = _first_bad(p, denom)
    if bad is not None:
        raise IllPosed(bad)
    return p.gamma_dir * (p.h[p.src] - excluded_sums(p, z)) / denom


def _joint_step(p, gamma, z):
    """Both updates from one pass over the denominators; None marks ill-posed."""
    denom = _denominators(p, gamma)
    bad = np.flatnonzero(denom <= 0.0)
    if bad.size:
        return None, None, int(bad[0])
    g_new = 1.0 / denom
    z_new = p.gamma_dir * (p.h[p.src] - excluded_sums(p, z)) / denom
    return g_new, z_new, -1


def estimate(p: QuadraticProblem, gamma, z) -> np.ndarray:
    """Running estimate x_j = (h_j - sum_i z_ij) / (1 - sum_i G_ij^2 gamma_ij).

    Vertices whose denominator is nonpositive come back as NaN.
    """
    gamma = np.asarray(gamma, dtype=float)
    z = np.asarray(z, dtype=float)
    denom = 1.0 - vertex_sums(p, p.coef2 * gamma)
    num = p.h - vertex_sums(p, z)
    x = np.full(p.n, np.nan)
    ok = denom > 0.0
    x[ok] = num[ok] / denom[ok]
    return x


def _maxabs(a) -> float:
    return float(np.max(np.abs(a))) if a.size else 0.0


def run_sync(p: QuadraticProblem, init: EdgeParams | None = None, cfg: SolverConfig | None = None):
    """Iterate the joint gamma/z update from ``init`` until the parameter
    deltas fall under tolerance, an update becomes ill-posed, or
    ``cfg.max_iter`` iterations have run.

    Trace row ``t`` describes the update from iterate ``t`` to ``t + 1``.
    """
    init = init or EdgeParams.zeros(p)
    cfg = cfg or SolverConfig.for_problem(p)
    gamma = np.array(init.gamma, dtype=float)
    z = np.array(init.z, dtype=float)
    trace = Trace()
    status = Status.MAX_ITER
    bad_edge = bad_t = None
    t = 0
    while t < cfg.max_iter:
        g_new, z_new, bad = _joint_step(p, gamma, z)
        if bad >= 0:
            trace.rows.append((t, float("nan"), float("nan"), float("nan"), True))
            status, bad_edge, bad_t = Status.ILL_POSED, p.directed_edges()[bad], t
            break
        dg = _maxabs(g_new - gamma)
        dz = _maxabs(z_new - z)
        gamma, z = g_new, z_new
        x = estimate(p, gamma, z)
        res = residual(p, x) if np.all(np.isfinite(x)) else float("nan")
        trace.rows.append((t, dg, dz, res, False))
        t += 1
        if dg <= cfg.tol_gamma and dz <= cfg.tol_z:
            status = Status.CONVERGED
            break
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


def gamma_history(p: QuadraticProblem, gamma0, steps: int) -> np.ndarray:
    """Stack of gamma^(0..steps) under repeated gamma_step."""
    out = [np.asarray(gamma0, dtype=float)]
    for _ in range(steps):
        out.append(gamma_step(p, out[-1]))
    return np.array(out)
