"""Walk-sum oracles: explicit walk enumeration checked against matrix algebra.

With ``R = I - Gamma``, the rho-weight of a walk is the product of ``R``
entries along it, and the nu-weight multiplies in ``gamma*`` per step.
Infinite walk sets are truncated; every truncation comes with a rigorous
tail bound so that comparisons can be made with an honest tolerance.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from . import kernels
from .analysis import build_A_D
from .engine import gamma_step
from .errors import (
    BacktrackingWalk,
    EnumerationBudgetExceeded,
    InvalidWalk,
    NotWalkSummable,
)
from .model import QuadraticProblem
from .spectral import perron

BUDGET = 10**7


@dataclass(frozen=True)
class Walk:
    vertices: tuple

    def __post_init__(self):
        object.__setattr__(self, "vertices", tuple(int(v) for v in self.vertices))
        if not self.vertices:
            raise InvalidWalk("a walk has at least one vertex")

    @property
    def length(self) -> int:
        return len(self.vertices) - 1

    @property
    def nonbacktracking(self) -> bool:
        v = self.vertices
        return all(v[k - 1] != v[k + 1] for k in range(1, len(v) - 1))

    def __len__(self):
        return self.length


@dataclass
class WalkReport:
    count: int
    weight_sum: float
    truncation_bound: float
    abs_weight_sum: float = 0.0


def _as_walk(w) -> Walk:
    return w if isinstance(w, Walk) else Walk(tuple(w))


def _edge_ids(p: QuadraticProblem, walk: Walk) -> list:
    v = walk.vertices
    for a in v:
        if not 0 <= a < p.n:
            raise InvalidWalk(f"vertex {a} out of range")
    try:
        return [p.directed_index[(v[k], v[k + 1])] for k in range(walk.length)]
    except KeyError as exc:
        raise InvalidWalk(f"consecutive vertices {exc.args[0]} are not adjacent") from None


def rho_weight(p: QuadraticProblem, w) -> float:
    """Product of R entries along the walk (1 for a single vertex)."""
    walk = _as_walk(w)
    out = 1.0
    for k in _edge_ids(p, walk):
        out *= -p.gamma_dir[k]
    return out


def nu_weight(p: QuadraticProblem, gamma_star, w) -> float:
    """Product of gamma*_e R_e along a non-backtracking walk."""
    walk = _as_walk(w)
    ids = _edge_ids(p, walk)
    if not walk.nonbacktracking:
        raise BacktrackingWalk(f"{walk.vertices} reverses an edge")
    g = np.asarray(gamma_star, dtype=float)
    out = 1.0
    for k in ids:
        out *= g[k] * -p.gamma_dir[k]
    return out


def _check_budget(p: QuadraticProblem, max_len: int, nonbacktracking: bool, budget: int):
    dmax = int(p.degree.max()) if p.n else 0
    branching = max(1, dmax - 1 if nonbacktracking else dmax)
    if max_len > 0 and max_len * math.log(branching) > math.log(budget):
        raise EnumerationBudgetExceeded(
            f"{branching}^{max_len} walks exceeds the enumeration budget of {budget}"
        )


def enumerate_walks(p: QuadraticProblem, i: int, j: int, max_len: int,
                    nonbacktracking: bool = False, budget: int = BUDGET) -> Iterator[Walk]:
    """All walks from ``i`` to ``j`` with at most ``max_len`` edges, in
    lexicographic order of their vertex sequences."""
    _check_budget(p, max_len, nonbacktracking, budget)
    nbrs = [p.neighbors(v) for v in range(p.n)]
    path = [int(i)]

    def rec():
        if path[-1] == j:
            yield Walk(tuple(path))
        if len(path) - 1 == max_len:
            return
        last = path[-1]
        prev = path[-2] if len(path) >= 2 else -1
        for u in nbrs[last]:
            if nonbacktracking and u == prev:
                continue
            path.append(u)
            yield from rec()
            path.pop()

    yield from rec()


def walk_set_weight(p: QuadraticProblem, i: int, j: int, max_len: int,
                    gamma_star=None, exact_len: int | None = None) -> WalkReport:
    """Sum rho-weights (or nu-weights over non-backtracking walks when
    ``gamma_star`` is given) of enumerated walks from ``i`` to ``j``."""
    nb = gamma_star is not None
    total = abs_total = 0.0
    count = 0
    for w in enumerate_walks(p, i, j, max_len, nonbacktracking=nb):
        if exact_len is not None and w.length != exact_len:
            continue
        wt = nu_weight(p, gamma_star, w) if nb else rho_weight(p, w)
        total += wt
        abs_total += abs(wt)
        count += 1
    return WalkReport(count, total, float("nan"), abs_total)


# --------------------------------------------------------------------------
def _series_constants(p: QuadraticProblem):
    res = perron(p.abs_R())
    hi = res.upper
    if hi >= 1.0:
        raise NotWalkSummable(res.rho)
    u = res.vector if res.vector is not None else np.ones(p.n)
    return hi, u


def _series(p: QuadraticProblem, h, T: int, hi: float, u: np.ndarray):
    h = np.asarray(h, dtype=float)
    term = h.copy()
    total = h.copy()
    for _ in range(T):
        term = term - p.matvec(term)  # R term
        total += term
    # |R|^t |h| <= hi^t * max(|h|/u) * u componentwise (Collatz-Wielandt)
    c = float(np.max(np.abs(h) / u)) if p.n else 0.0
    bound = c * float(np.max(u)) * hi ** (T + 1) / (1.0 - hi)
    return total, bound


def truncated_series_solution(p: QuadraticProblem, T: int):
    """``sum_{t<=T} R^t h`` and an infinity-norm bound on the neglected tail.

    The bound uses the Perron vector ``u`` of |R|; for regular graphs
    (``u`` constant) it is ``||h|| rho^(T+1) / (1 - rho)``.
    """
    hi, u = _series_constants(p)
    return _series(p, p.h, T, hi, u)


def series_terms_for(p: QuadraticProblem, tol: float, h=None) -> int:
    """Smallest T whose series tail bound is at most ``tol``."""
    hi, u = _series_constants(p)
    h = p.h if h is None else np.asarray(h, dtype=float)
    c = float(np.max(np.abs(h) / u)) * float(np.max(u))
    if c == 0.0 or hi == 0.0:
        return 0
    T = math.ceil(math.log(tol * (1.0 - hi) / c) / math.log(hi)) - 1
    return max(T, 0)


@dataclass
class IdentityReport:
    i: int
    r: int
    lhs: float
    rhs: float
    discrepancy: float
    lhs_bound: float
    rhs_bound: float
    walks: int
    depth: int
    series_terms: int
    passed: bool


def nb_sums_from(p: QuadraticProblem, gamma_star, i: int, depth: int, budget: int = BUDGET):
    """nu-weight sums of non-backtracking walks starting at ``i``, by length
    and endpoint: returns ``(sums, abs_sums, count)`` with shape
    ``(depth + 1, n)``; length 0 is the single walk ``{i}``."""
    _check_budget(p, depth, True, budget)
    g = np.asarray(gamma_star, dtype=float)
    weight = g * -p.gamma_dir
    first = p.out_col[p.out_ptr[i]:p.out_ptr[i + 1]]
    sums, abs_sums, count = kernels.nb_walk_sums(
        p.succ_ptr, p.succ_col, p.dst, weight, first, depth, p.n
    )
    sums[0, i] += 1.0
    abs_sums[0, i] += 1.0
    return sums, abs_sums, count + 1


def nb_tail_bounds(p: QuadraticProblem, gamma_star, i: int, depth: int) -> np.ndarray:
    """Per endpoint, a bound on sum |nu(w)| over NB walks from ``i`` longer than ``depth``."""
    if p.num_directed == 0:
        return np.zeros(p.n)
    ops = build_A_D(p, gamma_star)
    absA = np.abs(ops.A)
    v1 = np.zeros(p.num_directed)
    first = p.out_col[p.out_ptr[i]:p.out_ptr[i + 1]]
    v1[first] = np.abs(np.diag(ops.D))[first]
    # mass on walks of length >= depth + 1 = |A|^depth (I - |A|)^{-1} v1
    s = np.linalg.solve(np.eye(p.num_directed) - absA, v1)
    for _ in range(depth):
        s = absA @ s
    return np.bincount(p.dst, weights=s, minlength=p.n)


def verify_nb_identity_from(p: QuadraticProblem, gamma_star, i: int, depth: int,
                            series_tol: float = 1e-13, slack: float = 1e-9) -> list:
    """Check ``rho(W_{i->r}) = nu(W^nb_{i->r}) / (1 - sum_u R_ur^2 gamma*_ur)`` for every ``r``."""
    g = np.asarray(gamma_star, dtype=float)
    e_i = np.zeros(p.n)
    e_i[i] = 1.0
    hi, u = _series_constants(p)
    T = series_terms_for(p, series_tol, h=e_i)
    lhs, lhs_bound = _series(p, e_i, T, hi, u)
    sums, _, count = nb_sums_from(p, g, i, depth)
    nb = sums.sum(axis=0)
    tails = nb_tail_bounds(p, g, i, depth)
    denom = 1.0 - np.bincount(p.dst, weights=p.coef2 * g, minlength=p.n)
    out = []
    for r in range(p.n):
        rhs = nb[r] / denom[r]
        rb = tails[r] / denom[r]
        disc = abs(lhs[r] - rhs)
        out.append(IdentityReport(
            i=i, r=r, lhs=float(lhs[r]), rhs=float(rhs), discrepancy=float(disc),
            lhs_bound=float(lhs_bound), rhs_bound=float(rb), walks=int(count), depth=depth,
            series_terms=T, passed=bool(disc <= lhs_bound + rb + slack),
        ))
    return out


def verify_nb_identity(p: QuadraticProblem, gamma_star, i: int, r: int, depth: int, **kw) -> IdentityReport:
    return verify_nb_identity_from(p, gamma_star, i, depth, **kw)[r]


def max_nb_depth(p: QuadraticProblem, budget: int = 2 * 10**6, cap: int = 40) -> int:
    """Deepest NB enumeration whose walk count stays within ``budget``."""
    dmax = int(p.degree.max()) if p.n else 0
    b = max(1, dmax - 1)
    if b == 1:
        return cap
    return max(1, min(cap, int(math.log(budget / max(dmax, 1)) / math.log(b))))


@dataclass
class SelfReturnReport:
    i: int
    j: int
    depth: int
    value: float
    error: float
    max_error: float
    history: list = field(default_factory=list)
    passed: bool | None = None


def verify_self_return(p: QuadraticProblem, gamma_star, i: int, j: int, depth: int,
                       tol: float = 1e-9) -> SelfReturnReport:
    """Computation-tree recursion for self-returning walk sums avoiding an edge.

    ``g^(0) = 1`` and ``g^(d)_ij = 1 / (1 - sum_{u in N(i)\\j} R_ui^2 g^(d-1)_ui)``
    should approach ``gamma*_ij``.
    """
    g_star = np.asarray(gamma_star, dtype=float)
    k = p.index_of(i, j)
    g = np.ones(p.num_directed)
    hist = [float(g[k])]
    for _ in range(depth):
        g = gamma_step(p, g)
        hist.append(float(g[k]))
    err = abs(g[k] - g_star[k])
    max_err = float(np.max(np.abs(g - g_star))) if g.size else 0.0
    return SelfReturnReport(
        i=i, j=j, depth=depth, value=float(g[k]), error=float(err), max_error=max_err,
        history=hist, passed=None if depth == 0 else bool(max_err <= tol),
    )
