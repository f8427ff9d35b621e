"""Quadratic problems ``min 1/2 x'Gx - h'x`` on sparse graphs.

A :class:`RawProblem` is what a user supplies (any positive diagonal).  It is
rescaled by :func:`normalize` into a :class:`QuadraticProblem` with unit
diagonal, which every solver in the package works on.  Directed-edge
quantities are stored in flat arrays using the index bijection

    undirected edge e = (i, j), i < j   ->   2e = i->j,  2e + 1 = j->i

so the reverse of directed edge ``k`` is ``k ^ 1``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.csgraph

from . import kernels
from .errors import (
    DisconnectedGraph,
    LengthMismatch,
    NonPositiveDiagonal,
    NotPositiveDefinite,
    ParseError,
)

PD_TOL = 1e-12


def fmt(x: float) -> str:
    """Serialize a float with 17 significant digits (round-trips exactly)."""
    return "%.17g" % x


@dataclass(frozen=True)
class RawProblem:
    """Symmetric matrix given by its upper triangle plus a linear term."""

    n: int
    entries: list  # (i, j, value) with i <= j
    h: np.ndarray

    def dense(self) -> np.ndarray:
        G = np.zeros((self.n, self.n))
        for i, j, v in self.entries:
            G[i, j] = v
            G[j, i] = v
        return G


@dataclass(frozen=True)
class NormalizationRecord:
    d: np.ndarray  # original diagonal entries


class QuadraticProblem:
    """Unit-diagonal quadratic objective on a connected graph.

    Immutable after construction; all arrays are marked read-only.
    """

    def __init__(self, n: int, edges, coupling, h):
        self.n = int(n)
        edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        coupling = np.asarray(coupling, dtype=float).reshape(-1)
        if edges.shape[0] != coupling.shape[0]:
            raise LengthMismatch("edges and coupling differ in length")
        h = np.asarray(h, dtype=float).reshape(-1)
        if h.shape[0] != self.n:
            raise LengthMismatch(f"h has length {h.shape[0]}, expected {self.n}")
        lo = np.minimum(edges[:, 0], edges[:, 1])
        hi = np.maximum(edges[:, 0], edges[:, 1])
        if np.any(lo == hi):
            raise ValueError("self-loops are not edges; the diagonal is implicit")
        if np.any(coupling == 0.0):
            raise ValueError("zero couplings must be pruned before construction")
        order = np.lexsort((hi, lo))
        self.edges = np.stack([lo[order], hi[order]], axis=1)
        self.coupling = coupling[order]
        if self.edges.shape[0] > 1:
            dup = np.all(self.edges[1:] == self.edges[:-1], axis=1)
            if np.any(dup):
                raise ValueError("duplicate edge")
        self.h = h.copy()
        self._build_topology()
        for a in (self.edges, self.coupling, self.h):
            a.setflags(write=False)

    # -- construction ---------------------------------------------------
    def _build_topology(self):
        n, E = self.n, self.edges.shape[0]
        m = 2 * E
        src = np.empty(m, dtype=np.int64)
        dst = np.empty(m, dtype=np.int64)
        src[0::2], dst[0::2] = self.edges[:, 0], self.edges[:, 1]
        src[1::2], dst[1::2] = self.edges[:, 1], self.edges[:, 0]
        self.src, self.dst = src, dst
        self.rev = np.arange(m, dtype=np.int64) ^ 1
        self.gamma_dir = np.repeat(self.coupling, 2)  # Gamma_ij for directed edge {i,j}
        self.coef2 = self.gamma_dir**2

        # incoming edges of each vertex, sorted by (dst, src)
        in_col = np.lexsort((src, dst)).astype(np.int64)
        deg = np.bincount(dst, minlength=n).astype(np.int64)
        in_ptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(deg, out=in_ptr[1:])
        self.degree = deg
        self.in_ptr, self.in_col = in_ptr, in_col
        self.in_row = np.repeat(np.arange(n, dtype=np.int64), deg)
        out_col = np.lexsort((dst, src)).astype(np.int64)
        self.out_ptr, self.out_col = in_ptr.copy(), out_col  # same degrees

        # predecessors: row k = i->j holds u->i for u in N(i) \ j
        self.nb_ptr, self.nb_col, self.nb_row = self._exclude_reverse(src, in_ptr, in_col)
        # successors: row k = a->b holds b->c for c in N(b) \ a
        self.succ_ptr, self.succ_col, _ = self._exclude_reverse(dst, in_ptr, out_col)

        for a in (src, dst, self.rev, self.gamma_dir, self.coef2, deg, in_ptr, in_col,
                  self.in_row, self.out_ptr, out_col, self.nb_ptr, self.nb_col,
                  self.nb_row, self.succ_ptr, self.succ_col):
            a.setflags(write=False)

    def _exclude_reverse(self, pivot, ptr, col):
        m = pivot.shape[0]
        lens = self.degree[pivot]
        rows = np.repeat(np.arange(m, dtype=np.int64), lens)
        starts = ptr[pivot]
        offs = np.arange(rows.shape[0]) - np.repeat(np.cumsum(lens) - lens, lens)
        cand = col[np.repeat(starts, lens) + offs]
        keep = cand != self.rev[rows]
        rows, cand = rows[keep], cand[keep]
        out_ptr = np.zeros(m + 1, dtype=np.int64)
        np.cumsum(np.bincount(rows, minlength=m), out=out_ptr[1:])
        return out_ptr, cand.astype(np.int64), rows

    # -- accessors --------------------------------------------------------
    @property
    def num_edges(self) -> int:
        return int(self.edges.shape[0])

    @property
    def num_directed(self) -> int:
        return 2 * self.num_edges

    @cached_property
    def directed_index(self) -> dict:
        return {(int(i), int(j)): k for k, (i, j) in enumerate(zip(self.src, self.dst))}

    def index_of(self, i: int, j: int) -> int:
        try:
            return self.directed_index[(int(i), int(j))]
        except KeyError:
            raise KeyError(f"({i}, {j}) is not an edge") from None

    def directed_edges(self) -> list:
        return list(zip(self.src.tolist(), self.dst.tolist()))

    def neighbors(self, i: int) -> list:
        return self.dst[self.out_col[self.out_ptr[i]:self.out_ptr[i + 1]]].tolist()

    def coupling_of(self, i: int, j: int) -> float:
        return float(self.gamma_dir[self.index_of(i, j)])

    def dense(self) -> np.ndarray:
        G = np.eye(self.n)
        G[self.src, self.dst] = self.gamma_dir
        return G

    def sparse(self) -> scipy.sparse.csr_matrix:
        G = scipy.sparse.coo_matrix((self.gamma_dir, (self.src, self.dst)), shape=(self.n, self.n))
        return (G + scipy.sparse.identity(self.n)).tocsr()

    def abs_R(self) -> np.ndarray:
        """Dense |R| = |I - Gamma| (zero diagonal)."""
        M = np.zeros((self.n, self.n))
        M[self.src, self.dst] = np.abs(self.gamma_dir)
        return M

    def R(self) -> np.ndarray:
        M = np.zeros((self.n, self.n))
        M[self.src, self.dst] = -self.gamma_dir
        return M

    def matvec(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        w = self.gamma_dir * x[self.src]
        return x + kernels.csr_gather_sum(self.in_ptr, self.in_col, self.in_row, w)

    def objective(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return float(0.5 * x @ self.matvec(x) - self.h @ x)

    def with_h(self, h) -> "QuadraticProblem":
        return QuadraticProblem(self.n, self.edges, self.coupling, h)

    def to_raw(self) -> RawProblem:
        entries = [(i, i, 1.0) for i in range(self.n)]
        entries += [(int(i), int(j), float(v)) for (i, j), v in zip(self.edges, self.coupling)]
        return RawProblem(self.n, entries, self.h.copy())

    def is_tree(self) -> bool:
        return self.num_edges == self.n - 1

    @cached_property
    def diameter(self) -> int:
        if self.n == 1:
            return 0
        adj = scipy.sparse.coo_matrix(
            (np.ones(self.num_directed), (self.src, self.dst)), shape=(self.n, self.n)
        ).tocsr()
        dist = scipy.sparse.csgraph.shortest_path(adj, method="D", unweighted=True)
        return int(dist.max())

    def __repr__(self):
        return f"QuadraticProblem(n={self.n}, edges={self.num_edges})"


# --------------------------------------------------------------------------
def _components(n: int, edges: np.ndarray):
    if n == 0:
        return []
    adj = scipy.sparse.coo_matrix(
        (np.ones(edges.shape[0]), (edges[:, 0], edges[:, 1])), shape=(n, n)
    )
    k, labels = scipy.sparse.csgraph.connected_components(adj, directed=False)
    return [np.flatnonzero(labels == c).tolist() for c in range(k)]


def normalize(raw: RawProblem):
    """Rescale to unit diagonal and prune zero couplings.

    Returns ``(QuadraticProblem, NormalizationRecord)``.
    """
    n = raw.n
    h_raw = np.asarray(raw.h, dtype=float)
    if h_raw.shape[0] != n:
        raise LengthMismatch(f"h has length {h_raw.shape[0]}, expected {n}")
    d = np.zeros(n)
    off = {}
    for i, j, v in raw.entries:
        i, j = int(i), int(j)
        if i == j:
            d[i] = float(v)
        elif v != 0.0:
            off[(min(i, j), max(i, j))] = float(v)
    for i in range(n):
        if not d[i] > 0.0:
            raise NonPositiveDiagonal(i, float(d[i]))
    s = np.sqrt(d)
    keys = sorted(off)
    edges = np.array(keys, dtype=np.int64).reshape(-1, 2)
    coupling = np.array([off[k] / (s[k[0]] * s[k[1]]) for k in keys])
    comps = _components(n, edges)
    if len(comps) > 1:
        raise DisconnectedGraph(comps)
    return QuadraticProblem(n, edges, coupling, h_raw / s), NormalizationRecord(d.copy())


def denormalize_solution(x_norm, rec: NormalizationRecord) -> np.ndarray:
    x_norm = np.asarray(x_norm, dtype=float)
    if x_norm.shape != rec.d.shape:
        raise LengthMismatch(f"solution has length {x_norm.shape[0]}, record has {rec.d.shape[0]}")
    return x_norm / np.sqrt(rec.d)


@dataclass
class ValidationReport:
    positive_definite: bool
    min_eigenvalue: float
    connected: bool
    unit_diagonal: bool
    components: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.positive_definite and self.connected and self.unit_diagonal


def validate(p: QuadraticProblem) -> ValidationReport:
    lam = float(np.linalg.eigvalsh(p.dense()).min())
    comps = _components(p.n, p.edges)
    return ValidationReport(
        positive_definite=lam > PD_TOL,
        min_eigenvalue=lam,
        connected=len(comps) <= 1,
        unit_diagonal=True,
        components=comps,
    )


def direct_solve(p: QuadraticProblem) -> np.ndarray:
    """x* = Gamma^{-1} h by dense Cholesky plus one refinement step."""
    G = p.dense()
    try:
        c = scipy.linalg.cho_factor(G, lower=True)
    except np.linalg.LinAlgError:
        raise NotPositiveDefinite("Cholesky factorization failed") from None
    if np.min(np.abs(np.diag(c[0]))) ** 2 <= PD_TOL:
        raise NotPositiveDefinite("matrix is numerically singular")
    x = scipy.linalg.cho_solve(c, p.h)
    x += scipy.linalg.cho_solve(c, p.h - G @ x)
    return x


def residual(p: QuadraticProblem, x) -> float:
    """Infinity norm of Gamma x - h."""
    x = np.asarray(x, dtype=float)
    if x.shape != (p.n,):
        raise LengthMismatch(f"x has shape {x.shape}, expected ({p.n},)")
    r = p.matvec(x) - p.h
    return float(np.max(np.abs(r))) if p.n else 0.0


# --------------------------------------------------------------------------
# instance files
def _tokens(path):
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if line:
                yield lineno, line.split()


def _parse_float(tok, lineno):
    try:
        v = float(tok)
    except ValueError:
        raise ParseError(lineno, f"not a number: {tok!r}") from None
    if not math.isfinite(v):
        raise ParseError(lineno, f"non-finite value {tok!r}")
    return v


def _parse_index(tok, lineno, n):
    try:
        i = int(tok)
    except ValueError:
        raise ParseError(lineno, f"not an integer index: {tok!r}") from None
    if not 0 <= i < n:
        raise ParseError(lineno, f"index {i} out of range [0, {n})")
    return i


def load_problem(path) -> RawProblem:
    """Read an instance file.

    Format: ``n <count>`` first, then ``h <i> <value>`` and
    ``e <i> <j> <value>`` records (0-based).  ``e i i v`` sets a diagonal
    entry (default 1).  ``#`` starts a comment.
    """
    n = None
    h = None
    diag = {}
    off = {}
    seen_h = {}
    for lineno, tok in _tokens(path):
        kind = tok[0]
        if n is None:
            if kind != "n" or len(tok) != 2:
                raise ParseError(lineno, "expected header 'n <count>'")
            try:
                n = int(tok[1])
            except ValueError:
                raise ParseError(lineno, f"bad vertex count {tok[1]!r}") from None
            if n < 1:
                raise ParseError(lineno, "vertex count must be >= 1")
            h = np.zeros(n)
            continue
        if kind == "h":
            if len(tok) != 3:
                raise ParseError(lineno, "expected 'h <i> <value>'")
            i = _parse_index(tok[1], lineno, n)
            v = _parse_float(tok[2], lineno)
            if i in seen_h and seen_h[i] != v:
                raise ParseError(lineno, f"conflicting values for h[{i}]")
            seen_h[i] = v
            h[i] = v
        elif kind == "e":
            if len(tok) != 4:
                raise ParseError(lineno, "expected 'e <i> <j> <value>'")
            i = _parse_index(tok[1], lineno, n)
            j = _parse_index(tok[2], lineno, n)
            v = _parse_float(tok[3], lineno)
            table, key = (diag, i) if i == j else (off, (min(i, j), max(i, j)))
            if key in table and table[key] != v:
                raise ParseError(lineno, f"conflicting values for entry {key}")
            table[key] = v
        elif kind == "n":
            raise ParseError(lineno, "duplicate header")
        else:
            raise ParseError(lineno, f"unknown record type {kind!r}")
    if n is None:
        raise ParseError(0, "empty instance file")
    entries = [(i, i, diag.get(i, 1.0)) for i in range(n)]
    entries += [(i, j, v) for (i, j), v in sorted(off.items())]
    return RawProblem(n, entries, h)


def format_problem(p) -> str:
    raw = p.to_raw() if isinstance(p, QuadraticProblem) else p
    lines = [f"n {raw.n}"]
    lines += [f"h {i} {fmt(v)}" for i, v in enumerate(np.asarray(raw.h, dtype=float))]
    diag = [(i, v) for i, j, v in raw.entries if i == j]
    lines += [f"e {i} {i} {fmt(v)}" for i, v in diag if v != 1.0]
    lines += [f"e {i} {j} {fmt(v)}" for i, j, v in raw.entries if i != j]
    return "\n".join(lines) + "\n"


def save_problem(path, p) -> None:
    Path(path).write_text(format_problem(p))


def save_trace(path, trace) -> None:
    """Write a trace as comma-separated rows, one per iteration.

    The first line is a ``#`` comment naming the columns.
    """
    Path(path).write_text(format_trace(trace))


def format_trace(trace) -> str:
    out = ["# " + ",".join(trace.columns)]
    for row in trace.rows:
        out.append(",".join(_cell(v) for v in row))
    return "\n".join(out) + "\n"


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return fmt(float(v))


def read_trace(path) -> list:
    rows = []
    for line in Path(path).read_text().splitlines():
        if not line or line.startswith("#"):
            continue
        rows.append([float(c) for c in line.split(",")])
    return rows


def from_dense(G, h) -> RawProblem:
    """RawProblem from a dense symmetric matrix (upper triangle is used)."""
    G = np.asarray(G, dtype=float)
    n = G.shape[0]
    entries = [(i, j, float(G[i, j])) for i in range(n) for j in range(i, n)
               if i == j or G[i, j] != 0.0]
    return RawProblem(n, entries, np.asarray(h, dtype=float))


def problem_from_edges(n: int, edges: Iterable, h) -> QuadraticProblem:
    """Shorthand: unit-diagonal problem from ``[(i, j, Gamma_ij), ...]``."""
    edges = list(edges)
    ij = [(i, j) for i, j, _ in edges]
    vals = [v for _, _, v in edges]
    p = QuadraticProblem(n, np.array(ij, dtype=np.int64).reshape(-1, 2), vals, h)
    comps = _components(n, p.edges)
    if len(comps) > 1:
        raise DisconnectedGraph(comps)
    return p
