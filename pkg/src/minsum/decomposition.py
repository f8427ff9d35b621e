"""Parameterized decompositions of a quadratic objective.

For a unit-diagonal problem, a pairwise decomposition into quadratics is
fixed by two directed-edge vectors: ``gamma`` (quadratic parameters) and
``z`` (linear parameters).  Edge ``(i, j)`` carries

    f_ij(xi, xj) = 1/2 (g_ji G^2 xi^2 + 2 G xi xj + g_ij G^2 xj^2) - z_ji xi - z_ij xj

and vertex ``j`` carries

    f_j(xj) = 1/2 (1 - sum_i G_ij^2 g_ij) xj^2 - (h_j - sum_i z_ij) xj.

Constant offsets are never represented.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import kernels
from .errors import InvalidWitness, MissingEdgeValue, NotWalkSummable, ParseError
from .model import QuadraticProblem, fmt
from .spectral import perron

# Products G^2 v_ij v_ji that equal 1 in exact arithmetic may round just below.
PAIRWISE_RTOL = 1e-12


@dataclass(frozen=True)
class EdgeParams:
    gamma: np.ndarray
    z: np.ndarray

    def __post_init__(self):
        g = np.array(self.gamma, dtype=float)
        z = np.array(self.z, dtype=float)
        if g.shape != z.shape or g.ndim != 1:
            raise ValueError("gamma and z must be 1-d arrays of equal length")
        if not (np.all(np.isfinite(g)) and np.all(np.isfinite(z))):
            raise ValueError("edge parameters must be finite")
        g.setflags(write=False)
        z.setflags(write=False)
        object.__setattr__(self, "gamma", g)
        object.__setattr__(self, "z", z)

    @classmethod
    def zeros(cls, p: QuadraticProblem) -> "EdgeParams":
        return cls(np.zeros(p.num_directed), np.zeros(p.num_directed))

    @classmethod
    def from_maps(cls, p: QuadraticProblem, gamma: dict, z: dict | None = None) -> "EdgeParams":
        """Build from ``{(i, j): value}`` maps; ``z`` entries default to 0."""
        g = _require_all(p, gamma)
        zz = np.zeros(p.num_directed)
        for (i, j), v in (z or {}).items():
            zz[p.index_of(i, j)] = v
        return cls(g, zz)

    def gamma_map(self, p: QuadraticProblem) -> dict:
        return {e: float(self.gamma[k]) for k, e in enumerate(p.directed_edges())}

    def z_map(self, p: QuadraticProblem) -> dict:
        return {e: float(self.z[k]) for k, e in enumerate(p.directed_edges())}


def _require_all(p, values) -> np.ndarray:
    """Directed-edge array from a map or array, insisting on full coverage."""
    if isinstance(values, dict):
        out = np.empty(p.num_directed)
        for k, e in enumerate(p.directed_edges()):
            if e not in values:
                raise MissingEdgeValue(e)
            out[k] = values[e]
        return out
    arr = np.asarray(values, dtype=float).reshape(-1)
    if arr.shape[0] != p.num_directed:
        missing = p.directed_edges()[arr.shape[0]] if arr.shape[0] < p.num_directed else None
        raise MissingEdgeValue(missing)
    return arr


@dataclass(frozen=True)
class Witness:
    """A point ``v`` of the convex-decomposition set.

    ``margin`` is the smallest vertex slack ``1 - sum_i G_ij^2 v_ij`` and
    ``pairwise_slack`` the smallest ``G_ij^2 v_ij v_ji - 1``.
    """

    v: np.ndarray
    margin: float
    pairwise_slack: float
    rho: float | None = None  # rho(|R|) when built by construct_witness


@dataclass(frozen=True)
class InitialMessages:
    """Quadratic initial messages J_{i->j}(x_j) = 1/2 a_ij x_j^2 - b_ij x_j."""

    a: np.ndarray
    b: np.ndarray


@dataclass
class Certificate:
    ok: bool
    reason: str = ""
    edge: tuple | None = None
    vertex: int | None = None
    value: float | None = None
    vertex_margin: float = float("nan")
    pairwise_slack: float = float("nan")


def _vertex_sums(p: QuadraticProblem, gamma) -> np.ndarray:
    return kernels.csr_gather_sum(p.in_ptr, p.in_col, p.in_row, p.coef2 * gamma)


def is_convex_decomposition(p: QuadraticProblem, gamma):
    """Check membership of ``gamma`` in the convex-decomposition set.

    Returns ``(ok, Certificate)``; the certificate names the first violated
    condition in the order: nonnegativity, pairwise convexity, vertex
    strict convexity.
    """
    g = _require_all(p, gamma)
    edges = p.directed_edges()
    vs = _vertex_sums(p, g)
    vertex_margin = float(np.min(1.0 - vs)) if p.n else float("inf")
    prod = p.coef2[0::2] * g[0::2] * g[1::2]
    slack = float(np.min(prod - 1.0)) if prod.size else float("inf")
    cert = Certificate(True, vertex_margin=vertex_margin, pairwise_slack=slack)

    neg = np.flatnonzero(g < 0)
    if neg.size:
        k = int(neg[0])
        cert.ok, cert.reason, cert.edge, cert.value = False, "negative quadratic parameter", edges[k], float(g[k])
        return False, cert
    bad = np.flatnonzero(prod < 1.0 - PAIRWISE_RTOL)
    if bad.size:
        e = int(bad[0])
        cert.ok, cert.reason = False, "pairwise term not convex: G^2 g_ij g_ji < 1"
        cert.edge, cert.value = edges[2 * e], float(prod[e])
        return False, cert
    badv = np.flatnonzero(1.0 - vs <= 0.0)
    if badv.size:
        j = int(badv[0])
        cert.ok, cert.reason = False, "vertex term not strictly convex: 1 - sum G^2 g_ij <= 0"
        cert.vertex, cert.value = j, float(1.0 - vs[j])
        return False, cert
    return True, cert


def check_witness(p: QuadraticProblem, v) -> Witness:
    """Validate ``v`` and wrap it as a Witness, or raise InvalidWitness."""
    v = _require_all(p, v)
    ok, cert = is_convex_decomposition(p, v)
    if not ok:
        raise InvalidWitness(f"{cert.reason} (edge={cert.edge}, vertex={cert.vertex}, value={cert.value})")
    return Witness(v, cert.vertex_margin, cert.pairwise_slack)


def is_convex_dominated(p: QuadraticProblem, gamma0, witness) -> bool:
    """True iff ``gamma0 <= v`` componentwise for a valid witness ``v``.

    Both decompositions share the cross term ``G_ij xi xj``, so the Hessian of
    ``g_ij - f_ij`` is diagonal with entries ``G^2 (v - gamma0)``.
    """
    v = witness.v if isinstance(witness, Witness) else witness
    check_witness(p, v)
    g0 = _require_all(p, gamma0)
    return bool(np.all(g0 <= v))


def construct_witness(p: QuadraticProblem, tol: float = 1e-10) -> Witness:
    """Perron-scaled witness ``v_ij = w_i / (|G_ij| w_j)`` with ``(I - |R|) w = 1``.

    Raises NotWalkSummable when rho(|R|) >= 1.
    """
    absR = p.abs_R()
    res = perron(absR, tol=tol)
    if res.rho >= 1.0:
        raise NotWalkSummable(res.rho)
    w = np.linalg.solve(np.eye(p.n) - absR, np.ones(p.n))
    if not np.all(w >= 1.0 - 1e-12):
        # (I - |R|)^{-1} >= I entrywise when rho(|R|) < 1
        raise NotWalkSummable(res.rho)
    v = w[p.src] / (np.abs(p.gamma_dir) * w[p.dst])
    vs = _vertex_sums(p, v)
    margin = float(np.min(1.0 - vs))
    prod = p.coef2[0::2] * v[0::2] * v[1::2]
    slack = float(np.min(prod - 1.0)) if prod.size else float("inf")
    return Witness(v, margin, slack, rho=res.rho)


def from_messages(p: QuadraticProblem, base: EdgeParams, msgs: InitialMessages) -> EdgeParams:
    """Fold quadratic initial messages into the edge parameters.

    ``f0_ij = f_ij - J_{j->i}(xi) - J_{i->j}(xj)`` gives
    ``gamma0_ij = gamma_ij - a_ij / G_ij^2`` and ``z0_ij = z_ij - b_ij``.
    """
    a = _require_all(p, msgs.a)
    b = _require_all(p, msgs.b)
    g = _require_all(p, base.gamma)
    z = _require_all(p, base.z)
    return EdgeParams(g - a / p.coef2, z - b)


@dataclass
class ComponentFunctions:
    """Coefficients of every component function.

    Vertex ``j``: ``1/2 vertex_quad[j] x^2 + vertex_lin[j] x``.
    Edge ``e = (i, j)``: ``1/2 [xi xj] edge_hess[e] [xi xj]' + edge_lin[e] . [xi, xj]``.
    """

    vertex_quad: np.ndarray
    vertex_lin: np.ndarray
    edge_hess: np.ndarray  # (E, 2, 2)
    edge_lin: np.ndarray  # (E, 2)
    edges: np.ndarray

    def assemble(self):
        """Sum all pieces back into ``(Gamma, h)``."""
        n = self.vertex_quad.shape[0]
        G = np.diag(self.vertex_quad).astype(float)
        lin = self.vertex_lin.astype(float).copy()
        for (i, j), H, c in zip(self.edges, self.edge_hess, self.edge_lin):
            G[i, i] += H[0, 0]
            G[j, j] += H[1, 1]
            G[i, j] += H[0, 1]
            G[j, i] += H[1, 0]
            lin[i] += c[0]
            lin[j] += c[1]
        return G, -lin

    def evaluate(self, x) -> float:
        x = np.asarray(x, dtype=float)
        total = float(np.sum(0.5 * self.vertex_quad * x**2 + self.vertex_lin * x))
        for (i, j), H, c in zip(self.edges, self.edge_hess, self.edge_lin):
            xy = np.array([x[i], x[j]])
            total += 0.5 * xy @ H @ xy + c @ xy
        return total


def component_functions(p: QuadraticProblem, params: EdgeParams) -> ComponentFunctions:
    g, z = params.gamma, params.z
    vq = 1.0 - _vertex_sums(p, g)
    zs = kernels.csr_gather_sum(p.in_ptr, p.in_col, p.in_row, z)
    vl = -(p.h - zs)
    G = p.coupling
    G2 = G**2
    g_ij, g_ji = g[0::2], g[1::2]  # directed i->j and j->i for edge (i, j)
    hess = np.empty((p.num_edges, 2, 2))
    hess[:, 0, 0] = g_ji * G2
    hess[:, 1, 1] = g_ij * G2
    hess[:, 0, 1] = G
    hess[:, 1, 0] = G
    lin = np.stack([-z[1::2], -z[0::2]], axis=1)
    return ComponentFunctions(vq, vl, hess, lin, p.edges.copy())


# --------------------------------------------------------------------------
def format_params(p: QuadraticProblem, params: EdgeParams) -> str:
    lines = []
    for k, (i, j) in enumerate(p.directed_edges()):
        lines.append(f"g {i} {j} {fmt(params.gamma[k])}")
    for k, (i, j) in enumerate(p.directed_edges()):
        lines.append(f"z {i} {j} {fmt(params.z[k])}")
    return "\n".join(lines) + "\n"


def save_params(path, p: QuadraticProblem, params: EdgeParams) -> None:
    Path(path).write_text(format_params(p, params))


def load_params(path, p: QuadraticProblem) -> EdgeParams:
    """Read ``g i j value`` / ``z i j value`` records.

    Every directed edge needs a ``g`` record; missing ``z`` records are 0.
    """
    gamma, z = {}, {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        if tok[0] not in ("g", "z") or len(tok) != 4:
            raise ParseError(lineno, "expected 'g <i> <j> <value>' or 'z <i> <j> <value>'")
        try:
            key = (int(tok[1]), int(tok[2]))
            val = float(tok[3])
        except ValueError:
            raise ParseError(lineno, "malformed record") from None
        if key not in p.directed_index:
            raise ParseError(lineno, f"{key} is not a directed edge of the problem")
        (gamma if tok[0] == "g" else z)[key] = val
    return EdgeParams.from_maps(p, gamma, z)
