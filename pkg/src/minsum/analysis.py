"""Fixed points of the quadratic-parameter update and the linear z-recursion.

At the fixed point ``gamma*`` the z-update is affine, ``z' = -D y + A z``,
with (directed-edge indexed)

    A[{i,j}, {u,i}] = -gamma*_ij G_ij   for u in N(i) \\ j
    D[{i,j}, {i,j}] = -gamma*_ij G_ij
    y[{i,j}]        = h_i

so ``z_inf = -(I - A)^{-1} D y`` whenever rho(A) < 1.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .decomposition import construct_witness
from .engine import estimate, excluded_sums, gamma_step
from .errors import MissingEdgeValue, NoConvergence, SpectralRadiusTooLarge
from .model import QuadraticProblem, direct_solve, residual
from .spectral import perron, spectral_radius  # noqa: F401  (re-exported)


@dataclass
class FixedPointResult:
    gamma_star: np.ndarray
    iterations: int
    final_delta: float


@dataclass
class EdgeOperatorMatrices:
    A: np.ndarray
    D: np.ndarray
    y: np.ndarray


@dataclass
class ZFixedResult:
    z: np.ndarray
    x: np.ndarray
    exactness_error: float  # ||x - direct_solve(p)||_inf


def operator_F(p: QuadraticProblem, gamma) -> np.ndarray:
    """One application of the quadratic-parameter update (raises IllPosed off-domain)."""
    return gamma_step(p, gamma)


def in_domain(p: QuadraticProblem, gamma) -> bool:
    return bool(np.all(excluded_sums(p, p.coef2 * np.asarray(gamma, dtype=float)) < 1.0))


def iterate_F(p: QuadraticProblem, start, tol: float = 1e-12, max_iter: int = 100_000) -> FixedPointResult:
    g = np.asarray(start, dtype=float)
    delta = float("inf")
    for it in range(1, max_iter + 1):
        g_new = gamma_step(p, g)
        delta = float(np.max(np.abs(g_new - g))) if g.size else 0.0
        g = g_new
        if delta <= tol:
            return FixedPointResult(g, it, delta)
    raise NoConvergence(f"gamma iteration did not converge in {max_iter} steps", last=delta)


def compute_gamma_star(p: QuadraticProblem, tol: float = 1e-14, max_iter: int = 100_000,
                       start: str = "zero") -> FixedPointResult:
    """Fixed point of the gamma update, by ascent from 0 (or descent from the
    default witness with ``start="witness"``).

    Raises NotWalkSummable when no convex decomposition exists.
    """
    w = construct_witness(p)
    if p.num_directed == 0:
        return FixedPointResult(np.zeros(0), 0, 0.0)
    g0 = np.zeros(p.num_directed) if start == "zero" else w.v
    return iterate_F(p, g0, tol=tol, max_iter=max_iter)


def build_A_D(p: QuadraticProblem, gamma_star) -> EdgeOperatorMatrices:
    g = np.asarray(gamma_star, dtype=float)
    if g.shape != (p.num_directed,):
        raise MissingEdgeValue(None if g.size > p.num_directed else p.directed_edges()[g.size])
    m = p.num_directed
    d = -g * p.gamma_dir
    A = np.zeros((m, m))
    A[p.nb_row, p.nb_col] = d[p.nb_row]
    return EdgeOperatorMatrices(A=A, D=np.diag(d), y=p.h[p.src].copy())


def z_fixed(p: QuadraticProblem, gamma_star, rho_tol: float = 1e-10) -> ZFixedResult:
    """Limit of the z-recursion at gamma*, via a dense solve of (I - A) z = -D y."""
    ops = build_A_D(p, gamma_star)
    rho = spectral_radius(np.abs(ops.A), tol=rho_tol) if ops.A.size else 0.0
    if rho >= 1.0:
        raise SpectralRadiusTooLarge(rho)
    m = ops.A.shape[0]
    z = np.linalg.solve(np.eye(m) - ops.A, -ops.D @ ops.y) if m else np.zeros(0)
    x = estimate(p, gamma_star, z)
    err = float(np.max(np.abs(x - direct_solve(p))))
    return ZFixedResult(z=z, x=x, exactness_error=err)


def z_series(p: QuadraticProblem, gamma_star, term_tol: float = 1e-14, max_terms: int = 1_000_000):
    """``-sum_t A^t D y``, truncated once a term's infinity norm drops below ``term_tol``.

    Returns ``(z, terms_used)``.
    """
    ops = build_A_D(p, gamma_star)
    term = ops.D @ ops.y
    total = term.copy()
    for t in range(1, max_terms + 1):
        if not term.size or np.max(np.abs(term)) < term_tol:
            return -total, t
        term = ops.A @ term
        total += term
    raise NoConvergence("series for z did not converge", last=float(np.max(np.abs(term))))


@dataclass
class AnalysisReport:
    rho_R: float
    rho_A: float
    gamma_star_min: float
    gamma_star_max: float
    witness_margin: float
    x_inf_residual: float
    exactness_error: float
    gamma_iterations: int

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def analyze(p: QuadraticProblem, tol: float = 1e-14) -> AnalysisReport:
    """Everything the ``analyze`` command reports.  Raises NotWalkSummable."""
    w = construct_witness(p)
    fp = compute_gamma_star(p, tol=tol)
    ops = build_A_D(p, fp.gamma_star)
    rho_A = spectral_radius(np.abs(ops.A)) if ops.A.size else 0.0
    zf = z_fixed(p, fp.gamma_star)
    g = fp.gamma_star
    return AnalysisReport(
        rho_R=float(w.rho),
        rho_A=float(rho_A),
        gamma_star_min=float(g.min()) if g.size else float("nan"),
        gamma_star_max=float(g.max()) if g.size else float("nan"),
        witness_margin=float(w.margin),
        x_inf_residual=residual(p, zf.x),
        exactness_error=zf.exactness_error,
        gamma_iterations=fp.iterations,
    )
