"""Perron root of entrywise-nonnegative matrices by power iteration."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse
import scipy.sparse.csgraph

from .errors import NoConvergence


@dataclass
class PerronResult:
    rho: float
    lower: float  # certified Collatz-Wielandt bounds on rho
    upper: float
    iterations: int
    vector: np.ndarray | None  # positive Perron vector when M is irreducible


def _symmetric_block(B):
    """Dense symmetric eigensolve; the bracket is recomputed from the vector."""
    Bd = B.toarray() if scipy.sparse.issparse(B) else B
    lam, vecs = np.linalg.eigh(Bd)
    u = np.abs(vecs[:, -1])
    u = np.maximum(u / u.max(), np.finfo(float).tiny)
    ratio = (Bd @ u) / u
    rho = float(lam[-1])
    return rho, max(min(float(ratio.min()), rho), 0.0), max(float(ratio.max()), rho), 0, u


def _is_symmetric(B) -> bool:
    if scipy.sparse.issparse(B):
        return (abs(B - B.T) > 0).nnz == 0
    return bool(np.array_equal(B, B.T))


def _power_block(B, tol, max_iter):
    """Power iteration on the irreducible block ``B`` shifted by the identity.

    The shift makes ``B + I`` primitive, so the iteration converges even for
    periodic blocks (bipartite graphs, cycles).  At every step
    ``min(y/x) - 1 <= rho(B) <= max(y/x) - 1`` with ``y = (B + I) x``.
    """
    x = np.ones(B.shape[0])
    prev = None
    for it in range(1, max_iter + 1):
        y = B @ x + x
        ratio = y / x
        lo, hi = float(ratio.min()) - 1.0, float(ratio.max()) - 1.0
        est = 0.5 * (lo + hi)
        x = y / y.max()
        if hi - lo <= tol * max(hi, 0.0):
            return est, max(lo, 0.0), hi, it, x
        prev = (prev[1] if prev else est, est)
    raise NoConvergence(
        f"power iteration did not reach relative tolerance {tol:g} in {max_iter} iterations",
        last=prev,
        upper_bound=hi,
    )


def perron(M, tol: float = 1e-10, max_iter: int = 10000) -> PerronResult:
    """Spectral radius of a nonnegative matrix with a certified bracket.

    The matrix is split into strongly connected components; the spectral
    radius of a reducible matrix is the largest over its diagonal blocks.
    """
    if scipy.sparse.issparse(M):
        M = M.tocsr()
        if M.nnz and M.data.min() < 0:
            raise ValueError("matrix must be entrywise nonnegative")
        pattern = M
    else:
        M = np.asarray(M, dtype=float)
        if M.size and M.min() < 0:
            raise ValueError("matrix must be entrywise nonnegative")
        pattern = scipy.sparse.csr_matrix(M)
    N = M.shape[0]
    if N == 0:
        return PerronResult(0.0, 0.0, 0.0, 0, np.zeros(0))
    pattern.eliminate_zeros()
    k, labels = scipy.sparse.csgraph.connected_components(pattern, directed=True, connection="strong")
    results = []
    for c in range(k):
        idx = np.flatnonzero(labels == c)
        B = M[idx][:, idx]
        if idx.shape[0] == 1:
            v = float(B.toarray()[0, 0]) if scipy.sparse.issparse(B) else float(B[0, 0])
            results.append((v, v, v, 0, np.ones(1)))
        else:
            try:
                results.append(_power_block(B, tol, max_iter))
            except NoConvergence:
                # slow mixing (long paths, large cycles); symmetric blocks
                # have a direct alternative
                if not _is_symmetric(B):
                    raise
                results.append(_symmetric_block(B))
    vec = results[0][4] / np.max(results[0][4]) if k == 1 else None
    return PerronResult(
        rho=max(r[0] for r in results),
        lower=max(r[1] for r in results),
        upper=max(r[2] for r in results),
        iterations=max(r[3] for r in results),
        vector=vec,
    )


def spectral_radius(M_abs, tol: float = 1e-10, max_iter: int = 10000) -> float:
    """Perron value of an entrywise nonnegative matrix (relative tolerance ``tol``)."""
    return perron(M_abs, tol=tol, max_iter=max_iter).rho
