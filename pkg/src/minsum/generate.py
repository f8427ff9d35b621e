"""Random walk-summable instances with a prescribed rho(|R|)."""
from __future__ import annotations

import math

import numpy as np
import scipy.sparse
import scipy.sparse.csgraph

from .errors import InvalidParams
from .model import QuadraticProblem
from .spectral import spectral_radius

MODELS = ("path", "cycle", "grid", "erdos", "tree")
SIGN_MODES = ("attractive", "mixed")
WEIGHT_MODES = ("random", "constant")
RHO_TOL = 1e-6


def _path(n, rng):
    return [(i, i + 1) for i in range(n - 1)]


def _cycle(n, rng):
    if n < 3:
        raise InvalidParams("a cycle needs n >= 3")
    return _path(n, rng) + [(0, n - 1)]


def _grid(n, rng):
    """Row-major grid with ``floor(sqrt(n))`` rows, truncated to n vertices."""
    rows = max(1, math.isqrt(n))
    cols = math.ceil(n / rows)
    out = []
    for v in range(n):
        r, c = divmod(v, cols)
        if c + 1 < cols and v + 1 < n:
            out.append((v, v + 1))
        if v + cols < n:
            out.append((v, v + cols))
    return out


def _connected(n, edges):
    if n <= 1:
        return True
    e = np.array(edges, dtype=np.int64).reshape(-1, 2)
    adj = scipy.sparse.coo_matrix((np.ones(len(e)), (e[:, 0], e[:, 1])), shape=(n, n))
    k, _ = scipy.sparse.csgraph.connected_components(adj, directed=False)
    return k == 1


def _erdos(n, rng, max_tries=1000):
    if n <= 1:
        return []
    prob = min(1.0, 2.0 * math.log(n) / n) if n > 2 else 1.0
    iu, ju = np.triu_indices(n, k=1)
    for _ in range(max_tries):
        keep = rng.random(iu.shape[0]) < prob
        edges = list(zip(iu[keep].tolist(), ju[keep].tolist()))
        if _connected(n, edges):
            return edges
    raise InvalidParams(f"no connected Erdos-Renyi graph after {max_tries} draws")


def _tree(n, rng):
    """Random recursive tree: each vertex attaches to a uniform earlier one."""
    return [(int(rng.integers(0, v)), v) for v in range(1, n)]


_BUILDERS = {"path": _path, "cycle": _cycle, "grid": _grid, "erdos": _erdos, "tree": _tree}


def generate(n: int, model: str, target_rho: float, sign_mode: str = "attractive",
             seed: int = 0, weights: str = "random") -> QuadraticProblem:
    """Connected instance on ``model`` with ``rho(|R|) = target_rho``.

    Coupling magnitudes are uniform in [0.5, 1.5] (or all equal with
    ``weights="constant"``), then scaled together; since ``rho(R) <=
    rho(|R|) < 1`` the result is positive definite.  ``h`` is uniform in
    [-1, 1].  A single vertex has no couplings and ``rho(|R|) = 0``.
    """
    if not (0.0 < target_rho < 1.0):
        raise InvalidParams(f"target_rho must lie in (0, 1), got {target_rho}")
    if n < 1:
        raise InvalidParams("n must be >= 1")
    if model not in _BUILDERS:
        raise InvalidParams(f"unknown model {model!r}; choose from {', '.join(MODELS)}")
    if sign_mode not in SIGN_MODES:
        raise InvalidParams(f"unknown sign mode {sign_mode!r}")
    if weights not in WEIGHT_MODES:
        raise InvalidParams(f"unknown weight mode {weights!r}")
    if seed < 0:
        raise InvalidParams("seed must be nonnegative")
    rng = np.random.default_rng(seed)
    edges = _BUILDERS[model](n, rng)
    E = len(edges)
    mag = np.ones(E) if weights == "constant" else rng.uniform(0.5, 1.5, E)
    if sign_mode == "attractive":
        sign = np.ones(E)
    else:
        sign = np.where(rng.random(E) < 0.5, -1.0, 1.0)
    h = rng.uniform(-1.0, 1.0, n)
    R = sign * mag
    e = np.array(edges, dtype=np.int64).reshape(-1, 2)
    if E:
        p0 = QuadraticProblem(n, e, -R, h)
        rho0 = spectral_radius(p0.abs_R(), tol=1e-13)
        R = R * (target_rho / rho0)
    p = QuadraticProblem(n, e, -R, h)
    if E:
        rho = spectral_radius(p.abs_R(), tol=1e-13)
        if abs(rho - target_rho) > RHO_TOL:
            raise InvalidParams(f"rescaling missed the target: rho={rho}, wanted {target_rho}")
    return p
