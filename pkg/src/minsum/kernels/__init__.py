"""Hot inner loops, compiled with numba when available.

Set ``MINSUM_DISABLE_NUMBA=1`` in the environment (before import) to force
the pure-numpy implementations.  Both paths perform the same floating point
operations in the same order for ``csr_gather_sum``, so solver output does not
depend on the backend.
"""
import importlib
import os

from . import numpy_impl

_disabled = os.environ.get("MINSUM_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes"}

numba_impl = None
if not _disabled:
    try:
        # a plain "from . import" would just return the None bound above
        numba_impl = importlib.import_module(".numba_impl", __name__)
    except ImportError:  # pragma: no cover - numba is a hard dependency
        numba_impl = None

if numba_impl is not None:
    BACKEND = "numba"
    csr_gather_sum = numba_impl.csr_gather_sum
    nb_walk_sums = numba_impl.nb_walk_sums
else:
    BACKEND = "numpy"
    csr_gather_sum = numpy_impl.csr_gather_sum
    nb_walk_sums = numpy_impl.nb_walk_sums

__all__ = ["BACKEND", "csr_gather_sum", "nb_walk_sums", "numpy_impl", "numba_impl"]
