"""Min-sum message passing for quadratic optimization on sparse graphs."""
from .async_engine import AsyncConfig, run_async
from .decomposition import EdgeParams, construct_witness, is_convex_decomposition, is_convex_dominated
from .engine import SolverConfig, Status, run_sync
from .errors import IllPosed, MinSumError, NotWalkSummable
from .model import QuadraticProblem, direct_solve, load_problem, normalize, problem_from_edges

__version__ = "0.1.0"

__all__ = [
    "AsyncConfig",
    "EdgeParams",
    "IllPosed",
    "MinSumError",
    "NotWalkSummable",
    "QuadraticProblem",
    "SolverConfig",
    "Status",
    "construct_witness",
    "direct_solve",
    "is_convex_decomposition",
    "is_convex_dominated",
    "load_problem",
    "normalize",
    "problem_from_edges",
    "run_async",
    "run_sync",
]
