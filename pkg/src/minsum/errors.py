"""Exception types raised across the package."""


class MinSumError(Exception):
    """Base class for all package errors."""


class ParseError(MinSumError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class LengthMismatch(MinSumError, ValueError):
    pass


class NonPositiveDiagonal(MinSumError, ValueError):
    def __init__(self, vertex: int, value: float):
        super().__init__(f"diagonal entry {vertex} is {value!r}; must be > 0")
        self.vertex = vertex
        self.value = value


class DisconnectedGraph(MinSumError, ValueError):
    def __init__(self, components):
        self.components = [sorted(int(v) for v in c) for c in components]
        super().__init__(
            f"graph has {len(self.components)} connected components: {self.components}"
        )


class NotPositiveDefinite(MinSumError, ValueError):
    pass


class NotWalkSummable(MinSumError):
    """Raised when rho(|R|) >= 1, i.e. no convex decomposition exists."""

    def __init__(self, rho: float):
        super().__init__(f"problem is not walk-summable: rho(|R|) = {rho:.17g}")
        self.rho = rho


class MissingEdgeValue(MinSumError, KeyError):
    def __init__(self, edge):
        super().__init__(f"no value supplied for directed edge {edge}")
        self.edge = edge

    def __str__(self):
        return self.args[0]


class InvalidWitness(MinSumError, ValueError):
    pass


class IllPosed(MinSumError):
    """An update denominator 1 - sum(Gamma^2 gamma) is nonpositive."""

    def __init__(self, edge, t=None):
        where = f" at t={t}" if t is not None else ""
        super().__init__(f"update for directed edge {edge} is ill-posed{where}")
        self.edge = edge
        self.t = t


class BacktrackingWalk(MinSumError, ValueError):
    pass


class InvalidWalk(MinSumError, ValueError):
    pass


class EnumerationBudgetExceeded(MinSumError):
    pass


class NoConvergence(MinSumError):
    def __init__(self, message, last=None, upper_bound=None):
        super().__init__(message)
        self.last = last
        self.upper_bound = upper_bound


class SpectralRadiusTooLarge(MinSumError):
    def __init__(self, rho: float):
        super().__init__(f"spectral radius of |A| is {rho:.17g} >= 1")
        self.rho = rho


class InvalidParams(MinSumError, ValueError):
    pass
