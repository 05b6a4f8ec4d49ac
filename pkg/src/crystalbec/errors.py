"""Exception types raised by the solvers."""


class CrystalBECError(Exception):
    """Base class for all package errors."""


class NoBifurcationError(CrystalBECError):
    """The bifurcation condition has no root for the given kernel and density."""


class ConvergenceError(CrystalBECError):
    """An iterative or truncated computation failed its convergence gate."""


class QuadratureError(ConvergenceError):
    """A quadrature did not reach the requested tolerance."""


class RegimeError(CrystalBECError):
    """Inputs fall outside the validity range of an expansion."""


class DegenerateBranchError(CrystalBECError):
    """Two plane-wave eigenvectors carry nearly equal constant components."""


class NonUnimodalError(CrystalBECError):
    """The objective has more than one local minimum on the search interval.

    The minima found are kept on ``minima`` as ``(location, value)`` pairs.
    """

    def __init__(self, message, minima):
        super().__init__(message)
        self.minima = list(minima)


class SeriesError(CrystalBECError):
    """The order-by-order series recursion produced an inconsistent order."""
