"""Exception hierarchy shared across the package."""


class RdpotError(Exception):
    """Base class for all package-specific errors."""


class DimensionMismatch(RdpotError):
    """Operands have incompatible shapes."""


class InvalidDistribution(RdpotError):
    """Probability vector violates simplex or support invariants."""


class AbsoluteContinuityViolation(RdpotError):
    """KL divergence requested where p puts mass outside supp(q)."""


class ShrinkNotAllowed(RdpotError):
    """zero_pad asked to shrink a distribution."""


class InfeasibleMass(RdpotError):
    """Transport marginals carry different total mass."""


class NonConvergence(RdpotError):
    """Iterative solver hit max_iter above the residual tolerance.

    Carries the partial result so callers can inspect the trace.
    """

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class NumericalOverflow(RdpotError):
    """A scaling vector left the representable range."""


class NewtonStall(RdpotError):
    """Newton iteration failed to converge inside its bracket."""


class KlDomain(RdpotError):
    """KL-variant r-update produced a non-positive denominator."""


class DomainError(RdpotError):
    """Closed-form evaluated outside its stated domain."""


class NoTransitionFound(RdpotError):
    """No secant slope fell below the detection threshold."""


class FormatError(RdpotError):
    """Malformed PGM header or payload."""


class TooSmall(RdpotError):
    """Image too small for the causal predictor."""


class SeedRequired(RdpotError):
    """Stochastic simulation invoked without an explicit seed."""


class Infeasible(RdpotError):
    """Problem constraints admit no solution."""
