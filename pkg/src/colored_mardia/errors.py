"""Exception hierarchy shared by every module of the package."""


class MardiaError(Exception):
    """Base class for all errors raised by colored_mardia."""


class NonFiniteError(MardiaError, ValueError):
    pass


class LagOutOfRange(MardiaError, ValueError):
    pass


class IndexOutOfRange(MardiaError, IndexError):
    pass


class SingularCovariance(MardiaError, ValueError):
    """The (sample) covariance is numerically singular; the data are degenerate."""


class NonPositiveVariance(MardiaError, ValueError):
    pass


class DegenerateCovariance(MardiaError, ValueError):
    pass


class ModeDimensionMismatch(MardiaError, ValueError):
    pass


class DomainError(MardiaError, ValueError):
    pass


class BudgetExceeded(MardiaError, RuntimeError):
    pass


class OrderOverflow(MardiaError, OverflowError):
    pass


class ParameterOutOfDomain(MardiaError, ValueError):
    pass


class InsufficientLength(MardiaError, ValueError):
    pass


class ReplicationFailure(MardiaError, RuntimeError):
    """Too many Monte Carlo replications failed (singular sample covariance)."""
