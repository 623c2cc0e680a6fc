"""Exception hierarchy shared by all ekdiff modules."""


class EKDiffError(Exception):
    """Base class for every error raised by ekdiff."""


class DomainError(EKDiffError, ValueError):
    """An argument lies outside the domain of the operation."""


class DiracOrder(DomainError):
    """M-Wright order nu = 1 was passed where a pointwise value is needed.

    M_1 is the Dirac mass at tau = 1; callers must branch on
    ``WrightOrder.is_dirac`` instead of evaluating it.
    """


class ParamMismatch(DomainError):
    pass


class Unsupported(DomainError):
    pass


class NonConvergence(EKDiffError, ArithmeticError):
    """A series, quadrature or iteration missed its error target."""


class TableError(EKDiffError):
    pass


class ResolutionError(EKDiffError):
    pass


class SingularityError(EKDiffError, ArithmeticError):
    pass


class InsufficientHistory(EKDiffError):
    pass


class InsufficientPaths(EKDiffError):
    pass


class NotPositiveDefinite(EKDiffError, ArithmeticError):
    pass
