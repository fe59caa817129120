"""Exception hierarchy.

``InputError`` subclasses signal malformed data (CLI exit code 2);
``DomainError`` subclasses signal a well-formed problem with no answer
under the requested model (CLI exit code 1).
"""


class InvfitError(Exception):
    pass


class InputError(InvfitError, ValueError):
    pass


class DomainError(InvfitError):
    pass


class DimensionMismatch(InputError):
    pass


class ZeroRow(InputError):
    pass


class RelGapZeroRhs(InputError):
    pass


class UnsupportedVariant(InputError):
    pass


class DimensionUnsupported(InputError):
    pass


class ZeroAnchor(InputError):
    pass


class SignPatternRequired(InputError):
    pass


class InfeasiblePoint(DomainError):
    pass


class ConstraintInfeasible(DomainError):
    pass


class NoFeasibleProjection(DomainError):
    pass


class EmptyFace(DomainError):
    pass


class EmptyDenominator(DomainError):
    pass


class BothBranchesInfeasible(DomainError):
    pass


class IterationLimit(DomainError):
    pass
