class InvPDEError(Exception):
    """Base class of every error raised by invpde"""


# expr


class ZeroDenominator(InvPDEError, ZeroDivisionError):
    pass


class NearSingular(InvPDEError, ArithmeticError):
    pass


class UnsupportedExpression(InvPDEError, ValueError):
    pass


class ParseError(InvPDEError, ValueError):
    def __init__(self, message, position=None):
        self.position = position
        if position is not None:
            message = f"{message} (at {position})"
        super().__init__(message)


# series


class NonUnit(InvPDEError, ZeroDivisionError):
    pass


class BasepointMismatch(InvPDEError, ValueError):
    pass


class NotInvertible(InvPDEError, ArithmeticError):
    pass


# jet


class OrderOverflow(InvPDEError, ValueError):
    pass


class NotSymmetric(InvPDEError, ValueError):
    pass


class NonAdmissible(InvPDEError):
    """The transformed hypersurface is no longer a graph over the x chart"""


# invariant polynomials


class EmptyEquation(InvPDEError, ValueError):
    pass


class NotHomogeneous(InvPDEError, ValueError):
    pass


# conformal


class ChartBoundary(InvPDEError):
    """The point left the affine chart lambda != 0 of the light cone"""


class NotOnCone(InvPDEError, ValueError):
    pass


class NotRotation(InvPDEError, ValueError):
    pass


class NotMoebius(InvPDEError, ValueError):
    pass


class NoInvariants(InvPDEError, ValueError):
    pass


# harness


class OutOfDomain(InvPDEError, ValueError):
    pass


class DegenerateSample(InvPDEError):
    """A sampled jet sits too close to a locus where a check is undefined"""


class SuiteConfigError(InvPDEError, ValueError):
    pass
