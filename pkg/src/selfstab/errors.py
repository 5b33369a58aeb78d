"""Exception hierarchy shared by every module of the package."""


class SelfStabError(Exception):
    """Base class for all library errors."""


class DomainError(SelfStabError, ValueError):
    pass


class RangeViolation(SelfStabError, ValueError):
    """An index function produced a value outside its declared range."""


class MissingBound(SelfStabError):
    pass


class QuadratureFailure(SelfStabError, ArithmeticError):
    pass


class InvariantViolation(SelfStabError, ValueError):
    pass


class ParseError(SelfStabError, ValueError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class TooFewPoints(SelfStabError, ValueError):
    pass


class OutOfInterval(SelfStabError, ValueError):
    pass


class NotContractive(SelfStabError, ArithmeticError):
    pass


class NoConvergence(SelfStabError, ArithmeticError):
    pass


class Infeasible(SelfStabError, ArithmeticError):
    pass


class EmptySample(SelfStabError, ValueError):
    pass


class AllIncrementsZero(SelfStabError, ArithmeticError):
    pass


class InsufficientScales(SelfStabError, ValueError):
    pass
