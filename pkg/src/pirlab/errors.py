"""Exception hierarchy shared by every pirlab module."""


class PirError(Exception):
    """Base class for all pirlab errors."""


# field / linear algebra
class NonPrimeP(PirError, ValueError):
    pass


class UnsupportedOrder(PirError, ValueError):
    pass


class DivisionByZero(PirError, ZeroDivisionError):
    pass


class DimensionMismatch(PirError, ValueError):
    pass


# codes
class LengthExceedsField(PirError, ValueError):
    pass


class TooFewRows(PirError, ValueError):
    pass


class InconsistentSymbols(PirError):
    pass


class TooManyErrors(PirError):
    pass


class AmbiguousDecoding(PirError):
    pass


# schemes
class InvalidParameters(PirError, ValueError):
    pass


class BadIndex(PirError, ValueError):
    pass


class FieldTooSmall(PirError, ValueError):
    pass


class UnsupportedParameters(PirError, ValueError):
    pass


class ConstructionCheckFailed(PirError, AssertionError):
    pass


class Undecodable(PirError):
    pass


# checker / sim
class BudgetTooSmall(PirError, ValueError):
    pass


class AnyTrialFailed(PirError):
    pass
