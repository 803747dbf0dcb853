"""Exception hierarchy shared by every mslab module."""


class MslabError(Exception):
    """Base class for all errors raised by mslab."""


class NonConvergence(MslabError):
    """An adaptive procedure exhausted its budget.

    The best available estimate is attached as ``result`` when there is one.
    """

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class Divergent(NonConvergence):
    """A quantity that should be finite appears to be infinite."""

    def __init__(self, message, result=None, arg=None, value=None):
        super().__init__(message, result)
        self.arg = arg
        self.value = value


class SingularityOnGrid(MslabError):
    """An integrand returned a non-finite value at a non-excluded node."""


class SingularityOnPath(MslabError):
    """A path integrand has a pole on the integration path."""


class PoleHit(MslabError, ZeroDivisionError):
    """Evaluation at a registered pole."""


class ExprSyntaxError(MslabError, SyntaxError):
    """Malformed expression text; ``position`` is the 0-based offset."""

    def __init__(self, message, position):
        super().__init__(f"{message} at position {position}")
        self.position = position


class SpaceError(MslabError, ValueError):
    """Invalid (Gamma, v) data: duplicates, ties in modulus, bad weights."""


class TooFewPoints(SpaceError):
    pass


class RangeViolation(MslabError):
    """A composition map left the closed upper half-plane."""


class NonHermitian(MslabError):
    pass


class ConfigError(MslabError, ValueError):
    pass
