"""Exception hierarchy shared by all modules."""


class BiorthError(Exception):
    """Base class for every error raised by this package."""


class NearDefective(BiorthError):
    """Eigenvalues too close to pair left and right eigenvectors reliably."""


class SelfOrthogonal(BiorthError):
    """A left/right pair with vanishing overlap; normalization is undefined."""


class DimensionMismatch(BiorthError, ValueError):
    pass


class NoConvergence(BiorthError):
    """QR iteration did not converge within its iteration budget."""


class EchoZero(BiorthError):
    """The Loschmidt echo vanishes at a sample; phases are undefined there."""


class ExceptionalPoint(BiorthError):
    """Band energy vanishes: the two bands coalesce."""


class GaugeSingular(BiorthError):
    """The standard closed-form gauge divides by a vanishing factor."""


class LogSingular(BiorthError):
    """A momentum sample sits on a zero of the mode partition function."""


class DegenerateRatio(BiorthError):
    """Overlap equals -1 so the Fisher-zero ratio is undefined."""


class NotCritical(BiorthError):
    """Mode does not meet the unit-modulus condition for periodic critical times."""


class Unwrappable(BiorthError):
    """Phase jump between neighbouring samples cannot be resolved by refinement."""


class ParseError(BiorthError, ValueError):
    def __init__(self, message: str, token: str | None = None):
        super().__init__(message if token is None else f"{message}: {token!r}")
        self.token = token


class ValidationError(BiorthError, ValueError):
    pass
