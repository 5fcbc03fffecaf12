"""Exception types raised across the package.

Every error derives from :class:`OpLabError`, itself a ``ValueError``, so
callers that only care about bad input can catch one type.
"""


class OpLabError(ValueError):
    pass


class ParseError(OpLabError):
    pass


class NonSquare(OpLabError):
    pass


class NotHermitian(OpLabError):
    pass


class NotPSD(OpLabError):
    pass


class NotPositiveDefinite(OpLabError):
    pass


class DimensionMismatch(OpLabError):
    pass


class KmaxTooSmall(OpLabError):
    pass


class NonFiniteFunctionValue(OpLabError):
    pass


class MassExceedsIdentity(OpLabError):
    pass


class NotPositiveInjective(OpLabError):
    pass


class AlphaBetaEqual(OpLabError):
    pass


class TooFewMoments(OpLabError):
    pass


class NotStieltjes(OpLabError):
    pass


class RankDeficient(OpLabError):
    """Fewer genuine atoms than requested; ``atoms`` holds the reduced set."""

    def __init__(self, message, atoms):
        super().__init__(message)
        self.atoms = atoms


class MajorizationFails(OpLabError):
    pass


class NotContraction(OpLabError):
    pass


class HorizonTooSmall(OpLabError):
    pass


class ShiftFactorNotUnit(OpLabError):
    pass


class TruncationTooSmall(OpLabError):
    pass


class NotNormal(OpLabError):
    pass


class NotCommuting(OpLabError):
    pass


class GapTooSmall(OpLabError):
    pass


class ExponentTooSmall(OpLabError):
    pass


class UnknownTheorem(OpLabError):
    pass
