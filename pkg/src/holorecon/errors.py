"""Exception types shared across holorecon."""


class HoloreconError(Exception):
    """Base class for all library errors."""


class TruncationUnavailable(HoloreconError):
    pass


class DuplicateNode(HoloreconError, ZeroDivisionError):
    """Two interpolation nodes are closer than the distinctness threshold."""


class OverlapError(HoloreconError, ValueError):
    pass


class PoleTooClose(HoloreconError, ValueError):
    pass


class GapError(HoloreconError, ValueError):
    pass


class WitnessOrderError(HoloreconError, ValueError):
    pass


class DensityError(HoloreconError, ValueError):
    pass


class IndexOverflow(HoloreconError, IndexError):
    pass


class PrecisionFailure(HoloreconError, ArithmeticError):
    """Results at two working precisions disagree even at the precision cap."""


class IdentityViolation(HoloreconError, AssertionError):
    """The E_N - R_N + tail decomposition failed to reproduce f.

    This is a bug signal, not a mathematical verdict.
    """


class PrecisionWarning(UserWarning):
    pass
