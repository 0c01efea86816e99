"""Exception hierarchy.

Every error raised deliberately by the package derives from :class:`VqvscError`
so callers can catch library failures in one place. Most classes also derive
from the builtin they specialise (``ValueError``, ``IndexError``) so generic
handlers keep working.
"""


class VqvscError(Exception):
    """Base class for all package errors."""


# video_io
class TruncatedStream(VqvscError, ValueError):
    pass


class ZeroFrames(VqvscError, ValueError):
    pass


class InsufficientFrames(ZeroFrames):
    """Fewer than two frames; the scheduler pins the first and last frame."""


class EmptySequence(VqvscError, ValueError):
    pass


# shared shape / config errors
class DimensionMismatch(VqvscError, ValueError):
    pass


class BadConfig(VqvscError, ValueError):
    pass


class TooSmall(VqvscError, ValueError):
    pass


class BadBlockSize(BadConfig):
    pass


class ZeroGap(VqvscError, ValueError):
    pass


# keyframe
class SingularSystem(VqvscError, ValueError):
    pass


class NonPositiveSnr(VqvscError, ValueError):
    pass


class CountMismatch(VqvscError, ValueError):
    pass


class BudgetUnderflow(UserWarning):
    """Issued (as a warning) when the reference ratio is below the predicted one."""


# msvq
class NotPowerOfTwo(VqvscError, ValueError):
    pass


class IndexOutOfRange(VqvscError, IndexError):
    pass


class TooFewSamples(VqvscError, ValueError):
    pass


# index_select
class LengthMismatch(VqvscError, ValueError):
    pass


class EmptyInput(VqvscError, ValueError):
    pass


class ZeroDenominator(VqvscError, ZeroDivisionError):
    pass


# bitstream
class Inconsistent(VqvscError, ValueError):
    pass


class Overflow(VqvscError, ValueError):
    pass


class BadMagic(VqvscError, ValueError):
    pass


class BadVersion(VqvscError, ValueError):
    pass


class CrcMismatch(VqvscError, ValueError):
    pass


class Truncated(VqvscError, ValueError):
    pass


# phy / channel
class BadLength(VqvscError, ValueError):
    pass


class NonPositiveNoise(VqvscError, ValueError):
    pass


class ZeroReference(VqvscError, ValueError):
    pass


class BadProfile(VqvscError, ValueError):
    pass
