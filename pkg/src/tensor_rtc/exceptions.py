"""Exception hierarchy for tensor_rtc."""


class TensorRTCError(Exception):
    """Base class for every error raised by this package."""


class DimensionMismatch(TensorRTCError, ValueError):
    pass


class ImaginaryResidueTooLarge(TensorRTCError, ArithmeticError):
    """The inverse DFT produced a non-negligible imaginary part.

    Every operation of the t-product algebra preserves conjugate symmetry of
    the spectrum of a real tensor, so a large residue means some spectral
    edit broke that symmetry.
    """


class NumericalFailure(TensorRTCError, ArithmeticError):
    pass


class NonFiniteIterate(NumericalFailure):
    pass


class InvalidRank(TensorRTCError, ValueError):
    pass


class InvalidRate(TensorRTCError, ValueError):
    pass


class InvalidSpec(TensorRTCError, ValueError):
    pass


class IndexOutOfBounds(TensorRTCError, IndexError):
    pass


class ZeroTensor(TensorRTCError, ValueError):
    pass


class ZeroReference(ZeroTensor):
    pass


class EmptySet(TensorRTCError, ValueError):
    pass


class IdenticalInputs(TensorRTCError, ValueError):
    pass


class FormatError(TensorRTCError, ValueError):
    """Base class for file-format errors."""


class BadMagic(FormatError):
    pass


class TruncatedPayload(FormatError):
    pass


class DimOverflow(FormatError):
    pass


class UnsupportedFormat(FormatError):
    pass
