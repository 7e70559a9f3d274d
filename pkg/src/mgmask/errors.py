"""Typed errors raised across the toolkit.

Every parser and pipeline failure maps to one of these classes so callers
can distinguish bad inputs from bugs; none of the library code raises bare
exceptions for contract violations.
"""


class MgmaskError(Exception):
    """Base class for all toolkit errors."""


class BadMagic(MgmaskError, ValueError):
    """Input does not start with the expected format magic."""


class TruncatedPayload(MgmaskError, ValueError):
    """Payload length does not match the header-declared size."""

    def __init__(self, expected: int, got: int, what: str = "payload"):
        self.expected = expected
        self.got = got
        super().__init__(f"{what}: expected {expected} bytes, got {got}")


class InvalidDims(MgmaskError, ValueError):
    """Header declares impossible dimensions (zero axis or bad channel count)."""


class UnsupportedColorSpace(MgmaskError, ValueError):
    """Y4M color space outside the supported C420*/Cmono subset."""


class MalformedFrameHeader(MgmaskError, ValueError):
    """Y4M stream or FRAME header line cannot be parsed."""


class TruncatedFrame(MgmaskError, ValueError):
    """Y4M frame payload ends before the declared plane sizes."""


class IndexOutOfRange(MgmaskError, IndexError):
    """Frame, token, or pixel coordinate outside its valid range."""


class DimsNotBlockAligned(MgmaskError, ValueError):
    """Clip height/width is not a multiple of the motion block size."""


class EmptySearchWindow(MgmaskError, ValueError):
    """Motion block larger than the frame; no candidate positions exist."""


class DimMismatch(MgmaskError, ValueError):
    """Two structures that must share dimensions do not."""


class NotDivisible(MgmaskError, ValueError):
    """Clip extent not divisible by the patch size along one axis."""

    def __init__(self, axis: str, extent: int, patch: int):
        self.axis = axis
        super().__init__(f"{axis} extent {extent} not divisible by patch size {patch}")


class SpecMismatch(MgmaskError, ValueError):
    """Mask and token grid were built for different lattices."""


class MotionDimsMismatch(MgmaskError, ValueError):
    """Motion field dimensions inconsistent with the token grid's source clip."""


class TargetExceedsGrid(MgmaskError, ValueError):
    """Requested masked count outside [0, total tokens]."""


class NoInsideBlocks(MgmaskError, ValueError):
    """Box annotations cover no motion block centers."""


class NoOutsideBlocks(MgmaskError, ValueError):
    """Box annotations cover every motion block center."""


class MissingMotion(MgmaskError, ValueError):
    """Motion-guided generator requested without a motion field."""


class MissingAnnotation(MgmaskError, ValueError):
    """Saliency scoring requested without a box annotation file."""
