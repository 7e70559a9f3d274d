"""Block-granularity motion vector maps.

Vectors live on an 8x8-pixel block lattice, matching the granularity
codecs store them at.  ``estimate_mv`` computes them by exhaustive-window
SAD block matching; externally extracted maps can be loaded from the MVF
container instead.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from . import kernels
from .clipio import Clip
from .errors import (
    BadMagic,
    DimMismatch,
    DimsNotBlockAligned,
    EmptySearchWindow,
    InvalidDims,
    TruncatedPayload,
)

BLOCK = 8
DEFAULT_SEARCH_RADIUS = 7

MVF_MAGIC = b"MVF1"
_MVF_HEADER = struct.Struct("<4sIII")


@dataclass(eq=False)
class MotionField:
    """Per-frame block displacement map: int16 (dx, dy), shape (T, Hb, Wb, 2).

    Vector (dx, dy) at frame t means the block's content came from offset
    (-dx, -dy) in frame t-1.  Frame 0 has no predecessor and carries zeros.
    """

    data: np.ndarray

    def __post_init__(self):
        if (self.data.ndim != 4 or self.data.shape[3] != 2
                or self.data.dtype != np.int16):
            raise InvalidDims("motion field must be int16 with shape (T, Hb, Wb, 2)")
        if min(self.data.shape[:3]) < 1:
            raise InvalidDims(f"motion field dims must be positive, "
                              f"got {self.data.shape[:3]}")
        self.data = np.ascontiguousarray(self.data)

    @property
    def frames(self) -> int:
        return self.data.shape[0]

    @property
    def block_rows(self) -> int:
        return self.data.shape[1]

    @property
    def block_cols(self) -> int:
        return self.data.shape[2]


@dataclass(eq=False)
class UpsampledField:
    """Pixel-resolution displacement map; pixel (r, c) holds the vector of
    block (r // 8, c // 8)."""

    data: np.ndarray

    @property
    def frames(self) -> int:
        return self.data.shape[0]

    @property
    def height(self) -> int:
        return self.data.shape[1]

    @property
    def width(self) -> int:
        return self.data.shape[2]


def estimate_mv(clip: Clip, search_radius: int = DEFAULT_SEARCH_RADIUS,
                block: int = BLOCK) -> MotionField:
    """Estimate block motion against the previous frame by exhaustive SAD search.

    Candidates whose source region crosses the frame boundary are skipped;
    ties break on smallest |dx|+|dy|, then smallest dy, then smallest dx,
    so every implementation of this search produces the identical field.
    """
    if clip.channels != 1:
        raise ValueError("estimate_mv needs a single-channel clip; use to_luma first")
    if search_radius < 0:
        raise ValueError(f"search_radius must be >= 0, got {search_radius}")
    if block < 1:
        raise ValueError(f"block must be >= 1, got {block}")
    if block > clip.height or block > clip.width:
        raise EmptySearchWindow(f"block {block} exceeds frame "
                                f"{clip.height}x{clip.width}")
    if clip.height % block or clip.width % block:
        raise DimsNotBlockAligned(f"{clip.height}x{clip.width} not a multiple "
                                  f"of block {block}")
    frames = np.ascontiguousarray(clip.data[..., 0])
    return MotionField(kernels.sad_search(frames, search_radius, block))


def upsample_nearest(mf: MotionField, height: int, width: int) -> UpsampledField:
    """Nearest-neighbor upsampling of the block map to pixel resolution."""
    if height != mf.block_rows * BLOCK or width != mf.block_cols * BLOCK:
        raise DimMismatch(f"target {height}x{width} does not match "
                          f"{mf.block_rows}x{mf.block_cols} blocks of {BLOCK}px")
    data = np.repeat(np.repeat(mf.data, BLOCK, axis=1), BLOCK, axis=2)
    return UpsampledField(data)


def magnitude(field: MotionField | UpsampledField) -> np.ndarray:
    """Euclidean vector length per cell; float64, same leading shape."""
    v = field.data.astype(np.int64)
    return np.sqrt((v[..., 0] ** 2 + v[..., 1] ** 2).astype(np.float64))


def write_mvf(mf: MotionField) -> bytes:
    """Serialize to the MVF container: magic, LE u32 T/Hb/Wb, LE i16 pairs."""
    header = _MVF_HEADER.pack(MVF_MAGIC, mf.frames, mf.block_rows, mf.block_cols)
    return header + mf.data.astype("<i2").tobytes()


def read_mvf(buf: bytes) -> MotionField:
    """Parse an MVF container; round-trips byte-identically through write_mvf."""
    if len(buf) < 4 or buf[:4] != MVF_MAGIC:
        raise BadMagic(f"not an MVF file (got {bytes(buf[:4])!r})")
    if len(buf) < _MVF_HEADER.size:
        raise TruncatedPayload(_MVF_HEADER.size, len(buf), what="MVF header")
    _, t, hb, wb = _MVF_HEADER.unpack_from(buf)
    if t == 0 or hb == 0 or wb == 0:
        raise InvalidDims(f"MVF header declares T={t} Hb={hb} Wb={wb}")
    expected = t * hb * wb * 2 * 2
    got = len(buf) - _MVF_HEADER.size
    if got != expected:
        raise TruncatedPayload(expected, got)
    data = np.frombuffer(buf, "<i2", count=t * hb * wb * 2, offset=_MVF_HEADER.size)
    return MotionField(data.reshape(t, hb, wb, 2).astype(np.int16))
