"""Token lattice geometry and the 3D mask container.

A clip of T x H x W pixels patched at (t, h, w) induces a lattice of
T/t x H/h x W/w tokens; masks are defined per token with an exact
masked-count contract, serialized bit-exactly in the MSK1 format.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BadMagic,
    IndexOutOfRange,
    InvalidDims,
    NotDivisible,
    SpecMismatch,
    TruncatedPayload,
)

DEFAULT_PATCH = (2, 16, 16)

MSK_MAGIC = b"MSK1"
_MSK_HEADER = struct.Struct("<4sIIII")


@dataclass(frozen=True)
class GridSpec:
    """Token lattice: t_slabs x rows x cols positions for patch (t, h, w)."""

    t_slabs: int
    rows: int
    cols: int
    patch: tuple[int, int, int] = DEFAULT_PATCH

    def __post_init__(self):
        if min(self.t_slabs, self.rows, self.cols) < 1 or min(self.patch) < 1:
            raise InvalidDims(f"grid {self.t_slabs}x{self.rows}x{self.cols} "
                              f"patch {self.patch} must be positive")

    @property
    def total(self) -> int:
        return self.t_slabs * self.rows * self.cols

    @property
    def clip_frames(self) -> int:
        return self.t_slabs * self.patch[0]

    @property
    def clip_height(self) -> int:
        return self.rows * self.patch[1]

    @property
    def clip_width(self) -> int:
        return self.cols * self.patch[2]


def grid_from_clip(frames: int, height: int, width: int,
                   patch: tuple[int, int, int] = DEFAULT_PATCH) -> GridSpec:
    """Token lattice induced by patching a clip; every axis must divide."""
    t, h, w = patch
    if min(t, h, w) < 1:
        raise InvalidDims(f"patch {patch} must be positive")
    if frames % t:
        raise NotDivisible("frames", frames, t)
    if height % h:
        raise NotDivisible("height", height, h)
    if width % w:
        raise NotDivisible("width", width, w)
    return GridSpec(frames // t, height // h, width // w, (t, h, w))


@dataclass(eq=False)
class Mask3D:
    """Bit-per-token mask with an exact masked-count contract.

    bits is bool (t_slabs, rows, cols), slab-major then row-major; the
    number of set bits always equals target_masked.
    """

    spec: GridSpec
    bits: np.ndarray
    target_masked: int

    def __post_init__(self):
        shape = (self.spec.t_slabs, self.spec.rows, self.spec.cols)
        if self.bits.dtype != np.bool_ or self.bits.shape != shape:
            raise InvalidDims(f"mask bits must be bool {shape}, "
                              f"got {self.bits.dtype} {self.bits.shape}")
        popcount = int(self.bits.sum())
        if popcount != self.target_masked:
            raise ValueError(f"mask holds {popcount} set bits but target_masked "
                             f"is {self.target_masked}")

    @property
    def popcount(self) -> int:
        return int(self.bits.sum())


@dataclass
class SlabBox:
    """One slab's mask rectangle in token units, plus its correction cells.

    added/removed record (row, col) cells the exact-count correction masked
    beyond the box or unmasked inside it.
    """

    x: int
    y: int
    w: int
    h: int
    added: list[tuple[int, int]] = field(default_factory=list)
    removed: list[tuple[int, int]] = field(default_factory=list)


BoxTrack = list[SlabBox]


def validate_boxtrack(track: BoxTrack, spec: GridSpec) -> None:
    if len(track) != spec.t_slabs:
        raise SpecMismatch(f"track has {len(track)} slabs, grid {spec.t_slabs}")
    for box in track:
        if not (0 <= box.x and box.x + box.w <= spec.cols
                and 0 <= box.y and box.y + box.h <= spec.rows
                and box.w >= 1 and box.h >= 1):
            raise IndexOutOfRange(f"box {(box.x, box.y, box.w, box.h)} outside "
                                  f"{spec.rows}x{spec.cols} grid")


def boxtrack_to_json(track: BoxTrack) -> list[dict]:
    return [
        {"slab": i, "x": b.x, "y": b.y, "w": b.w, "h": b.h,
         "added": [list(c) for c in b.added],
         "removed": [list(c) for c in b.removed]}
        for i, b in enumerate(track)
    ]


def split(clip_tokens: GridSpec, mask: Mask3D) -> tuple[np.ndarray, np.ndarray]:
    """Partition token indices into (visible, masked), both ascending."""
    if mask.spec != clip_tokens:
        raise SpecMismatch(f"mask built for {mask.spec}, asked about {clip_tokens}")
    flat = mask.bits.ravel()
    return np.flatnonzero(~flat), np.flatnonzero(flat)


def token_to_pixel_box(spec: GridSpec, slab: int, row: int, col: int):
    """Half-open pixel ranges ((t0, t1), (r0, r1), (c0, c1)) of one token."""
    if not (0 <= slab < spec.t_slabs and 0 <= row < spec.rows
            and 0 <= col < spec.cols):
        raise IndexOutOfRange(f"token ({slab}, {row}, {col}) outside "
                              f"{spec.t_slabs}x{spec.rows}x{spec.cols}")
    t, h, w = spec.patch
    return ((slab * t, slab * t + t),
            (row * h, row * h + h),
            (col * w, col * w + w))


def pixel_to_token(spec: GridSpec, frame: int, r: int, c: int) -> tuple[int, int, int]:
    """Token coordinates of the patch containing pixel (frame, r, c)."""
    if not (0 <= frame < spec.clip_frames and 0 <= r < spec.clip_height
            and 0 <= c < spec.clip_width):
        raise IndexOutOfRange(f"pixel ({frame}, {r}, {c}) outside clip "
                              f"{spec.clip_frames}x{spec.clip_height}x{spec.clip_width}")
    t, h, w = spec.patch
    return frame // t, r // h, c // w


def write_msk(mask: Mask3D) -> bytes:
    """Serialize to the MSK1 format: magic, LE u32 dims and target, then the
    bit plane LSB-first within each byte in token order."""
    header = _MSK_HEADER.pack(MSK_MAGIC, mask.spec.t_slabs, mask.spec.rows,
                              mask.spec.cols, mask.target_masked)
    packed = np.packbits(mask.bits.ravel(), bitorder="little")
    return header + packed.tobytes()


def read_msk(buf: bytes, patch: tuple[int, int, int] = DEFAULT_PATCH) -> Mask3D:
    """Parse an MSK1 file.  The format does not store the patch size, so the
    caller supplies it; bytes round-trip regardless."""
    if len(buf) < 4 or buf[:4] != MSK_MAGIC:
        raise BadMagic(f"not an MSK file (got {bytes(buf[:4])!r})")
    if len(buf) < _MSK_HEADER.size:
        raise TruncatedPayload(_MSK_HEADER.size, len(buf), what="MSK header")
    _, t_slabs, rows, cols, target = _MSK_HEADER.unpack_from(buf)
    if t_slabs == 0 or rows == 0 or cols == 0:
        raise InvalidDims(f"MSK header declares {t_slabs}x{rows}x{cols}")
    total = t_slabs * rows * cols
    expected = (total + 7) // 8
    got = len(buf) - _MSK_HEADER.size
    if got != expected:
        raise TruncatedPayload(expected, got)
    packed = np.frombuffer(buf, np.uint8, count=expected, offset=_MSK_HEADER.size)
    bits = np.unpackbits(packed, count=total, bitorder="little").astype(bool)
    spec = GridSpec(t_slabs, rows, cols, patch)
    return Mask3D(spec, bits.reshape(t_slabs, rows, cols), target)
