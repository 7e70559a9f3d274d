"""Raw video clip I/O.

Two on-disk carriers are supported: the RVC container (magic ``RVC1``,
four little-endian u32 dims, raw interleaved payload) and a Y4M subset
that extracts only the luma plane.  Frames are exported for inspection
as binary PGM/PPM.

Values are immutable by convention: operations return new objects and
never write through a ``Clip``'s array.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import (
    BadMagic,
    IndexOutOfRange,
    InvalidDims,
    MalformedFrameHeader,
    TruncatedFrame,
    TruncatedPayload,
    UnsupportedColorSpace,
)

RVC_MAGIC = b"RVC1"
_RVC_HEADER = struct.Struct("<4sIIII")

_Y4M_MAGIC = b"YUV4MPEG2"
_Y4M_420 = ("420", "420jpeg", "420mpeg2", "420paldv")

_LUMA_R, _LUMA_G, _LUMA_B = 0.299, 0.587, 0.114


@dataclass(eq=False)
class Clip:
    """Decoded raw video: uint8 samples, shape (frames, height, width, channels)."""

    data: np.ndarray

    def __post_init__(self):
        if self.data.dtype != np.uint8 or self.data.ndim != 4:
            raise InvalidDims(f"clip data must be uint8 with 4 axes, "
                              f"got {self.data.dtype} with {self.data.ndim}")
        t, h, w, c = self.data.shape
        if t < 1 or h < 1 or w < 1:
            raise InvalidDims(f"clip dims must be positive, got {t}x{h}x{w}")
        if c not in (1, 3):
            raise InvalidDims(f"channel count must be 1 or 3, got {c}")
        self.data = np.ascontiguousarray(self.data)

    @property
    def frames(self) -> int:
        return self.data.shape[0]

    @property
    def height(self) -> int:
        return self.data.shape[1]

    @property
    def width(self) -> int:
        return self.data.shape[2]

    @property
    def channels(self) -> int:
        return self.data.shape[3]


def parse_rvc(buf: bytes) -> Clip:
    """Parse an RVC container: 20-byte header plus raw payload."""
    if len(buf) < 4 or buf[:4] != RVC_MAGIC:
        raise BadMagic(f"not an RVC file (got {bytes(buf[:4])!r})")
    if len(buf) < _RVC_HEADER.size:
        raise TruncatedPayload(_RVC_HEADER.size, len(buf), what="RVC header")
    _, t, h, w, c = _RVC_HEADER.unpack_from(buf)
    if t == 0 or h == 0 or w == 0 or c not in (1, 3):
        raise InvalidDims(f"RVC header declares T={t} H={h} W={w} C={c}")
    expected = t * h * w * c
    got = len(buf) - _RVC_HEADER.size
    if got != expected:
        raise TruncatedPayload(expected, got)
    data = np.frombuffer(buf, np.uint8, count=expected, offset=_RVC_HEADER.size)
    return Clip(data.reshape(t, h, w, c).copy())


def write_rvc(clip: Clip) -> bytes:
    """Serialize a clip; round-trips byte-identically through parse_rvc."""
    header = _RVC_HEADER.pack(RVC_MAGIC, clip.frames, clip.height,
                              clip.width, clip.channels)
    return header + clip.data.tobytes()


def parse_y4m(buf: bytes) -> Clip:
    """Parse a Y4M stream, keeping only the luma plane of each frame.

    Supports the C420 family and Cmono; chroma planes are skipped without
    interpretation.  A stream with no C parameter defaults to C420.
    """
    if not buf.startswith(_Y4M_MAGIC):
        raise BadMagic(f"not a Y4M stream (got {bytes(buf[:9])!r})")
    nl = buf.find(b"\n")
    if nl < 0:
        raise MalformedFrameHeader("unterminated stream header")
    try:
        fields = buf[len(_Y4M_MAGIC):nl].decode("ascii").split(" ")
    except UnicodeDecodeError as exc:
        raise MalformedFrameHeader("stream header is not ASCII") from exc

    width = height = None
    colorspace = "420"
    for field in fields:
        if not field:
            continue
        key, val = field[0], field[1:]
        if key in ("W", "H"):
            try:
                size = int(val)
            except ValueError as exc:
                raise MalformedFrameHeader(f"bad {key} parameter {val!r}") from exc
            if key == "W":
                width = size
            else:
                height = size
        elif key == "C":
            colorspace = val
    if width is None or height is None or width < 1 or height < 1:
        raise MalformedFrameHeader("stream header must declare positive W and H")

    if colorspace == "mono":
        chroma_size = 0
    elif colorspace in _Y4M_420:
        if width % 2 or height % 2:
            raise UnsupportedColorSpace(
                f"C{colorspace} requires even dimensions, got {width}x{height}")
        chroma_size = 2 * (width // 2) * (height // 2)
    else:
        raise UnsupportedColorSpace(f"C{colorspace} (supported: C420*, Cmono)")

    luma_size = width * height
    planes = []
    pos = nl + 1
    while pos < len(buf):
        nl = buf.find(b"\n", pos)
        if nl < 0:
            raise MalformedFrameHeader("unterminated FRAME header")
        marker = buf[pos:nl]
        if marker != b"FRAME" and not marker.startswith(b"FRAME "):
            raise MalformedFrameHeader(f"expected FRAME marker, got {bytes(marker[:16])!r}")
        pos = nl + 1
        if len(buf) - pos < luma_size:
            raise TruncatedFrame(f"frame {len(planes)}: luma plane needs {luma_size} "
                                 f"bytes, {len(buf) - pos} left")
        planes.append(np.frombuffer(buf, np.uint8, count=luma_size, offset=pos))
        pos += luma_size
        if len(buf) - pos < chroma_size:
            raise TruncatedFrame(f"frame {len(planes) - 1}: chroma planes need "
                                 f"{chroma_size} bytes, {len(buf) - pos} left")
        pos += chroma_size
    if not planes:
        raise MalformedFrameHeader("stream contains no frames")
    data = np.stack(planes).reshape(len(planes), height, width, 1)
    return Clip(data.copy())


def to_luma(clip: Clip) -> Clip:
    """Reduce to one channel using BT.601 weights; identity for C=1.

    Each output sample is round(0.299 R + 0.587 G + 0.114 B), rounding
    half up, clamped to [0, 255].  Idempotent.
    """
    if clip.channels == 1:
        return clip
    rgb = clip.data.astype(np.float64)
    y = _LUMA_R * rgb[..., 0] + _LUMA_G * rgb[..., 1] + _LUMA_B * rgb[..., 2]
    y = np.clip(np.floor(y + 0.5), 0.0, 255.0).astype(np.uint8)
    return Clip(y[..., np.newaxis])


def write_ppm_frame(clip: Clip, frame_index: int) -> bytes:
    """Export one frame as binary PGM (C=1) or PPM (C=3), max value 255."""
    if not 0 <= frame_index < clip.frames:
        raise IndexOutOfRange(f"frame {frame_index} outside [0, {clip.frames})")
    kind = b"P5" if clip.channels == 1 else b"P6"
    header = kind + f"\n{clip.width} {clip.height}\n255\n".encode("ascii")
    return header + clip.data[frame_index].tobytes()
