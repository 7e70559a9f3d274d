"""Deterministic synthetic clips and fields shared by the tests."""

import numpy as np

from mgmask import Clip, MotionField


def random_clip(seed: int, frames: int, height: int, width: int,
                channels: int = 1) -> Clip:
    rng = np.random.default_rng(seed)
    return Clip(rng.integers(0, 256, (frames, height, width, channels),
                             dtype=np.uint8))


def shifted_pair_clip(seed: int, height: int, width: int,
                      dx: int, dy: int) -> Clip:
    """Two frames; frame 1 is frame 0 circularly shifted by (dx, dy) pixels."""
    rng = np.random.default_rng(seed)
    base = rng.integers(0, 256, (height, width), np.uint8)
    moved = np.roll(base, (dy, dx), axis=(0, 1))
    return Clip(np.stack([base, moved])[..., None])


def random_field(seed: int, frames: int, block_rows: int, block_cols: int,
                 span: int = 9) -> MotionField:
    """Random vectors in [-span, span]^2 with the zero frame-0 convention."""
    rng = np.random.default_rng(seed)
    data = rng.integers(-span, span + 1, (frames, block_rows, block_cols, 2),
                        dtype=np.int16)
    data[0] = 0
    return MotionField(data)


def sprite_clip(seed: int, frames: int = 16, size: int = 224,
                sprite: int = 64) -> Clip:
    """One textured square sprite drifting over a static textured background.

    Integer velocity up to 3 px/frame per axis (never zero on both axes),
    bouncing off the frame borders.
    """
    rng = np.random.default_rng(seed)
    bg = rng.integers(0, 256, (size, size), np.uint8)
    tex = rng.integers(0, 256, (sprite, sprite), np.uint8)
    while True:
        vx, vy = int(rng.integers(-3, 4)), int(rng.integers(-3, 4))
        if vx or vy:
            break
    x = int(rng.integers(0, size - sprite + 1))
    y = int(rng.integers(0, size - sprite + 1))
    out = np.empty((frames, size, size), np.uint8)
    for f in range(frames):
        plane = bg.copy()
        plane[y:y + sprite, x:x + sprite] = tex
        out[f] = plane
        if not 0 <= x + vx <= size - sprite:
            vx = -vx
        if not 0 <= y + vy <= size - sprite:
            vy = -vy
        x += vx
        y += vy
    return Clip(out[..., None])
