"""Fallback implementations of the hot kernels.

Used when the compiled extension is unavailable (or when
``MGMASK_PURE_PYTHON`` is set).  Must stay bit-identical to
``mgmask._kernels``; the test suite compares the two backends directly.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


def sad_search(frames: np.ndarray, radius: int, block: int) -> np.ndarray:
    """Exhaustive-window SAD block search against the previous frame.

    For every block of every frame t >= 1, picks the (dx, dy) in
    [-radius, radius]^2 minimizing the SAD between the block at frame t
    and the source region at (bx - dx, by - dy) in frame t - 1; source
    regions crossing the frame boundary are skipped.  Ties break on
    smallest |dx|+|dy|, then smallest dy, then smallest dx.  Frame 0 is
    all zeros.  Returns int16 (T, Hb, Wb, 2) storing (dx, dy).
    """
    t_count, height, width = frames.shape
    hb, wb = height // block, width // block
    out = np.zeros((t_count, hb, wb, 2), np.int16)
    if t_count == 1:
        return out

    cur = frames[1:].astype(np.int16)
    prev = frames[:-1].astype(np.int16)
    npair = t_count - 1
    best_sad = np.full((npair, hb, wb), np.iinfo(np.int64).max, np.int64)
    best_cost = np.full((npair, hb, wb), np.iinfo(np.int32).max, np.int32)
    best_dy = np.zeros((npair, hb, wb), np.int16)
    best_dx = np.zeros((npair, hb, wb), np.int16)

    for dy in range(-radius, radius + 1):
        # block top row `by` is valid iff the source rows by-dy .. by-dy+block
        # stay inside the frame
        br_lo = (max(0, dy) + block - 1) // block
        br_hi = min(height - block, height - block + dy) // block
        if br_lo > br_hi:
            continue
        y0, y1 = br_lo * block, br_hi * block + block
        for dx in range(-radius, radius + 1):
            bc_lo = (max(0, dx) + block - 1) // block
            bc_hi = min(width - block, width - block + dx) // block
            if bc_lo > bc_hi:
                continue
            x0, x1 = bc_lo * block, bc_hi * block + block
            diff = np.abs(cur[:, y0:y1, x0:x1]
                          - prev[:, y0 - dy:y1 - dy, x0 - dx:x1 - dx])
            sad = diff.reshape(npair, br_hi - br_lo + 1, block,
                               bc_hi - bc_lo + 1, block).sum((2, 4), dtype=np.int64)
            cost = abs(dx) + abs(dy)

            vs = (slice(None), slice(br_lo, br_hi + 1), slice(bc_lo, bc_hi + 1))
            tie = sad == best_sad[vs]
            better = sad < best_sad[vs]
            better |= tie & (cost < best_cost[vs])
            tie &= cost == best_cost[vs]
            better |= tie & ((dy < best_dy[vs])
                             | ((dy == best_dy[vs]) & (dx < best_dx[vs])))
            best_sad[vs] = np.where(better, sad, best_sad[vs])
            best_cost[vs] = np.where(better, cost, best_cost[vs])
            best_dy[vs] = np.where(better, dy, best_dy[vs])
            best_dx[vs] = np.where(better, dx, best_dx[vs])

    out[1:, :, :, 0] = best_dx
    out[1:, :, :, 1] = best_dy
    return out


def shuffle_prefix(state: int, n: int, k: int) -> tuple[int, np.ndarray]:
    """First k entries of a SplitMix64-driven Fisher-Yates shuffle of range(n).

    Bounded draws use rejection sampling (values at or above the largest
    multiple of the span are re-drawn), and a span of 1 consumes no draw.
    Returns the advanced state and an int64 array of the k picks.
    """
    arr = list(range(n))
    s = state & MASK64
    for i in range(k):
        span = n - i
        if span > 1:
            rem = (1 << 64) % span
            while True:
                s = (s + _GOLDEN) & MASK64
                z = s
                z = ((z ^ (z >> 30)) * _MIX1) & MASK64
                z = ((z ^ (z >> 27)) * _MIX2) & MASK64
                r = z ^ (z >> 31)
                if rem == 0 or r < (1 << 64) - rem:
                    break
            j = i + r % span
            arr[i], arr[j] = arr[j], arr[i]
    return s, np.array(arr[:k], dtype=np.int64)
