# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: SAD block search and the SplitMix64 partial shuffle.

Bit-identical to mgmask._kernels_py; the test suite compares both backends.
"""

import numpy as np

cimport numpy as cnp
from libc.stdint cimport int16_t, int64_t, uint8_t, uint64_t

cnp.import_array()

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15
cdef uint64_t MIX1 = 0xBF58476D1CE4E5B9
cdef uint64_t MIX2 = 0x94D049BB133111EB


def sad_search(const uint8_t[:, :, ::1] frames, int radius, int block):
    """Exhaustive-window SAD search; see _kernels_py.sad_search for semantics."""
    cdef Py_ssize_t t_count = frames.shape[0]
    cdef Py_ssize_t height = frames.shape[1]
    cdef Py_ssize_t width = frames.shape[2]
    cdef Py_ssize_t hb = height // block
    cdef Py_ssize_t wb = width // block
    out_arr = np.zeros((t_count, hb, wb, 2), dtype=np.int16)
    cdef int16_t[:, :, :, ::1] out = out_arr
    cdef Py_ssize_t t, br, bc, r, c
    cdef int by, bx, dy, dx, sy, sx, cost, diff
    cdef int best_cost, best_dy, best_dx
    cdef int64_t sad, best_sad
    cdef bint better

    with nogil:
        for t in range(1, t_count):
            for br in range(hb):
                by = <int> (br * block)
                for bc in range(wb):
                    bx = <int> (bc * block)
                    best_sad = -1
                    best_cost = 0
                    best_dy = 0
                    best_dx = 0
                    for dy in range(-radius, radius + 1):
                        sy = by - dy
                        if sy < 0 or sy + block > height:
                            continue
                        for dx in range(-radius, radius + 1):
                            sx = bx - dx
                            if sx < 0 or sx + block > width:
                                continue
                            sad = 0
                            for r in range(block):
                                for c in range(block):
                                    diff = (<int> frames[t, by + r, bx + c]
                                            - <int> frames[t - 1, sy + r, sx + c])
                                    sad += diff if diff >= 0 else -diff
                                # partial sum already beats best: candidate loses
                                if best_sad >= 0 and sad > best_sad:
                                    break
                            cost = (dx if dx >= 0 else -dx) + (dy if dy >= 0 else -dy)
                            if best_sad < 0:
                                better = True
                            elif sad != best_sad:
                                better = sad < best_sad
                            elif cost != best_cost:
                                better = cost < best_cost
                            elif dy != best_dy:
                                better = dy < best_dy
                            else:
                                better = dx < best_dx
                            if better:
                                best_sad = sad
                                best_cost = cost
                                best_dy = dy
                                best_dx = dx
                    out[t, br, bc, 0] = <int16_t> best_dx
                    out[t, br, bc, 1] = <int16_t> best_dy
    return out_arr


def shuffle_prefix(uint64_t state, Py_ssize_t n, Py_ssize_t k):
    """SplitMix64 partial Fisher-Yates; see _kernels_py.shuffle_prefix."""
    out_arr = np.arange(n, dtype=np.int64)
    cdef int64_t[::1] arr = out_arr
    cdef uint64_t s = state
    cdef uint64_t z, r, rem, span
    cdef Py_ssize_t i, j
    cdef int64_t tmp
    for i in range(k):
        span = <uint64_t> (n - i)
        if span > 1:
            rem = (0 - span) % span
            while True:
                s = s + GOLDEN
                z = s
                z = (z ^ (z >> 30)) * MIX1
                z = (z ^ (z >> 27)) * MIX2
                r = z ^ (z >> 31)
                if rem == 0 or r < (0 - rem):
                    break
            j = i + <Py_ssize_t> (r % span)
            tmp = arr[i]
            arr[i] = arr[j]
            arr[j] = tmp
    return s, out_arr[:k].copy()
