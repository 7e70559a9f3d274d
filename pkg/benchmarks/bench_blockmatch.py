#!/usr/bin/env python3
"""Compare the compiled kernels against the pure fallback.

Times the SAD block search on a full-size clip and the SplitMix64 partial
shuffle that drives mask sampling, then checks both backends agree
bit-for-bit on the benchmark inputs.
"""

import argparse
import time

import numpy as np

from mgmask import _kernels_py

try:
    from mgmask import _kernels
except ImportError:
    _kernels = None


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        result = fn()
        times.append(time.perf_counter() - start)
    return min(times), result


def fmt(seconds):
    return f"{seconds * 1e3:8.1f} ms"


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--frames", type=int, default=16)
    parser.add_argument("--size", type=int, default=224)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    clip = rng.integers(0, 256, (args.frames, args.size, args.size), np.uint8)

    print(f"clip {args.frames}x{args.size}x{args.size}, "
          f"compiled extension {'present' if _kernels else 'MISSING'}\n")

    print(f"{'kernel':<28}{'fallback':>12}{'compiled':>12}{'speedup':>10}")
    for radius in (4, 7):
        t_py, ref = best_of(lambda: _kernels_py.sad_search(clip, radius, 8),
                            args.repeat)
        row = f"{f'sad_search r={radius}':<28}{fmt(t_py):>12}"
        if _kernels:
            t_cy, out = best_of(lambda: _kernels.sad_search(clip, radius, 8),
                                args.repeat)
            assert np.array_equal(ref, out), "backends disagree"
            row += f"{fmt(t_cy):>12}{t_py / t_cy:>9.1f}x"
        print(row)

    n, k, calls = 1568, 1176, 200

    def shuffle_many(impl):
        state = 0
        for _ in range(calls):
            state, picks = impl.shuffle_prefix(state, n, k)
        return picks

    t_py, ref = best_of(lambda: shuffle_many(_kernels_py), args.repeat)
    row = f"{f'shuffle_prefix x{calls}':<28}{fmt(t_py):>12}"
    if _kernels:
        t_cy, out = best_of(lambda: shuffle_many(_kernels), args.repeat)
        assert np.array_equal(ref, out), "backends disagree"
        row += f"{fmt(t_cy):>12}{t_py / t_cy:>9.1f}x"
    print(row)


if __name__ == "__main__":
    main()
