"""Independent reference implementations the tests check the library against.

Everything here re-derives results straight from the definitions with
explicit loops and pixel-level fields, and shares no code with the package.
"""

import numpy as np


def sad_brute_force(frames: np.ndarray, radius: int, block: int = 8) -> np.ndarray:
    """Reference block matcher.

    Per block, enumerate every candidate whose source region stays inside
    the previous frame and take the lexicographic minimum of
    (SAD, |dx|+|dy|, dy, dx).  Returns int16 (T, Hb, Wb, 2) of (dx, dy).
    """
    t_count, height, width = frames.shape
    hb, wb = height // block, width // block
    out = np.zeros((t_count, hb, wb, 2), np.int16)
    f = frames.astype(np.int64)
    for t in range(1, t_count):
        for br in range(hb):
            for bc in range(wb):
                by, bx = br * block, bc * block
                cur = f[t, by:by + block, bx:bx + block]
                candidates = []
                for dy in range(-radius, radius + 1):
                    sy = by - dy
                    if sy < 0 or sy + block > height:
                        continue
                    for dx in range(-radius, radius + 1):
                        sx = bx - dx
                        if sx < 0 or sx + block > width:
                            continue
                        sad = int(np.abs(
                            cur - f[t - 1, sy:sy + block, sx:sx + block]).sum())
                        candidates.append((sad, abs(dx) + abs(dy), dy, dx))
                _, _, dy, dx = min(candidates)
                out[t, br, bc] = (dx, dy)
    return out


def fully_in_window_blocks(height: int, width: int, radius: int,
                           block: int = 8) -> tuple[slice, slice]:
    """Block index slices whose whole search window stays inside the frame."""
    lo_r = (radius + block - 1) // block
    hi_r = (height - block - radius) // block
    lo_c = (radius + block - 1) // block
    hi_c = (width - block - radius) // block
    return slice(lo_r, hi_r + 1), slice(lo_c, hi_c + 1)


def pixel_saliency_maps(mv_data: np.ndarray, t_patch: int) -> np.ndarray:
    """Slab-mean pixel magnitude computed the literal way: upsample the
    vectors to pixel resolution, take magnitudes, average per slab."""
    t_count, hb, wb, _ = mv_data.shape
    up = np.repeat(np.repeat(mv_data.astype(np.float64), 8, axis=1), 8, axis=2)
    mag = np.sqrt(up[..., 0] ** 2 + up[..., 1] ** 2)
    t_slabs = t_count // t_patch
    return mag.reshape(t_slabs, t_patch, hb * 8, wb * 8).mean(axis=1)


def argmax_token(saliency_map: np.ndarray, h: int, w: int) -> tuple[int, int]:
    """Token (row, col) of the raster-first maximum pixel of one slab map."""
    flat = int(np.argmax(saliency_map))
    r, c = divmod(flat, saliency_map.shape[1])
    return r // h, c // w


def token_saliency_pixel_path(mv_data: np.ndarray, t_patch: int,
                              h: int, w: int) -> np.ndarray:
    """Per-token mean of the pixel saliency maps."""
    maps = pixel_saliency_maps(mv_data, t_patch)
    ts, hp, wp = maps.shape
    return maps.reshape(ts, hp // h, h, wp // w, w).mean(axis=(2, 4))


def connected_4(plane: np.ndarray) -> bool:
    """True iff the set bits of a 2D bool plane form one 4-connected component."""
    cells = {(int(r), int(c)) for r, c in np.argwhere(plane)}
    if not cells:
        return True
    stack = [next(iter(cells))]
    seen = set(stack)
    while stack:
        r, c = stack.pop()
        for nr, nc in ((r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1)):
            if (nr, nc) in cells and (nr, nc) not in seen:
                seen.add((nr, nc))
                stack.append((nr, nc))
    return seen == cells
