"""Mask generators and the exact-count correction procedure.

Six strategies over one token lattice: per-slab random, static tube,
static block, simulated-motion (dense rectangle trajectory or scattered
cells drifting with it), and motion-guided (rectangle re-centered on the
strongest motion per slab, or the top-ranked cells by motion magnitude).
Every generator ends on the same hard contract: the number of set bits
equals round(gamma * total tokens) exactly.

All randomness flows through the SplitMix64 stream below, so a seed fully
determines the mask bytes on every platform.  Draw order is part of each
generator's contract and is documented on it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import MotionDimsMismatch, TargetExceedsGrid
from .motionfield import BLOCK, MotionField, magnitude
from .tokengrid import BoxTrack, GridSpec, Mask3D, SlabBox, pixel_to_token, validate_boxtrack

MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


def splitmix64(value: int) -> int:
    """One SplitMix64 output for a 64-bit input (the first draw of Rng(value))."""
    s = (value + _GOLDEN) & MASK64
    z = ((s ^ (s >> 30)) * _MIX1) & MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & MASK64
    return z ^ (z >> 31)


def derive_seed(seed: int, index: int) -> int:
    """Per-item seed for batch runs: seed XOR splitmix64(index)."""
    return (seed ^ splitmix64(index)) & MASK64


class Rng:
    """Deterministic SplitMix64 stream with bias-free bounded draws.

    below(n) rejection-samples the 64-bit output (draws at or above the
    largest multiple of n are discarded), eliminating modulo bias; a span
    of 1 returns 0 without consuming a draw.
    """

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        s = (self.state + _GOLDEN) & MASK64
        self.state = s
        z = ((s ^ (s >> 30)) * _MIX1) & MASK64
        z = ((z ^ (z >> 27)) * _MIX2) & MASK64
        return z ^ (z >> 31)

    def below(self, n: int) -> int:
        if n < 1:
            raise ValueError(f"below() needs n >= 1, got {n}")
        if n == 1:
            return 0
        rem = (1 << 64) % n
        while True:
            r = self.next_u64()
            if rem == 0 or r < (1 << 64) - rem:
                return r % n

    def between(self, lo: int, hi: int) -> int:
        """Uniform integer in [lo, hi], inclusive."""
        return lo + self.below(hi - lo + 1)

    def shuffle(self, seq: list) -> None:
        """In-place Fisher-Yates, descending index."""
        for i in range(len(seq) - 1, 0, -1):
            j = self.below(i + 1)
            seq[i], seq[j] = seq[j], seq[i]

    def shuffle_prefix(self, n: int, k: int) -> np.ndarray:
        """First k entries of a partial Fisher-Yates shuffle of range(n)."""
        self.state, picks = kernels.shuffle_prefix(self.state, n, k)
        return picks


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


@dataclass(frozen=True)
class MaskParams:
    """Generator parameters; gamma is the masked fraction of the lattice."""

    gamma: float = 0.75
    velocity_cap: int = 1
    jitter_cap: int = 1
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.gamma <= 1:
            raise ValueError(f"gamma must be in (0, 1], got {self.gamma}")
        if self.velocity_cap < 0 or self.jitter_cap < 0:
            raise ValueError("velocity_cap and jitter_cap must be >= 0")


def target_count(spec: GridSpec, gamma: float) -> int:
    """Exact masked-token count: round-half-up of gamma * total."""
    return round_half_up(gamma * spec.total)


def slab_quota(spec: GridSpec, gamma: float) -> int:
    """Per-slab masked count before global correction."""
    return round_half_up(gamma * spec.rows * spec.cols)


def zero_sum_jitter(rng: Rng, length: int, cap: int) -> list[int]:
    """Shuffled size-jitter sequence with an exact zero sum.

    Balanced +k/-k pairs (k cycling 1..cap) fill the sequence, zeros pad
    the remainder, and a full shuffle orders them.
    """
    vals: list[int] = []
    if cap > 0:
        k = 1
        while len(vals) + 2 <= length:
            vals.extend((k, -k))
            k = k + 1 if k < cap else 1
    vals.extend([0] * (length - len(vals)))
    rng.shuffle(vals)
    return vals


def _clamp(v: int, lo: int, hi: int) -> int:
    return lo if v < lo else hi if v > hi else v


def _init_box(rng: Rng, spec: GridSpec, gamma: float) -> tuple[int, int, int, int]:
    # side = round(sqrt(gamma * rows * cols)), clamped per axis to the grid;
    # position drawn x first, then y
    side = round_half_up(math.sqrt(gamma * spec.rows * spec.cols))
    w0 = _clamp(side, 1, spec.cols)
    h0 = _clamp(side, 1, spec.rows)
    x0 = rng.below(spec.cols - w0 + 1)
    y0 = rng.below(spec.rows - h0 + 1)
    return x0, y0, w0, h0


# --- perimeter correction ---------------------------------------------------

def _ring_path(x: int, y: int, w: int, h: int, ring: int):
    """Cells of the rectangle ring `ring` steps outside box (x, y, w, h),
    clockwise.  Starts directly above the box's top-left corner and visits
    each corner after an adjacent edge cell, so any prefix of additions
    stays 4-connected to the box."""
    lef, top = x - ring, y - ring
    rig, bot = x + w - 1 + ring, y + h - 1 + ring
    for c in range(lef + 1, rig):
        yield top, c
    yield top, rig
    for r in range(top + 1, bot):
        yield r, rig
    yield bot, rig
    for c in range(rig - 1, lef, -1):
        yield bot, c
    yield bot, lef
    for r in range(bot - 1, top, -1):
        yield r, lef
    yield top, lef


def _boundary_path(x: int, y: int, w: int, h: int):
    """Cells of the box's own boundary, clockwise from the top-left corner."""
    if h == 1:
        yield from ((y, c) for c in range(x, x + w))
        return
    if w == 1:
        yield from ((r, x) for r in range(y, y + h))
        return
    for c in range(x, x + w):
        yield y, c
    for r in range(y + 1, y + h):
        yield r, x + w - 1
    for c in range(x + w - 2, x - 1, -1):
        yield y + h - 1, c
    for r in range(y + h - 2, y, -1):
        yield r, x


class _Exhausted(Exception):
    pass


class _BoxCursor:
    """Deterministic source of correction cells for one slab.

    Additions walk outward rings around the box; removals peel the box
    boundary inward.  A protected cell (the motion argmax for the guided
    generator) is removed only as a last resort.
    """

    def __init__(self, bits2d: np.ndarray, box: tuple[int, int, int, int],
                 rows: int, cols: int, protect: tuple[int, int] | None = None):
        self._bits = bits2d
        self._rows = rows
        self._cols = cols
        self._protect = protect
        self._adds = self._addition_order(box)
        self._rems = self._removal_order(box)

    def _addition_order(self, box):
        x, y, w, h = box
        for ring in range(1, max(self._rows, self._cols) + 1):
            for r, c in _ring_path(x, y, w, h, ring):
                if 0 <= r < self._rows and 0 <= c < self._cols:
                    yield r, c
        for r in range(self._rows):
            for c in range(self._cols):
                yield r, c

    def _removal_order(self, box):
        x, y, w, h = box
        while w > 0 and h > 0:
            yield from _boundary_path(x, y, w, h)
            x, y, w, h = x + 1, y + 1, w - 2, h - 2
        for r in range(self._rows):
            for c in range(self._cols):
                yield r, c

    def add_one(self) -> tuple[int, int]:
        for r, c in self._adds:
            if not self._bits[r, c]:
                self._bits[r, c] = True
                return r, c
        raise _Exhausted

    def remove_one(self) -> tuple[int, int]:
        for r, c in self._rems:
            if self._bits[r, c] and (r, c) != self._protect:
                self._bits[r, c] = False
                return r, c
        if self._protect is not None and self._bits[self._protect]:
            self._bits[self._protect] = False
            return self._protect
        raise _Exhausted


def _round_robin(cursors, added, removed, residue: int) -> None:
    # distribute the global residue one cell per slab, starting from slab 0
    t_slabs = len(cursors)
    i = 0
    stuck = 0
    while residue != 0:
        tau = i % t_slabs
        try:
            if residue > 0:
                added[tau].append(cursors[tau].add_one())
                residue -= 1
            else:
                removed[tau].append(cursors[tau].remove_one())
                residue += 1
            stuck = 0
        except _Exhausted:
            stuck += 1
            if stuck > t_slabs:
                raise RuntimeError("count correction ran out of cells") from None
        i += 1


def _dense_correct(bits: np.ndarray, boxes, spec: GridSpec, gamma: float,
                   target: int, protect=None):
    """Per-slab quota correction on box perimeters, then global round-robin."""
    quota = slab_quota(spec, gamma)
    cursors = [
        _BoxCursor(bits[tau], boxes[tau], spec.rows, spec.cols,
                   None if protect is None else protect[tau])
        for tau in range(spec.t_slabs)
    ]
    added = [[] for _ in range(spec.t_slabs)]
    removed = [[] for _ in range(spec.t_slabs)]
    for tau, cursor in enumerate(cursors):
        count = int(bits[tau].sum())
        while count < quota:
            added[tau].append(cursor.add_one())
            count += 1
        while count > quota:
            removed[tau].append(cursor.remove_one())
            count -= 1
    _round_robin(cursors, added, removed, target - int(bits.sum()))
    return added, removed


def _uniform_correct(bits: np.ndarray, target: int, rng: Rng):
    """Fix the total count with uniform draws over eligible cells."""
    flat = bits.reshape(-1)
    count = int(flat.sum())
    added = removed = np.empty(0, dtype=np.int64)
    if count < target:
        eligible = np.flatnonzero(~flat)
        added = eligible[rng.shuffle_prefix(len(eligible), target - count)]
        flat[added] = True
    elif count > target:
        eligible = np.flatnonzero(flat)
        removed = eligible[rng.shuffle_prefix(len(eligible), count - target)]
        flat[removed] = False
    return added, removed


def _split_by_slab(flat_indices: np.ndarray, spec: GridSpec):
    per_slab = [[] for _ in range(spec.t_slabs)]
    cells = spec.rows * spec.cols
    for idx in flat_indices.tolist():
        tau, rest = divmod(idx, cells)
        per_slab[tau].append(divmod(rest, spec.cols))
    return per_slab


def _fill_boxes(spec: GridSpec, boxes) -> np.ndarray:
    bits = np.zeros((spec.t_slabs, spec.rows, spec.cols), bool)
    for tau, (x, y, w, h) in enumerate(boxes):
        bits[tau, y:y + h, x:x + w] = True
    return bits


# --- motion aggregation ------------------------------------------------------

def _check_motion(spec: GridSpec, motion: MotionField) -> None:
    if (motion.frames != spec.clip_frames
            or motion.block_rows * BLOCK != spec.clip_height
            or motion.block_cols * BLOCK != spec.clip_width):
        raise MotionDimsMismatch(
            f"motion for {motion.frames}x{motion.block_rows * BLOCK}"
            f"x{motion.block_cols * BLOCK} px, grid expects "
            f"{spec.clip_frames}x{spec.clip_height}x{spec.clip_width}")


def slab_block_saliency(motion: MotionField, spec: GridSpec) -> np.ndarray:
    """Motion magnitude averaged over each slab's frames, at block resolution.

    Nearest-neighbor upsampling is constant per block, so this equals the
    slab-averaged pixel magnitude field sampled once per block.
    """
    _check_motion(spec, motion)
    mag = magnitude(motion)
    t = spec.patch[0]
    return mag.reshape(spec.t_slabs, t, motion.block_rows,
                       motion.block_cols).mean(axis=1)


def token_motion_saliency(motion: MotionField, spec: GridSpec) -> np.ndarray:
    """Per-token slab-aggregated motion magnitude: the mean pixel saliency
    over each token's h x w footprint."""
    sal = slab_block_saliency(motion, spec)
    _, h, w = spec.patch
    if h % BLOCK == 0 and w % BLOCK == 0:
        return sal.reshape(spec.t_slabs, spec.rows, h // BLOCK,
                           spec.cols, w // BLOCK).mean(axis=(2, 4))
    px = np.repeat(np.repeat(sal, BLOCK, axis=1), BLOCK, axis=2)
    return px.reshape(spec.t_slabs, spec.rows, h, spec.cols, w).mean(axis=(2, 4))


# --- generators ---------------------------------------------------------------

def gen_random(spec: GridSpec, params: MaskParams) -> Mask3D:
    """Per-slab independent uniform cells.

    Draw order: slab 0 .. T'-1 each picks its quota via a partial shuffle
    of the slab's cells, then the uniform count correction."""
    rng = Rng(params.seed)
    target = target_count(spec, params.gamma)
    quota = slab_quota(spec, params.gamma)
    cells = spec.rows * spec.cols
    bits = np.zeros((spec.t_slabs, spec.rows, spec.cols), bool)
    for tau in range(spec.t_slabs):
        bits[tau].reshape(-1)[rng.shuffle_prefix(cells, quota)] = True
    _uniform_correct(bits, target, rng)
    return Mask3D(spec, bits, target)


def gen_tube(spec: GridSpec, params: MaskParams) -> Mask3D:
    """One random 2D cell set replicated across all slabs.

    Draw order: one partial shuffle of the 2D cells, then the uniform
    count correction (which may break pure tubes when the per-slab quota
    does not divide the global target evenly)."""
    rng = Rng(params.seed)
    target = target_count(spec, params.gamma)
    quota = slab_quota(spec, params.gamma)
    plane = np.zeros(spec.rows * spec.cols, bool)
    plane[rng.shuffle_prefix(plane.size, quota)] = True
    bits = np.broadcast_to(plane.reshape(spec.rows, spec.cols),
                           (spec.t_slabs, spec.rows, spec.cols)).copy()
    _uniform_correct(bits, target, rng)
    return Mask3D(spec, bits, target)


def gen_block(spec: GridSpec, params: MaskParams) -> Mask3D:
    """One square box at a random position, identical across slabs.

    Draw order: box x then y; the perimeter correction is deterministic.
    A box too large for the grid is clamped per axis and the correction
    fills the remainder."""
    rng = Rng(params.seed)
    target = target_count(spec, params.gamma)
    x0, y0, w0, h0 = _init_box(rng, spec, params.gamma)
    boxes = [(x0, y0, w0, h0)] * spec.t_slabs
    bits = _fill_boxes(spec, boxes)
    _dense_correct(bits, boxes, spec, params.gamma, target)
    return Mask3D(spec, bits, target)


def _smm_trajectory(rng: Rng, spec: GridSpec, params: MaskParams):
    """Shared trajectory for both simulated-motion variants.

    Draw order: box x, box y, the zero-sum size jitter shuffle, then per
    slab a horizontal and a vertical velocity."""
    x, y, w, h = _init_box(rng, spec, params.gamma)
    jitter = zero_sum_jitter(rng, spec.t_slabs - 1, params.jitter_cap)
    boxes = [(x, y, w, h)]
    velocities: list[tuple[int, int]] = []
    for tau in range(1, spec.t_slabs):
        vx = rng.between(-params.velocity_cap, params.velocity_cap)
        vy = rng.between(-params.velocity_cap, params.velocity_cap)
        velocities.append((vx, vy))
        w = _clamp(w + jitter[tau - 1], 1, spec.cols)
        h = _clamp(h + jitter[tau - 1], 1, spec.rows)
        x = _clamp(x + vx, 0, spec.cols - w)
        y = _clamp(y + vy, 0, spec.rows - h)
        boxes.append((x, y, w, h))
    return boxes, velocities


def gen_smm(spec: GridSpec, params: MaskParams,
            dense: bool = True) -> tuple[Mask3D, BoxTrack]:
    """Simulated-motion mask: a box propagated by random velocity with
    zero-sum size jitter.

    Dense fills the box trajectory.  Sparse draws one scattered cell set
    (a further partial shuffle after the trajectory draws) and drifts it
    by the cumulative velocity with toroidal wrap, so the cells move
    coherently while staying spatially discontinuous; its count correction
    is the uniform one."""
    rng = Rng(params.seed)
    target = target_count(spec, params.gamma)
    boxes, velocities = _smm_trajectory(rng, spec, params)
    if dense:
        bits = _fill_boxes(spec, boxes)
        added, removed = _dense_correct(bits, boxes, spec, params.gamma, target)
    else:
        quota = slab_quota(spec, params.gamma)
        base = rng.shuffle_prefix(spec.rows * spec.cols, quota)
        base_r, base_c = np.divmod(base, spec.cols)
        bits = np.zeros((spec.t_slabs, spec.rows, spec.cols), bool)
        shift_x = shift_y = 0
        for tau in range(spec.t_slabs):
            if tau > 0:
                shift_x += velocities[tau - 1][0]
                shift_y += velocities[tau - 1][1]
            bits[tau, (base_r + shift_y) % spec.rows,
                 (base_c + shift_x) % spec.cols] = True
        add_flat, rem_flat = _uniform_correct(bits, target, rng)
        added = _split_by_slab(add_flat, spec)
        removed = _split_by_slab(rem_flat, spec)
    track = [SlabBox(x, y, w, h, added[tau], removed[tau])
             for tau, (x, y, w, h) in enumerate(boxes)]
    return Mask3D(spec, bits, target), track


def gen_mgm(spec: GridSpec, params: MaskParams, motion: MotionField,
            dense: bool = True) -> tuple[Mask3D, BoxTrack]:
    """Motion-guided mask.

    Dense: slab 0 starts as a random box; every later slab re-centers the
    box on the pixel argmax of that slab's mean motion magnitude (ties to
    the lowest row, then column), applies independent zero-sum width and
    height jitter, and clamps into the grid by translation so the argmax
    token always stays masked.  Draw order: box x, box y, width jitter
    shuffle, height jitter shuffle; the corrections are deterministic.

    Sparse: each slab masks its quota of highest-magnitude tokens (raster
    order on ties); the global residue moves along the magnitude ranking
    instead of using random draws, so the top token is never given up.
    Consumes no randomness."""
    _check_motion(spec, motion)
    target = target_count(spec, params.gamma)
    if dense:
        rng = Rng(params.seed)
        x, y, w, h = _init_box(rng, spec, params.gamma)
        jit_w = zero_sum_jitter(rng, spec.t_slabs - 1, params.jitter_cap)
        jit_h = zero_sum_jitter(rng, spec.t_slabs - 1, params.jitter_cap)
        sal = slab_block_saliency(motion, spec)
        t_patch = spec.patch[0]
        boxes = [(x, y, w, h)]
        protect: list[tuple[int, int] | None] = [None]
        for tau in range(1, spec.t_slabs):
            br, bc = divmod(int(np.argmax(sal[tau])), motion.block_cols)
            _, row_tok, col_tok = pixel_to_token(spec, tau * t_patch,
                                                 br * BLOCK, bc * BLOCK)
            w = _clamp(w + jit_w[tau - 1], 1, spec.cols)
            h = _clamp(h + jit_h[tau - 1], 1, spec.rows)
            x = _clamp(col_tok - w // 2, 0, spec.cols - w)
            y = _clamp(row_tok - h // 2, 0, spec.rows - h)
            boxes.append((x, y, w, h))
            protect.append((row_tok, col_tok))
        bits = _fill_boxes(spec, boxes)
        added, removed = _dense_correct(bits, boxes, spec, params.gamma,
                                        target, protect)
        track = [SlabBox(x, y, w, h, added[tau], removed[tau])
                 for tau, (x, y, w, h) in enumerate(boxes)]
        return Mask3D(spec, bits, target), track

    tok = token_motion_saliency(motion, spec)
    quota = slab_quota(spec, params.gamma)
    orders = [np.argsort(-tok[tau].ravel(), kind="stable")
              for tau in range(spec.t_slabs)]
    take = [quota] * spec.t_slabs
    residue = target - quota * spec.t_slabs
    cells = spec.rows * spec.cols
    floor = 1 if target >= spec.t_slabs else 0
    i = stuck = 0
    while residue != 0:
        tau = i % spec.t_slabs
        if residue > 0 and take[tau] < cells:
            take[tau] += 1
            residue -= 1
            stuck = 0
        elif residue < 0 and take[tau] > floor:
            take[tau] -= 1
            residue += 1
            stuck = 0
        else:
            stuck += 1
            if stuck > spec.t_slabs:
                raise RuntimeError("rank correction ran out of cells")
        i += 1
    bits = np.zeros((spec.t_slabs, spec.rows, spec.cols), bool)
    track = []
    for tau in range(spec.t_slabs):
        chosen = orders[tau][:take[tau]]
        bits[tau].reshape(-1)[chosen] = True
        extra = orders[tau][quota:take[tau]] if take[tau] > quota else orders[tau][take[tau]:quota]
        cells_rc = [divmod(int(idx), spec.cols) for idx in extra]
        top_r, top_c = divmod(int(orders[tau][0]), spec.cols)
        track.append(SlabBox(top_c, top_r, 1, 1,
                             cells_rc if take[tau] > quota else [],
                             cells_rc if take[tau] < quota else []))
    return Mask3D(spec, bits, target), track


def correct_count(mask: Mask3D, target: int, anchor: BoxTrack | None = None,
                  rng: Rng | None = None) -> Mask3D:
    """Return a mask with exactly `target` set bits.

    With an anchor track, cells are added or removed along each slab's box
    perimeter, the residue distributed round-robin from slab 0.  Without
    one, eligible cells are drawn uniformly from the given stream (a fresh
    zero-seeded stream if none is passed)."""
    if not 0 <= target <= mask.spec.total:
        raise TargetExceedsGrid(f"target {target} outside "
                                f"[0, {mask.spec.total}]")
    spec = mask.spec
    bits = mask.bits.copy()
    if anchor is None:
        _uniform_correct(bits, target, rng if rng is not None else Rng(0))
    else:
        validate_boxtrack(anchor, spec)
        cursors = [_BoxCursor(bits[tau], (b.x, b.y, b.w, b.h),
                              spec.rows, spec.cols)
                   for tau, b in enumerate(anchor)]
        added = [[] for _ in range(spec.t_slabs)]
        removed = [[] for _ in range(spec.t_slabs)]
        _round_robin(cursors, added, removed, target - int(bits.sum()))
    return Mask3D(spec, bits, target)


GENERATORS = ("random", "tube", "block", "smm-sparse", "smm-dense",
              "mgm-sparse", "mgm-dense")


def generate(name: str, spec: GridSpec, params: MaskParams,
             motion: MotionField | None = None):
    """Dispatch by generator name; returns (mask, track-or-None)."""
    if name == "random":
        return gen_random(spec, params), None
    if name == "tube":
        return gen_tube(spec, params), None
    if name == "block":
        return gen_block(spec, params), None
    if name in ("smm-sparse", "smm-dense"):
        return gen_smm(spec, params, dense=name.endswith("dense"))
    if name in ("mgm-sparse", "mgm-dense"):
        if motion is None:
            raise ValueError(f"{name} requires a motion field")
        return gen_mgm(spec, params, motion, dense=name.endswith("dense"))
    raise ValueError(f"unknown generator {name!r} (one of {GENERATORS})")
