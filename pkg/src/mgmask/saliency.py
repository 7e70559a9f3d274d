"""Motion saliency scoring and the temporal-copy reconstruction oracle.

The score relates motion magnitude inside annotated boxes to the rest of
the frame; the oracle fills each masked token from the nearest slab where
the same spatial cell is visible and reports the squared error over masked
pixels, a non-learned proxy for reconstruction difficulty.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .clipio import Clip
from .errors import DimMismatch, NoInsideBlocks, NoOutsideBlocks
from .maskgen import round_half_up, token_motion_saliency
from .motionfield import BLOCK, MotionField, magnitude
from .tokengrid import GridSpec, Mask3D

MEAN_FILL_FALLBACK = 128


@dataclass
class BoxAnnotation:
    """Axis-aligned pixel rectangles per frame, half-open (r0, c0, r1, c1)."""

    frames: list[list[tuple[int, int, int, int]]]

    def __post_init__(self):
        for i, boxes in enumerate(self.frames):
            for box in boxes:
                r0, c0, r1, c1 = box
                if r0 < 0 or c0 < 0 or r1 <= r0 or c1 <= c0:
                    raise ValueError(f"frame {i}: bad box {box}")

    @classmethod
    def from_json(cls, text: str) -> "BoxAnnotation":
        doc = json.loads(text)
        return cls([[tuple(box) for box in frame] for frame in doc["frames"]])

    def to_json(self) -> str:
        return json.dumps({"frames": [[list(b) for b in frame]
                                      for frame in self.frames]})


def _inside_blocks(boxes: BoxAnnotation, frames: int, block_rows: int,
                   block_cols: int) -> np.ndarray:
    """Bool (T, Hb, Wb): block center (8br+3.5, 8bc+3.5) inside any box."""
    height, width = block_rows * BLOCK, block_cols * BLOCK
    inside = np.zeros((frames, block_rows, block_cols), bool)
    for t, frame_boxes in enumerate(boxes.frames):
        for r0, c0, r1, c1 in frame_boxes:
            if r1 > height or c1 > width:
                raise DimMismatch(f"frame {t}: box {(r0, c0, r1, c1)} outside "
                                  f"{height}x{width}")
            br_lo, br_hi = (r0 + 4) // BLOCK, (r1 + 4) // BLOCK - 1
            bc_lo, bc_hi = (c0 + 4) // BLOCK, (c1 + 4) // BLOCK - 1
            if br_lo <= br_hi and bc_lo <= bc_hi:
                inside[t, br_lo:br_hi + 1, bc_lo:bc_hi + 1] = True
    return inside


def saliency_score(motion: MotionField, boxes: BoxAnnotation) -> float:
    """Mean motion magnitude inside the boxes over the mean outside.

    A block counts as inside iff its footprint center lies in any box of
    its frame.  Frame 0 carries no motion and is excluded.  Returns +inf
    when all outside blocks are static.
    """
    if len(boxes.frames) != motion.frames:
        raise DimMismatch(f"{len(boxes.frames)} annotated frames for "
                          f"{motion.frames} motion frames")
    if motion.frames < 2:
        raise DimMismatch("need at least 2 frames to score motion")
    inside = _inside_blocks(boxes, motion.frames,
                            motion.block_rows, motion.block_cols)
    mags = magnitude(motion)[1:]
    inside = inside[1:]
    in_vals = mags[inside]
    out_vals = mags[~inside]
    if in_vals.size == 0:
        raise NoInsideBlocks("no block centers fall inside the boxes")
    if out_vals.size == 0:
        raise NoOutsideBlocks("every block center falls inside a box")
    mean_out = float(out_vals.mean())
    if mean_out == 0.0:
        return math.inf
    return float(in_vals.mean()) / mean_out


def mask_motion_coverage(mask: Mask3D, motion: MotionField, spec: GridSpec,
                         q: float) -> float:
    """Fraction of the top-q-quantile motion tokens that are masked.

    Token magnitudes are the slab-aggregated means used by the guided
    generator; the top set is every cell at or above the q-quantile value
    (so q=0 covers all cells).
    """
    if mask.spec != spec:
        raise DimMismatch(f"mask built for {mask.spec}, asked about {spec}")
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"quantile must be in [0, 1], got {q}")
    vals = token_motion_saliency(motion, spec).ravel()
    threshold = np.sort(vals)[min(int(math.floor(q * vals.size)), vals.size - 1)]
    top = vals >= threshold
    return float(mask.bits.ravel()[top].mean())


@dataclass
class ReconstructionResult:
    clip: Clip
    mse: float
    fallback_fill: bool


def temporal_copy_reconstruct(clip: Clip, mask: Mask3D,
                              spec: GridSpec) -> ReconstructionResult:
    """Fill every masked token from the nearest slab where its spatial cell
    is visible (ties toward the earlier slab); cells visible in no slab get
    the per-channel mean of all visible pixels.  With nothing visible at
    all the fill is 128 and the result is flagged.  mse is the mean squared
    error over masked pixels in 8-bit units (0.0 for an empty mask)."""
    if (clip.frames, clip.height, clip.width) != (spec.clip_frames,
                                                  spec.clip_height,
                                                  spec.clip_width):
        raise DimMismatch(f"clip {clip.frames}x{clip.height}x{clip.width} "
                          f"does not match grid source "
                          f"{spec.clip_frames}x{spec.clip_height}x{spec.clip_width}")
    if mask.spec != spec:
        raise DimMismatch(f"mask built for {mask.spec}, asked about {spec}")

    t, h, w = spec.patch
    bits = mask.bits
    recon = clip.data.copy()

    # nearest-first slab candidates per slab: distance, then earlier slab
    order = [sorted(range(spec.t_slabs), key=lambda u, tau=tau: (abs(u - tau), u))
             for tau in range(spec.t_slabs)]

    fallback_cells = []
    for tau, row, col in np.argwhere(bits):
        src = next((u for u in order[tau] if not bits[u, row, col]), None)
        if src is None:
            fallback_cells.append((tau, row, col))
            continue
        recon[tau * t:(tau + 1) * t, row * h:(row + 1) * h, col * w:(col + 1) * w] = \
            clip.data[src * t:(src + 1) * t, row * h:(row + 1) * h, col * w:(col + 1) * w]

    fallback_fill = False
    if fallback_cells:
        visible_px = np.repeat(np.repeat(np.repeat(~bits, t, 0), h, 1), w, 2)
        if visible_px.any():
            fill = np.array([round_half_up(float(clip.data[..., ch][visible_px].mean()))
                             for ch in range(clip.channels)], np.uint8)
        else:
            fill = np.full(clip.channels, MEAN_FILL_FALLBACK, np.uint8)
            fallback_fill = True
        for tau, row, col in fallback_cells:
            recon[tau * t:(tau + 1) * t, row * h:(row + 1) * h,
                  col * w:(col + 1) * w] = fill

    masked_px = np.repeat(np.repeat(np.repeat(bits, t, 0), h, 1), w, 2)
    if masked_px.any():
        diff = clip.data.astype(np.int64) - recon.astype(np.int64)
        mse = float((diff[masked_px] ** 2).mean())
    else:
        mse = 0.0
    return ReconstructionResult(Clip(recon), mse, fallback_fill)
