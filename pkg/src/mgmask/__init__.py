"""Motion-guided 3D masking toolkit.

Parses raw clips, estimates block motion, and produces exact-count token
masks (random, tube, block, simulated-motion, motion-guided) plus the
measurement tools around them: box saliency scores, mask/motion coverage,
and a temporal-copy reconstruction oracle.
"""

from .clipio import Clip, parse_rvc, parse_y4m, to_luma, write_ppm_frame, write_rvc
from .kernels import BACKEND
from .maskgen import (
    GENERATORS,
    MaskParams,
    Rng,
    correct_count,
    derive_seed,
    gen_block,
    gen_mgm,
    gen_random,
    gen_smm,
    gen_tube,
    generate,
    slab_quota,
    splitmix64,
    target_count,
    token_motion_saliency,
    zero_sum_jitter,
)
from .motionfield import (
    BLOCK,
    MotionField,
    UpsampledField,
    estimate_mv,
    magnitude,
    read_mvf,
    upsample_nearest,
    write_mvf,
)
from .saliency import (
    BoxAnnotation,
    ReconstructionResult,
    mask_motion_coverage,
    saliency_score,
    temporal_copy_reconstruct,
)
from .tokengrid import (
    BoxTrack,
    GridSpec,
    Mask3D,
    SlabBox,
    boxtrack_to_json,
    grid_from_clip,
    pixel_to_token,
    read_msk,
    split,
    token_to_pixel_box,
    write_msk,
)

__version__ = "0.1.0"
