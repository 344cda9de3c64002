"""Differentiable burst-capture simulation and exposure-schedule optimization."""

from burstsched.core import (
    UNIT,
    CameraConfig,
    CaptureTimeline,
    ExposureSchedule,
    ScheduleLogits,
    ShotContext,
    bounded_softmax,
    bounded_softmax_jacobian,
    build_timeline,
    gains_from_schedule,
    normalize_inputs,
)
from burstsched.fusion import fuse_burst, fusion_weights, psnr, restoration_loss, ssim
from burstsched.io import read_bayer, read_radseq, write_bayer, write_radseq
from burstsched.motion import motion_magnitude, shot_context
from burstsched.noise import NoiseModel, NoiseParams, apply_noise, noise_params
from burstsched.schedopt import (
    DEFAULT_CANDIDATES,
    evaluate_schedule,
    gradcheck,
    objective,
    objective_grad,
    optimize_schedule,
    pseudo_gt_search,
)
from burstsched.simulator import (
    BayerFrame,
    Burst,
    RadianceSequence,
    ground_truth,
    integrate_radiance,
    integrate_radiance_grad,
    synthesize_burst,
    synthesize_frame,
    synthesize_previews,
)

__version__ = "0.1.0"
