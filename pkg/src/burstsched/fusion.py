"""Closed-form burst fusion used as a stand-in restorer, and image metrics.

The fusion is an inverse-noise-variance weighted mean of the demosaicked
frames. It has no alignment step, so motion blur in long exposures and
misregistration between frames show up directly in the loss.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np
from scipy.ndimage import gaussian_filter

from burstsched.noise import VAR_FLOOR, NoiseModel, NoiseParams
from burstsched.rawconv import demosaic_bilinear, demosaic_bilinear_adjoint  # noqa: F401

LUMA = np.array([0.299, 0.587, 0.114])


def _planes(frames) -> np.ndarray:
    return np.stack([np.asarray(getattr(f, "plane", f), dtype=np.float64) for f in frames])


def fusion_weights(frames, gains: Sequence[float], params: Sequence[NoiseParams], model: NoiseModel = NoiseModel()):
    """Normalized weights proportional to each frame's inverse noise variance.

    The variance uses the frame's mean level as a scalar signal estimate.
    """
    planes = _planes(frames)
    if len(planes) == 0:
        raise ValueError("need at least one frame")
    if not (len(gains) == len(params) == len(planes)):
        raise ValueError("frames, gains and noise params must have equal length")
    mu = planes.reshape(len(planes), -1).mean(axis=1)
    var = np.array(
        [model.amplification(g) ** 2 * max(p.lambda_read + p.lambda_shot * m, VAR_FLOOR) for g, p, m in zip(gains, params, mu)]
    )
    inv = 1.0 / var
    return inv / inv.sum()


def fuse_burst(frames, gains, params, model: NoiseModel = NoiseModel()) -> np.ndarray:
    planes = _planes(frames)
    shapes = {p.shape for p in planes}
    if len(shapes) != 1:
        raise ValueError("all frames must share one shape")
    w = fusion_weights(planes, gains, params, model)
    return demosaic_bilinear(np.tensordot(w, planes, axes=1))


def restoration_loss(fused, gt) -> float:
    """Mean absolute error between a fused RGB image and the demosaicked ground truth."""
    fused = np.asarray(fused, dtype=np.float64)
    ref = demosaic_bilinear(gt)
    if fused.shape != ref.shape:
        raise ValueError(f"shape mismatch: {fused.shape} vs {ref.shape}")
    return float(np.abs(fused - ref).mean())


def psnr(a, b) -> float:
    """Peak signal-to-noise ratio for images in [0, 1]; ``inf`` when identical."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    mse = float(np.mean((a - b) ** 2))
    if mse == 0:
        return math.inf
    return 10.0 * math.log10(1.0 / mse)


def _luminance(img: np.ndarray) -> np.ndarray:
    return img @ LUMA if img.ndim == 3 else img


def ssim(a, b, sigma: float = 1.5, win: int = 11, k1: float = 0.01, k2: float = 0.03) -> float:
    """Mean structural similarity on luminance with a Gaussian window.

    Local statistics use population (not sample) moments; a border of
    ``win // 2`` pixels is excluded from the mean.
    """
    a = _luminance(np.asarray(a, dtype=np.float64))
    b = _luminance(np.asarray(b, dtype=np.float64))
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    if min(a.shape) < win:
        raise ValueError(f"images must be at least {win}x{win}")
    r = win // 2
    filt = dict(sigma=sigma, truncate=r / sigma, mode="reflect")
    mu_a = gaussian_filter(a, **filt)
    mu_b = gaussian_filter(b, **filt)
    var_a = gaussian_filter(a * a, **filt) - mu_a**2
    var_b = gaussian_filter(b * b, **filt) - mu_b**2
    cov = gaussian_filter(a * b, **filt) - mu_a * mu_b
    c1 = k1**2
    c2 = k2**2
    num = (2 * mu_a * mu_b + c1) * (2 * cov + c2)
    den = (mu_a**2 + mu_b**2 + c1) * (var_a + var_b + c2)
    return float((num / den)[r:-r, r:-r].mean())
