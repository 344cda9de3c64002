"""Scalar motion magnitude between the two preview frames.

A single global translation is found by exhaustive integer-shift search on
downsampled luminance, then refined to sub-pixel precision with a parabola
through the cost at the best shift and its neighbours.
"""

from __future__ import annotations

import math

import numpy as np

from burstsched.core import CameraConfig, ShotContext, normalize_inputs
from burstsched.fusion import LUMA
from burstsched.rawconv import demosaic_bilinear


def _luma(frame) -> np.ndarray:
    plane = np.asarray(getattr(frame, "plane", frame), dtype=np.float64)
    if plane.ndim == 3:
        return plane @ LUMA
    return demosaic_bilinear(plane) @ LUMA


def _downsample(img: np.ndarray, factor: int) -> np.ndarray:
    if factor == 1:
        return img
    h = img.shape[0] // factor * factor
    w = img.shape[1] // factor * factor
    return img[:h, :w].reshape(h // factor, factor, w // factor, factor).mean(axis=(1, 3))


def shift_cost(a: np.ndarray, b: np.ndarray, dy: int, dx: int) -> float:
    """Mean absolute difference between ``a`` and ``b`` displaced by (dy, dx).

    Compares ``a[y, x]`` with ``b[y + dy, x + dx]`` on the overlap only.
    """
    h, w = a.shape
    ya, yb = max(0, -dy), max(0, dy)
    xa, xb = max(0, -dx), max(0, dx)
    hh, ww = h - abs(dy), w - abs(dx)
    return float(np.abs(a[ya : ya + hh, xa : xa + ww] - b[yb : yb + hh, xb : xb + ww]).mean())


def _parabola(cm: float, c0: float, cp: float) -> float:
    den = cm - 2 * c0 + cp
    if den <= 0:
        return 0.0
    return float(np.clip(0.5 * (cm - cp) / den, -0.5, 0.5))


def estimate_translation(a, b, max_shift: int):
    """Sub-pixel (dy, dx) such that ``b`` is ``a`` moved by (dy, dx)."""
    h, w = a.shape
    lim_y = min(int(max_shift), h // 2)
    lim_x = min(int(max_shift), w // 2)
    costs = np.full((2 * lim_y + 1, 2 * lim_x + 1), np.inf)
    for i, dy in enumerate(range(-lim_y, lim_y + 1)):
        for j, dx in enumerate(range(-lim_x, lim_x + 1)):
            costs[i, j] = shift_cost(a, b, dy, dx)
    i, j = np.unravel_index(np.argmin(costs), costs.shape)
    fy = _parabola(costs[i - 1, j], costs[i, j], costs[i + 1, j]) if 0 < i < costs.shape[0] - 1 else 0.0
    fx = _parabola(costs[i, j - 1], costs[i, j], costs[i, j + 1]) if 0 < j < costs.shape[1] - 1 else 0.0
    return i - lim_y + fy, j - lim_x + fx


def motion_magnitude(I_p, I_prev, downsample: int = 4, m_thr: float = 20.0) -> float:
    """Apparent motion between two previews, in full-resolution pixels."""
    a = _luma(I_prev)
    b = _luma(I_p)
    if a.shape != b.shape:
        raise ValueError(f"preview shapes differ: {a.shape} vs {b.shape}")
    if downsample < 1:
        raise ValueError("downsample factor must be >= 1")
    dy, dx = estimate_translation(_downsample(a, downsample), _downsample(b, downsample), int(m_thr))
    return math.hypot(dy, dx) * downsample


def shot_context(I_p, I_prev, g_p: float, cfg: CameraConfig, downsample: int = 4) -> ShotContext:
    m_raw = motion_magnitude(I_p, I_prev, downsample, cfg.m_thr)
    g_norm, m_norm = normalize_inputs(g_p, m_raw, cfg)
    return ShotContext(float(g_p), cfg.t_p, m_raw, g_norm, m_norm)
