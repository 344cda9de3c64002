"""Differentiable burst simulator.

A :class:`RadianceSequence` holds scene radiance at a high frame rate; frame
``k`` is the radiance during ``[k * e_S, (k + 1) * e_S)``. Exposures are
synthesized by averaging the sequence over a continuous time interval,
which is piecewise linear in the interval endpoints, and then adding
gain-dependent noise with a fixed standard-normal field.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from typing import List, Optional

import numpy as np

from burstsched.core import CameraConfig, CaptureTimeline, ExposureSchedule, build_timeline, gains_from_schedule
from burstsched.noise import NoiseModel, NoiseParams, apply_noise, noise_params, sample_noise_field
from burstsched.rawconv import mosaic_rggb

SNAP = 1e-9
BURST_STREAM = 0
PREVIEW_STREAM = 1


class OneSidedGradientWarning(UserWarning):
    """An interval endpoint sits on a frame boundary; the derivative is right-sided."""


@dataclass
class RadianceSequence:
    """Scene radiance frames (N, H, W, 3) in camera-RAW color, ``e_S`` seconds each."""

    frames: np.ndarray
    e_S: float = 1.0 / 1920.0

    def __post_init__(self):
        frames = np.asarray(self.frames)
        if frames.ndim != 4 or frames.shape[-1] != 3:
            raise ValueError(f"expected (N, H, W, 3) frames, got {frames.shape}")
        if frames.shape[0] == 0:
            raise ValueError("sequence has no frames")
        if not np.all(np.isfinite(frames)) or frames.min() < 0:
            raise ValueError("radiance must be finite and non-negative")
        if not self.e_S > 0:
            raise ValueError("e_S must be positive")
        self.frames = frames

    def __len__(self):
        return self.frames.shape[0]

    @property
    def shape(self):
        return self.frames.shape[1:3]

    @cached_property
    def bayer(self) -> np.ndarray:
        """RGGB mosaic of every frame, (N, H, W) float64."""
        return mosaic_rggb(self.frames)


@dataclass
class BayerFrame:
    """One RGGB plane with its capture metadata."""

    plane: np.ndarray
    exposure: float
    gain: float
    t_start: float
    t_end: float
    unclipped: Optional[np.ndarray] = field(default=None, repr=False, compare=False)


@dataclass
class Burst:
    frames: List[BayerFrame]
    gains: np.ndarray
    timeline: CaptureTimeline
    noise: List[NoiseParams]
    z: np.ndarray = field(repr=False)

    @property
    def planes(self) -> np.ndarray:
        return np.stack([f.plane for f in self.frames])


def _snap(x: float) -> float:
    r = round(x)
    return float(r) if abs(x - r) < SNAP else x


def interval_weights(t_s: float, t_e: float, e_S: float, n_frames: int):
    """Overlap of ``[t_s, t_e]`` with each radiance frame, in frame units.

    Returns ``(first, weights, span)``: frames ``first .. first + len(weights)
    - 1`` contribute, and ``span`` is the interval length in frame units.
    """
    if not t_e > t_s:
        raise ValueError("exposure interval must have t_e > t_s")
    if t_s < 0:
        raise ValueError("exposure interval starts before the sequence")
    a = _snap(t_s / e_S)
    b = _snap(t_e / e_S)
    first = math.floor(a)
    stop = math.ceil(b)
    if stop > n_frames:
        raise ValueError(f"interval ends at frame {b:.6g} but the sequence has {n_frames} frames")
    taus = np.arange(first, stop, dtype=np.float64)
    weights = np.minimum(taus + 1.0, b) - np.maximum(taus, a)
    return first, weights, b - a


def _integrate(frames: np.ndarray, t_s: float, t_e: float, e_S: float) -> np.ndarray:
    first, w, span = interval_weights(t_s, t_e, e_S, frames.shape[0])
    base = frames[first]
    if w.size == 1:
        return base.astype(np.float64, copy=True)
    # offsets from the first frame vanish exactly on static content
    return base + np.tensordot(w[1:] / span, frames[first + 1 : first + w.size] - base, axes=1)


def _integrate_grad(frames: np.ndarray, t_s: float, t_e: float, e_S: float, avg=None):
    n = frames.shape[0]
    a = _snap(t_s / e_S)
    b = _snap(t_e / e_S)
    if avg is None:
        avg = _integrate(frames, t_s, t_e, e_S)
    span = (b - a) * e_S
    end_frame = frames[min(math.floor(b), n - 1)]
    start_frame = frames[math.floor(a)]
    return (avg - start_frame) / span, (end_frame - avg) / span


def integrate_radiance(seq: RadianceSequence, t_s: float, t_e: float) -> np.ndarray:
    """Average radiance over the exposure ``[t_s, t_e]`` (seconds).

    The first and last frames are weighted by the fraction of them that the
    interval covers, so the result is continuous in both endpoints.
    """
    return _integrate(seq.frames, t_s, t_e, seq.e_S)


def integrate_radiance_grad(seq: RadianceSequence, t_s: float, t_e: float):
    """Derivatives of :func:`integrate_radiance` w.r.t. ``t_s`` and ``t_e`` (per second).

    At a frame boundary the derivative is right-sided and an
    :class:`OneSidedGradientWarning` is issued.
    """
    for t in (t_s, t_e):
        x = t / seq.e_S
        if abs(x - round(x)) < SNAP:
            warnings.warn(f"endpoint {t!r} lies on a frame boundary", OneSidedGradientWarning, stacklevel=2)
    return _integrate_grad(seq.frames, t_s, t_e, seq.e_S)


def synthesize_frame(
    seq: RadianceSequence,
    t_s: float,
    t_e: float,
    g: float,
    params: NoiseParams,
    z: np.ndarray,
    model: NoiseModel = NoiseModel(),
) -> BayerFrame:
    """Blurred, noisy, clipped Bayer frame for one exposure interval.

    The integrated radiance is mosaicked first and noise is added per
    photosite; ``model.amplification(g)`` scales the noise term.
    """
    signal = _integrate(seq.bayer, t_s, t_e, seq.e_S)
    if z.shape != signal.shape:
        raise ValueError(f"noise field shape {z.shape} does not match frame {signal.shape}")
    noisy = apply_noise(signal, model.amplification(g), params, z)
    plane = np.clip(noisy, 0.0, 1.0)
    return BayerFrame(plane, t_e - t_s, float(g), t_s, t_e, unclipped=(noisy > 0) & (noisy < 1))


def required_frames(t_end: float, e_S: float) -> int:
    return math.ceil(_snap(t_end / e_S))


def burst_noise(seed, n: int, shape, model: NoiseModel = NoiseModel(), stream: int = BURST_STREAM) -> np.ndarray:
    """Standard-normal fields for an n-frame burst; identical for equal seeds."""
    if not model.enabled:
        return np.zeros((n, *shape))
    return sample_noise_field((n, *shape), [int(seed), stream])


def synthesize_burst(seq: RadianceSequence, sched: ExposureSchedule, g_p: float, cfg: CameraConfig, seed: int) -> Burst:
    timeline = build_timeline(sched, cfg)
    need = required_frames(timeline.ends[-1], seq.e_S)
    if need > len(seq):
        raise ValueError(f"schedule needs at least {need} radiance frames, sequence has {len(seq)}")
    gains = gains_from_schedule(sched, g_p, cfg.t_p, cfg.k)
    z = burst_noise(seed, sched.n, seq.shape, cfg.noise)
    frames, params = [], []
    for i in range(sched.n):
        p = noise_params(gains[i], cfg.noise)
        params.append(p)
        frames.append(synthesize_frame(seq, timeline.starts[i], timeline.ends[i], gains[i], p, z[i], cfg.noise))
    return Burst(frames, gains, timeline, params, z)


def preview_intervals(cfg: CameraConfig):
    """Exposure intervals of the preview and the preview before it."""
    end = cfg.t0 - cfg.delta
    start = end - cfg.t_p
    prev_end = start - cfg.delta_p
    prev_start = prev_end - cfg.t_p
    return (start, end), (prev_start, prev_end)


def synthesize_previews(seq: RadianceSequence, g_p: float, cfg: CameraConfig, seed: int):
    """Return ``(I_p, I_p_prev)``: the two previews captured at gain ``g_p``."""
    cur, prev = preview_intervals(cfg)
    if prev[0] < 0:
        raise ValueError("previews would start before the sequence; increase t0")
    z = burst_noise(seed, 2, seq.shape, cfg.noise, PREVIEW_STREAM)
    p = noise_params(g_p, cfg.noise)
    frames = [synthesize_frame(seq, s, e, g_p, p, z[j], cfg.noise) for j, (s, e) in enumerate((cur, prev))]
    return frames[0], frames[1]


def ground_truth(seq: RadianceSequence, cfg: CameraConfig) -> BayerFrame:
    """Sharp, noise-free mosaic of the radiance frame at ``t0``, clamped to [0, 1]."""
    k = cfg.t0_frame
    if not 0 <= k < len(seq):
        raise ValueError(f"ground-truth frame {k} outside sequence of {len(seq)} frames")
    plane = np.clip(seq.bayer[k], 0.0, 1.0)
    return BayerFrame(plane, seq.e_S, 0.0, cfg.t0, cfg.t0 + seq.e_S)


def quantize(values, bit_depth: int) -> np.ndarray:
    if bit_depth not in (8, 10, 12, 14, 16):
        raise ValueError(f"unsupported bit depth {bit_depth}")
    levels = 2**bit_depth - 1
    return np.floor(np.asarray(values) * levels + 0.5) / levels


def capture_emulation(
    seq: RadianceSequence,
    sched: ExposureSchedule,
    g_p: float,
    cfg: CameraConfig,
    seed: int,
    bit_depth: Optional[int] = None,
) -> List[BayerFrame]:
    """Burst frames with sensor quantization. Not differentiable."""
    depth = cfg.bit_depth if bit_depth is None else bit_depth
    if depth not in (8, 10, 12, 14, 16):
        raise ValueError(f"unsupported bit depth {depth}")
    burst = synthesize_burst(seq, sched, g_p, cfg, seed)
    return [
        BayerFrame(quantize(f.plane, depth), f.exposure, f.gain, f.t_start, f.t_end) for f in burst.frames
    ]
