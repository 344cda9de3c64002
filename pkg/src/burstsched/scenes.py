"""Synthetic radiance sequences for experiments and tests."""

from __future__ import annotations

import math

import numpy as np
from scipy.ndimage import gaussian_filter, map_coordinates

from burstsched.core import CameraConfig
from burstsched.simulator import RadianceSequence


def frames_needed(cfg: CameraConfig) -> int:
    """Radiance frames that cover any schedule allowed by ``cfg``."""
    end = cfg.t0 + cfg.t_u + (cfg.n - 1) * cfg.delta
    return math.ceil(end / cfg.e_S - 1e-9)


def texture(shape, seed, sigma: float = 3.0, lo: float = 0.05, hi: float = 0.6) -> np.ndarray:
    """Smooth random RGB texture with values spanning [lo, hi]."""
    rng = np.random.default_rng(seed)
    tex = gaussian_filter(rng.random((*shape, 3)), sigma=(sigma, sigma, 0), mode="wrap")
    tex -= tex.min()
    tex /= max(tex.max(), 1e-12)
    return lo + (hi - lo) * tex


def static_scene(h: int, w: int, n_frames: int, seed: int = 0, e_S: float = 1.0 / 1920.0, **kw) -> RadianceSequence:
    tex = texture((h, w), seed, **kw)
    return RadianceSequence(np.broadcast_to(tex, (n_frames, h, w, 3)).copy(), e_S)


def constant_scene(h: int, w: int, n_frames: int, value=0.25, e_S: float = 1.0 / 1920.0) -> RadianceSequence:
    frames = np.empty((n_frames, h, w, 3))
    frames[...] = value
    return RadianceSequence(frames, e_S)


def translating_scene(
    h: int,
    w: int,
    n_frames: int,
    velocity=(0.0, 10.0),
    seed: int = 0,
    e_S: float = 1.0 / 1920.0,
    ramp: float = 0.0,
    **kw,
) -> RadianceSequence:
    """Texture sliding across the view at ``velocity`` pixels per radiance frame.

    Frame ``k`` shows the canvas displaced by ``k * velocity``. ``ramp`` adds
    a horizontal brightness gradient (per canvas pixel) so that content keeps
    changing even after the blur is longer than the texture scale.
    """
    vy, vx = velocity
    pad_y = int(math.ceil(abs(vy) * n_frames)) + 2
    pad_x = int(math.ceil(abs(vx) * n_frames)) + 2
    canvas = texture((h + pad_y, w + pad_x), seed, **kw)
    if ramp:
        x = np.arange(w + pad_x, dtype=np.float64)
        canvas = canvas + ramp * x[None, :, None]
    oy = 0.0 if vy >= 0 else float(pad_y - 2)
    ox = 0.0 if vx >= 0 else float(pad_x - 2)
    ys, xs = np.meshgrid(np.arange(h, dtype=np.float64), np.arange(w, dtype=np.float64), indexing="ij")
    frames = np.empty((n_frames, h, w, 3))
    for k in range(n_frames):
        cy = ys + oy + vy * k
        cx = xs + ox + vx * k
        for c in range(3):
            frames[k, ..., c] = map_coordinates(canvas[..., c], [cy, cx], order=1, mode="nearest")
    return RadianceSequence(np.maximum(frames, 0.0), e_S)


def random_scene(rng, h: int = 64, w: int = 64, n_frames: int = 229, e_S: float = 1.0 / 1920.0) -> RadianceSequence:
    """Random texture, brightness and (possibly zero) translation velocity."""
    rng = np.random.default_rng(rng)
    seed = int(rng.integers(2**31))
    lo = rng.uniform(0.02, 0.15)
    hi = rng.uniform(0.3, 0.8)
    sigma = rng.uniform(1.5, 6.0)
    speed = rng.choice([0.0, rng.uniform(0.05, 1.0)])
    angle = rng.uniform(0, 2 * np.pi)
    v = (speed * math.sin(angle), speed * math.cos(angle))
    if speed == 0:
        return static_scene(h, w, n_frames, seed, e_S, sigma=sigma, lo=lo, hi=hi)
    return translating_scene(h, w, n_frames, v, seed, e_S, sigma=sigma, lo=lo, hi=hi)
