"""sRGB to camera-RAW conversion and the small forward ISP used for previews.

Images are float arrays of shape (H, W, 3); Bayer planes are (H, W) with an
RGGB tile: R at (even row, even col), B at (odd, odd), G elsewhere.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

IDENTITY_CCM = np.eye(3)

# Plausible RAW->sRGB matrices (rows sum to one so gray stays gray). The
# calibrated matrices of a specific sensor are not available.
DEFAULT_CCM_BANK = (
    IDENTITY_CCM,
    np.array([[1.78, -0.62, -0.16], [-0.21, 1.52, -0.31], [0.03, -0.54, 1.51]]),
    np.array([[1.62, -0.49, -0.13], [-0.27, 1.61, -0.34], [0.02, -0.45, 1.43]]),
)


@dataclass(frozen=True)
class ColorPipelineParams:
    ccm: np.ndarray = IDENTITY_CCM
    g_rgb: float = 1.0
    g_r: float = 1.0
    g_b: float = 1.0

    def __post_init__(self):
        ccm = np.asarray(self.ccm, dtype=np.float64)
        if ccm.shape != (3, 3):
            raise ValueError("ccm must be 3x3")
        object.__setattr__(self, "ccm", ccm)

    def to_dict(self) -> dict:
        return {"ccm": self.ccm.tolist(), "g_rgb": self.g_rgb, "g_r": self.g_r, "g_b": self.g_b}

    @classmethod
    def from_dict(cls, data: dict) -> "ColorPipelineParams":
        return cls(np.asarray(data["ccm"]), float(data["g_rgb"]), float(data["g_r"]), float(data["g_b"]))


def _check_gains(params: ColorPipelineParams) -> None:
    if not (params.g_rgb > 0 and params.g_r > 0 and params.g_b > 0):
        raise ValueError("white-balance gains must be positive")


def _check_rgb(img: np.ndarray) -> np.ndarray:
    img = np.asarray(img, dtype=np.float64)
    if img.ndim < 3 or img.shape[-1] != 3:
        raise ValueError(f"expected (..., H, W, 3) image, got shape {img.shape}")
    return img


def gamma_expand(img, tol: float = 1e-6) -> np.ndarray:
    """sRGB transfer curve to linear light."""
    img = np.asarray(img, dtype=np.float64)
    if img.size and (img.min() < -tol or img.max() > 1 + tol):
        raise ValueError("sRGB values must lie in [0, 1]")
    img = np.clip(img, 0.0, 1.0)
    return np.where(img <= 0.04045, img / 12.92, ((img + 0.055) / 1.055) ** 2.4)


def gamma_compress(img) -> np.ndarray:
    """Linear light to the sRGB transfer curve (inverse of :func:`gamma_expand`)."""
    img = np.clip(np.asarray(img, dtype=np.float64), 0.0, 1.0)
    return np.where(img <= 0.0031308, img * 12.92, 1.055 * img ** (1 / 2.4) - 0.055)


def apply_inverse_ccm(img, params: ColorPipelineParams) -> np.ndarray:
    img = _check_rgb(img)
    if np.linalg.cond(params.ccm) > 1e6:
        raise np.linalg.LinAlgError("color correction matrix is singular or ill-conditioned")
    inv = np.linalg.inv(params.ccm)
    return np.maximum(img @ inv.T, 0.0)


def apply_ccm(img, params: ColorPipelineParams) -> np.ndarray:
    return _check_rgb(img) @ params.ccm.T


def inverse_white_balance(img, params: ColorPipelineParams) -> np.ndarray:
    _check_gains(params)
    img = _check_rgb(img)
    scale = np.array([params.g_rgb / params.g_r, params.g_rgb, params.g_rgb / params.g_b])
    return img * scale


def white_balance(img, params: ColorPipelineParams) -> np.ndarray:
    _check_gains(params)
    img = _check_rgb(img)
    scale = np.array([params.g_r / params.g_rgb, 1.0 / params.g_rgb, params.g_b / params.g_rgb])
    return img * scale


def sample_pipeline_params(rng, ccm_bank=DEFAULT_CCM_BANK) -> ColorPipelineParams:
    """Draw a CCM and white-balance gains for one clip.

    ``g_rgb`` is Normal(0.8, 0.1) redrawn until positive; ``g_r`` and ``g_b``
    are uniform on [1.9, 2.4] and [1.5, 1.9].
    """
    if len(ccm_bank) == 0:
        raise ValueError("ccm bank is empty")
    rng = np.random.default_rng(rng)
    ccm = np.asarray(ccm_bank[rng.integers(len(ccm_bank))], dtype=np.float64)
    g_rgb = rng.normal(0.8, 0.1)
    while g_rgb <= 0:
        g_rgb = rng.normal(0.8, 0.1)
    g_r = rng.uniform(1.9, 2.4)
    g_b = rng.uniform(1.5, 1.9)
    return ColorPipelineParams(ccm, float(g_rgb), float(g_r), float(g_b))


def bayer_masks(h: int, w: int) -> np.ndarray:
    """Boolean (H, W, 3) masks marking which channel each photosite samples."""
    rows = np.arange(h)[:, None] % 2
    cols = np.arange(w)[None, :] % 2
    red = (rows == 0) & (cols == 0)
    blue = (rows == 1) & (cols == 1)
    return np.stack([red, ~(red | blue), blue], axis=-1)


def mosaic_rggb(img) -> np.ndarray:
    """Sample one channel per pixel in RGGB order. Works on (..., H, W, 3)."""
    img = _check_rgb(img)
    h, w = img.shape[-3:-1]
    if h % 2 or w % 2:
        raise ValueError("Bayer mosaic needs even width and height")
    out = np.empty(img.shape[:-1], dtype=np.float64)
    out[..., 0::2, 0::2] = img[..., 0::2, 0::2, 0]
    out[..., 0::2, 1::2] = img[..., 0::2, 1::2, 1]
    out[..., 1::2, 0::2] = img[..., 1::2, 0::2, 1]
    out[..., 1::2, 1::2] = img[..., 1::2, 1::2, 2]
    return out


_RB_KERNEL = np.array([[1, 2, 1], [2, 4, 2], [1, 2, 1]]) / 4.0
_G_KERNEL = np.array([[0, 1, 0], [1, 4, 1], [0, 1, 0]]) / 4.0


def _mirror(idx: np.ndarray, n: int) -> np.ndarray:
    # reflect without repeating the edge sample; keeps the CFA parity
    idx = np.abs(idx)
    return np.where(idx >= n, 2 * (n - 1) - idx, idx)


@lru_cache(maxsize=16)
def demosaic_matrix(h: int, w: int) -> sp.csr_matrix:
    """Sparse (3HW x HW) operator for bilinear demosaicing of an RGGB plane.

    Row ``(y * w + x) * 3 + c`` holds the weights for channel ``c`` at pixel
    ``(y, x)``. Because the operator is an explicit matrix, its transpose
    gives the exact backward pass.
    """
    if h % 2 or w % 2 or h < 2 or w < 2:
        raise ValueError("demosaic needs even dimensions")
    masks = bayer_masks(h, w)
    ys, xs = np.meshgrid(np.arange(h), np.arange(w), indexing="ij")
    rows, cols, vals = [], [], []
    for c, kernel in enumerate((_RB_KERNEL, _G_KERNEL, _RB_KERNEL)):
        for dy in (-1, 0, 1):
            for dx in (-1, 0, 1):
                wgt = kernel[dy + 1, dx + 1]
                if wgt == 0:
                    continue
                sy = _mirror(ys + dy, h)
                sx = _mirror(xs + dx, w)
                hit = masks[sy, sx, c]
                rows.append(((ys * w + xs) * 3 + c)[hit])
                cols.append((sy * w + sx)[hit])
                vals.append(np.full(hit.sum(), wgt))
    mat = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(3 * h * w, h * w)
    )
    return mat.tocsr()


def demosaic_bilinear(plane) -> np.ndarray:
    """Bilinear demosaic of an RGGB plane (H, W) into an (H, W, 3) image."""
    plane = np.asarray(getattr(plane, "plane", plane), dtype=np.float64)
    if plane.ndim != 2:
        raise ValueError("expected a single Bayer plane")
    h, w = plane.shape
    return (demosaic_matrix(h, w) @ plane.ravel()).reshape(h, w, 3)


def demosaic_bilinear_adjoint(grad_rgb) -> np.ndarray:
    """Pull an (H, W, 3) gradient back through :func:`demosaic_bilinear`."""
    grad_rgb = np.asarray(grad_rgb, dtype=np.float64)
    h, w = grad_rgb.shape[:2]
    return (demosaic_matrix(h, w).T @ grad_rgb.ravel()).reshape(h, w)


def forward_isp(img, params: ColorPipelineParams = ColorPipelineParams(), gamma: bool = True) -> np.ndarray:
    """Render RAW data for display: demosaic, white balance, CCM, sRGB curve.

    Accepts a Bayer plane (H, W) or a RAW-space RGB image (H, W, 3). Output
    is clipped to [0, 1]; with ``gamma=False`` it stays linear.
    """
    img = np.asarray(getattr(img, "plane", img), dtype=np.float64)
    if img.ndim == 2:
        img = demosaic_bilinear(img)
    out = apply_ccm(white_balance(img, params), params)
    out = np.clip(out, 0.0, 1.0)
    return gamma_compress(out) if gamma else out


def inverse_isp(img, params: ColorPipelineParams) -> np.ndarray:
    """sRGB image to RAW-space RGB (gamma expansion, inverse CCM, inverse WB)."""
    return inverse_white_balance(apply_inverse_ccm(gamma_expand(img), params), params)


def convert_sequence(frames, params: ColorPipelineParams, e_S: float = 1.0 / 1920.0):
    """Turn a list of sRGB frames into a :class:`RadianceSequence` in RAW color."""
    from burstsched.simulator import RadianceSequence

    frames = [np.asarray(f, dtype=np.float64) for f in frames]
    if not frames:
        raise ValueError("no frames to convert")
    shape = frames[0].shape
    for i, f in enumerate(frames):
        if f.shape != shape:
            raise ValueError(f"frame {i} has shape {f.shape}, expected {shape}")
    return RadianceSequence(np.stack([inverse_isp(f, params) for f in frames]), e_S)
