"""Binary containers for radiance sequences and Bayer frames, plus PNG I/O.

RADSEQ layout (little-endian)::

    b"RADSEQ1\\n"  u32 width  u32 height  u32 frame_count  f64 e_S
    frame_count x [R plane, G plane, B plane], each height x width f32, row-major

BAYER layout (little-endian)::

    b"BAYER1\\n\\0"  u32 width  u32 height
    f64 exposure_s  f64 gain  f64 t_start_s  f64 t_end_s
    height x width f32, row-major
"""

from __future__ import annotations

import os
import struct
from pathlib import Path
from typing import List

import cv2
import numpy as np

from burstsched.simulator import BayerFrame, RadianceSequence

RADSEQ_MAGIC = b"RADSEQ1\n"
BAYER_MAGIC = b"BAYER1\n\0"
_RADSEQ_HEADER = struct.Struct("<8sIIId")
_BAYER_HEADER = struct.Struct("<8sIIdddd")


class FormatError(ValueError):
    """Base class for malformed files."""


class BadMagicError(FormatError):
    pass


class TruncatedFileError(FormatError):
    pass


class NonFiniteDataError(FormatError):
    pass


def _require_finite(arr: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(arr)):
        raise NonFiniteDataError(f"{what} contains NaN or infinite values")


def _read_exact(path, header: struct.Struct, magic: bytes):
    data = Path(path).read_bytes()
    if data[: len(magic)] != magic:
        raise BadMagicError(f"{path}: not a {magic.strip(bytes([0, 10])).decode()} file")
    if len(data) < header.size:
        raise TruncatedFileError(f"{path}: header truncated")
    return data, header.unpack_from(data)


def write_radseq(path, seq: RadianceSequence) -> None:
    frames = np.asarray(seq.frames)
    _require_finite(frames, "radiance sequence")
    n, h, w, _ = frames.shape
    with np.errstate(over="ignore"):
        planes = np.ascontiguousarray(frames.transpose(0, 3, 1, 2), dtype="<f4")
    _require_finite(planes, "radiance sequence (as float32)")
    with open(path, "wb") as fh:
        fh.write(_RADSEQ_HEADER.pack(RADSEQ_MAGIC, w, h, n, float(seq.e_S)))
        fh.write(planes.tobytes())


def read_radseq(path) -> RadianceSequence:
    data, (_, w, h, n, e_S) = _read_exact(path, _RADSEQ_HEADER, RADSEQ_MAGIC)
    expected = _RADSEQ_HEADER.size + n * 3 * h * w * 4
    if len(data) < expected:
        raise TruncatedFileError(f"{path}: expected {expected} bytes, found {len(data)}")
    if len(data) > expected:
        raise FormatError(f"{path}: {len(data) - expected} trailing bytes")
    planes = np.frombuffer(data, dtype="<f4", count=n * 3 * h * w, offset=_RADSEQ_HEADER.size)
    _require_finite(planes, str(path))
    frames = planes.reshape(n, 3, h, w).transpose(0, 2, 3, 1).astype(np.float32)
    return RadianceSequence(frames, e_S)


def write_bayer(path, frame: BayerFrame) -> None:
    plane = np.ascontiguousarray(frame.plane, dtype="<f4")
    _require_finite(plane, "Bayer plane")
    meta = np.array([frame.exposure, frame.gain, frame.t_start, frame.t_end], dtype=np.float64)
    _require_finite(meta, "Bayer metadata")
    h, w = plane.shape
    with open(path, "wb") as fh:
        fh.write(_BAYER_HEADER.pack(BAYER_MAGIC, w, h, *meta))
        fh.write(plane.tobytes())


def read_bayer(path) -> BayerFrame:
    data, (_, w, h, exposure, gain, t_start, t_end) = _read_exact(path, _BAYER_HEADER, BAYER_MAGIC)
    expected = _BAYER_HEADER.size + h * w * 4
    if len(data) < expected:
        raise TruncatedFileError(f"{path}: expected {expected} bytes, found {len(data)}")
    if len(data) > expected:
        raise FormatError(f"{path}: {len(data) - expected} trailing bytes")
    plane = np.frombuffer(data, dtype="<f4", count=h * w, offset=_BAYER_HEADER.size).reshape(h, w).copy()
    _require_finite(plane, str(path))
    return BayerFrame(plane, exposure, gain, t_start, t_end)


def read_png(path) -> np.ndarray:
    """Read an 8- or 16-bit PNG as float64 in [0, 1]; RGB images come back (H, W, 3)."""
    img = cv2.imread(os.fspath(path), cv2.IMREAD_UNCHANGED)
    if img is None:
        raise OSError(f"cannot read image {path}")
    if img.dtype == np.uint8:
        scale = 255.0
    elif img.dtype == np.uint16:
        scale = 65535.0
    else:
        raise FormatError(f"{path}: unsupported sample type {img.dtype}")
    if img.ndim == 3:
        img = img[..., :3][..., ::-1]  # BGR(A) -> RGB
    return img.astype(np.float64) / scale


def export_png(img, path, bit_depth: int = 8) -> None:
    """Write an (H, W) or (H, W, 3) image with values in [0, 1] as PNG."""
    if bit_depth not in (8, 16):
        raise ValueError("PNG bit depth must be 8 or 16")
    img = np.asarray(getattr(img, "plane", img), dtype=np.float64)
    levels = 2**bit_depth - 1
    q = np.floor(np.clip(img, 0.0, 1.0) * levels + 0.5).astype(np.uint8 if bit_depth == 8 else np.uint16)
    if q.ndim == 3:
        q = np.ascontiguousarray(q[..., ::-1])
    if not cv2.imwrite(os.fspath(path), q):
        raise OSError(f"cannot write image {path}")


def import_png_sequence(directory, pattern: str = "*.png") -> List[np.ndarray]:
    """Load all matching PNGs in lexicographic filename order."""
    paths = sorted(Path(directory).glob(pattern), key=lambda p: p.name)
    if not paths:
        raise FileNotFoundError(f"no files matching {pattern!r} in {directory}")
    frames = [read_png(p) for p in paths]
    for p, f in zip(paths, frames):
        if f.shape != frames[0].shape:
            raise ValueError(f"{p.name} has shape {f.shape}, expected {frames[0].shape}")
    return frames
