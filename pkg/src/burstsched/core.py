"""Camera constants, exposure-schedule parameterization and capture timing.

All times are in seconds. The radiance clock ticks once per ``e_S`` seconds,
so with the default constants a time of ``k / 1920`` seconds falls on
radiance frame ``k``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from burstsched.noise import NoiseModel

UNIT = 1.0 / 1920.0


@dataclass(frozen=True)
class CameraConfig:
    """Timing, gain range and noise settings of the simulated camera.

    Defaults reproduce the 1920 FPS low-light setup: a 1/120 s preview,
    a 1/240 s minimum exposure and gains between 51200 and 102400.
    """

    e_S: float = UNIT
    delta: float = 7 * UNIT
    delta_p: float = 39 * UNIT
    t_p: float = 16 * UNIT
    t_min: float = 8 * UNIT
    t0: float = 80 * UNIT
    t_u: float = 128 * UNIT
    n: int = 4
    k: float = 1.0
    g_min: float = 51200.0
    g_max: float = 102400.0
    m_thr: float = 20.0
    bit_depth: int = 16
    noise: NoiseModel = field(default_factory=NoiseModel)

    def __post_init__(self):
        for name in ("e_S", "t_p", "t_min", "t_u"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.delta < 0 or self.delta_p < 0:
            raise ValueError("frame gaps must be non-negative")
        if self.n < 1:
            raise ValueError("burst size n must be at least 1")
        if self.g_max <= self.g_min:
            raise ValueError("g_max must exceed g_min")
        frames = self.t0 / self.e_S
        if abs(frames - round(frames)) > 1e-9:
            raise ValueError("t0 must be an integer multiple of e_S")
        if not self.t0 > 2 * self.t_p + self.delta_p + self.delta:
            raise ValueError("t0 leaves no room for the two preview frames")
        if (self.n + 1) * self.epsilon >= 1:
            raise ValueError("t_min / t_u too large for a burst of n frames")

    @property
    def epsilon(self) -> float:
        return self.t_min / self.t_u

    @property
    def t0_frame(self) -> int:
        return int(round(self.t0 / self.e_S))

    def to_dict(self) -> dict:
        out = {k: getattr(self, k) for k in self.__dataclass_fields__ if k != "noise"}
        out["noise"] = self.noise.to_dict()
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "CameraConfig":
        """Build a config from a (possibly partial) mapping of overrides.

        Time fields may be given in seconds, or in radiance frames by adding
        the suffix ``_frames`` (``{"t0_frames": 96}``).
        """
        kwargs = {}
        base = cls()
        e_S = float(data.get("e_S", base.e_S))
        for key, value in data.items():
            if key == "noise":
                kwargs["noise"] = NoiseModel.from_dict(value)
            elif key.endswith("_frames"):
                kwargs[key[: -len("_frames")]] = float(value) * e_S
            elif key in cls.__dataclass_fields__:
                kwargs[key] = value
            else:
                raise KeyError(f"unknown camera setting {key!r}")
        for key in ("n", "bit_depth"):
            if key in kwargs:
                kwargs[key] = int(kwargs[key])
        return replace(base, **kwargs)

    @classmethod
    def from_json(cls, path) -> "CameraConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


@dataclass(frozen=True)
class ScheduleLogits:
    """Unconstrained parameters of an n-frame schedule (n + 1 logits)."""

    f: np.ndarray
    t_u: float = 128 * UNIT
    epsilon: float = 1.0 / 16.0

    def __post_init__(self):
        f = np.asarray(self.f, dtype=np.float64)
        if f.ndim != 1 or f.size < 2:
            raise ValueError("logits must be a vector of length n + 1 >= 2")
        object.__setattr__(self, "f", f)

    @classmethod
    def from_config(cls, f, cfg: CameraConfig) -> "ScheduleLogits":
        return cls(f, t_u=cfg.t_u, epsilon=cfg.epsilon)

    @property
    def n(self) -> int:
        return self.f.size - 1


@dataclass(frozen=True)
class ExposureSchedule:
    """Per-frame exposure times in seconds."""

    t: np.ndarray
    t_u: Optional[float] = None
    logits: Optional[np.ndarray] = None

    def __post_init__(self):
        t = np.asarray(self.t, dtype=np.float64)
        if t.ndim != 1 or t.size == 0:
            raise ValueError("schedule must be a non-empty vector")
        if not np.all(np.isfinite(t)) or np.any(t <= 0):
            raise ValueError("exposure times must be finite and positive")
        object.__setattr__(self, "t", t)

    @property
    def n(self) -> int:
        return self.t.size

    @property
    def in_units(self) -> np.ndarray:
        """Exposure times in units of 1/1920 s."""
        return self.t * 1920.0

    @classmethod
    def from_units(cls, values: Sequence[float], **kwargs) -> "ExposureSchedule":
        return cls(np.asarray(values, dtype=np.float64) * UNIT, **kwargs)

    def validate(self, cfg: CameraConfig, rtol: float = 1e-12) -> None:
        """Raise if the schedule breaks the camera's exposure limits."""
        if np.any(self.t < cfg.t_min * (1 - rtol)):
            raise ValueError("exposure below t_min")
        t_u = self.t_u if self.t_u is not None else cfg.t_u
        if self.t.sum() > t_u * (1 + rtol):
            raise ValueError("total exposure exceeds t_u")

    def to_dict(self) -> dict:
        out = {"t_seconds": [float(x) for x in self.t]}
        if self.t_u is not None:
            out["t_u"] = float(self.t_u)
        if self.logits is not None:
            out["logits"] = [float(x) for x in self.logits]
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "ExposureSchedule":
        logits = data.get("logits")
        return cls(
            np.asarray(data["t_seconds"], dtype=np.float64),
            t_u=data.get("t_u"),
            logits=None if logits is None else np.asarray(logits, dtype=np.float64),
        )

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "ExposureSchedule":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


@dataclass(frozen=True)
class CaptureTimeline:
    """Start and end times of each burst frame on the radiance clock."""

    starts: np.ndarray
    ends: np.ndarray

    @property
    def durations(self) -> np.ndarray:
        return self.ends - self.starts

    def in_units(self):
        return self.starts * 1920.0, self.ends * 1920.0

    def start_jacobian(self) -> np.ndarray:
        """d starts[i] / d t[j] = 1 if j < i."""
        n = self.starts.size
        return np.tril(np.ones((n, n)), k=-1)

    def end_jacobian(self) -> np.ndarray:
        """d ends[i] / d t[j] = 1 if j <= i."""
        n = self.ends.size
        return np.tril(np.ones((n, n)))


@dataclass(frozen=True)
class ShotContext:
    """Scalar shooting conditions derived from the preview pair."""

    g_p: float
    t_p: float
    m_p_raw: float
    g_p_norm: float
    m_p_norm: float


def _softmax(f: np.ndarray) -> np.ndarray:
    z = np.exp(f - f.max())
    return z / z.sum()


def _check_logits(logits: ScheduleLogits) -> None:
    if not np.all(np.isfinite(logits.f)):
        raise ValueError("logits must be finite")
    if (logits.n + 1) * logits.epsilon >= 1:
        raise ValueError("(n + 1) * epsilon must be below 1")


def bounded_fractions(logits: ScheduleLogits) -> np.ndarray:
    """All n + 1 bounded-softmax fractions (they sum to one)."""
    _check_logits(logits)
    eps = logits.epsilon
    return eps + (1.0 - (logits.n + 1) * eps) * _softmax(logits.f)


def bounded_softmax(logits: ScheduleLogits) -> ExposureSchedule:
    """Map n + 1 logits to n exposure times.

    Each fraction is ``eps + (1 - (n+1) eps) * softmax(f)_i``, which keeps it
    inside ``[eps, 1 - n eps]``; the first n fractions are scaled by ``t_u``
    and the last one is slack that lets the total stay below ``t_u``.
    """
    p = bounded_fractions(logits)
    return ExposureSchedule(logits.t_u * p[:-1], t_u=logits.t_u, logits=logits.f.copy())


def bounded_softmax_jacobian(logits: ScheduleLogits) -> np.ndarray:
    """d t_i / d f_j as an n x (n+1) matrix."""
    _check_logits(logits)
    s = _softmax(logits.f)
    scale = logits.t_u * (1.0 - (logits.n + 1) * logits.epsilon)
    jac = scale * (np.diag(s) - np.outer(s, s))
    return jac[:-1]


def build_timeline(sched: ExposureSchedule, cfg: CameraConfig) -> CaptureTimeline:
    """Lay the burst out after ``t0`` with a gap of ``delta`` between frames."""
    t = sched.t
    n = t.size
    # fsum keeps long schedules from accumulating rounding drift
    starts = np.array([math.fsum([cfg.t0, *t[:i], *([cfg.delta] * i)]) for i in range(n)])
    ends = np.array([math.fsum([cfg.t0, *t[: i + 1], *([cfg.delta] * i)]) for i in range(n)])
    return CaptureTimeline(starts, ends)


def gains_from_schedule(sched: ExposureSchedule, g_p: float, t_p: float, k: float = 1.0) -> np.ndarray:
    """Gains that keep every frame at the preview's brightness.

    With preview exposure ``e = t_p * g_p / k`` the gain of frame i is
    ``k * e / t_i = g_p * t_p / t_i``; ``k`` cancels.
    """
    t = np.asarray(sched.t if isinstance(sched, ExposureSchedule) else sched, dtype=np.float64)
    if np.any(t <= 0):
        raise ValueError("exposure times must be positive")
    if not g_p > 0:
        raise ValueError("preview gain must be positive")
    return g_p * t_p / t


def normalize_inputs(g_hat: float, m_hat: float, cfg: CameraConfig):
    """Scale preview gain and motion magnitude into [0, 1]."""
    if not math.isfinite(g_hat):
        raise ValueError("gain must be finite")
    if m_hat < 0:
        raise ValueError("motion magnitude must be non-negative")
    g_norm = (g_hat - cfg.g_min) / (cfg.g_max - cfg.g_min)
    g_norm = min(max(g_norm, 0.0), 1.0)
    m_norm = min(m_hat / cfg.m_thr, 1.0)
    return g_norm, m_norm
