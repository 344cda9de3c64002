"""Exposure-schedule objective, its analytic gradient, and schedule search.

The objective simulates a burst from schedule logits, fuses it with the
inverse-variance proxy and scores the result against the sharp ground truth
with an L1 loss. The noise field is fixed by the seed, so for a given seed
the loss is a deterministic, piecewise-smooth function of the logits and
:func:`objective_grad` returns its exact derivative.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence

import numpy as np

from burstsched.core import (
    CameraConfig,
    ExposureSchedule,
    ScheduleLogits,
    bounded_softmax,
    bounded_softmax_jacobian,
    build_timeline,
    gains_from_schedule,
)
from burstsched.fusion import psnr, ssim
from burstsched.noise import VAR_FLOOR, noise_params
from burstsched.rawconv import demosaic_bilinear, demosaic_matrix
from burstsched.simulator import (
    RadianceSequence,
    _integrate,
    _integrate_grad,
    burst_noise,
    ground_truth,
    required_frames,
)

DEFAULT_CANDIDATES = tuple(
    ExposureSchedule.from_units(t)
    for t in ((8, 8, 8, 8), (16, 16, 16, 16), (24, 24, 24, 24), (32, 32, 32, 32), (8, 16, 24, 32))
)


def n_threads() -> int:
    try:
        return max(1, int(os.environ.get("BURSTSCHED_THREADS", "1")))
    except ValueError:
        return 1


@dataclass
class _Frame:
    x: np.ndarray  # clean integrated signal
    f: np.ndarray  # clipped output
    inside: np.ndarray
    sd: np.ndarray
    live: np.ndarray  # variance above floor
    z: np.ndarray
    g: float
    amp: float
    lam_shot: float
    lam_read: float
    mu: float
    q: float


@dataclass
class _Forward:
    loss: float
    fused: np.ndarray
    target: np.ndarray
    frames: List[_Frame]
    weights: np.ndarray
    timeline: object
    t: np.ndarray


def _forward(t: np.ndarray, seq: RadianceSequence, g_p: float, cfg: CameraConfig, z: np.ndarray, target: np.ndarray) -> _Forward:
    sched = ExposureSchedule(t)
    tl = build_timeline(sched, cfg)
    need = required_frames(tl.ends[-1], seq.e_S)
    if need > len(seq):
        raise ValueError(f"schedule needs at least {need} radiance frames, sequence has {len(seq)}")
    gains = gains_from_schedule(sched, g_p, cfg.t_p, cfg.k)
    model = cfg.noise
    frames = []
    for i in range(t.size):
        p = noise_params(gains[i], model)
        amp = model.amplification(gains[i])
        x = _integrate(seq.bayer, tl.starts[i], tl.ends[i], seq.e_S)
        raw = p.lambda_read + p.lambda_shot * x
        live = raw > VAR_FLOOR
        sd = np.sqrt(np.where(live, raw, VAR_FLOOR))
        y = x + amp * sd * z[i]
        f = np.clip(y, 0.0, 1.0)
        mu = float(f.mean())
        q = amp**2 * max(p.lambda_read + p.lambda_shot * mu, VAR_FLOOR)
        frames.append(_Frame(x, f, (y > 0) & (y < 1), sd, live, z[i], gains[i], amp, p.lambda_shot, p.lambda_read, mu, q))
    inv = np.array([1.0 / fr.q for fr in frames])
    w = inv / inv.sum()
    fused_bayer = np.tensordot(w, np.stack([fr.f for fr in frames]), axes=1)
    fused = demosaic_bilinear(fused_bayer)
    loss = float(np.abs(fused - target).mean())
    return _Forward(loss, fused, target, frames, w, tl, t)


def _backward(fw: _Forward, seq: RadianceSequence, cfg: CameraConfig, g_p: float, drop_gain_path: bool = False) -> np.ndarray:
    """dL/dt for every exposure time."""
    model = cfg.noise
    resid = fw.fused - fw.target
    d_fused = np.sign(resid) / resid.size
    h, w = fw.frames[0].f.shape
    d_bayer = (demosaic_matrix(h, w).T @ d_fused.ravel()).reshape(h, w)
    n = len(fw.frames)
    inv_sum = sum(1.0 / fr.q for fr in fw.frames)
    d_w = np.array([float(np.vdot(d_bayer, fr.f)) for fr in fw.frames])
    d_r = (d_w - np.dot(fw.weights, d_w)) / inv_sum

    d_start = np.zeros(n)
    d_end = np.zeros(n)
    d_gain = np.zeros(n)
    for i, fr in enumerate(fw.frames):
        d_q = -d_r[i] / fr.q**2
        var_mu = fr.lam_read + fr.lam_shot * fr.mu
        d_lam_shot = d_lam_read = d_amp = 0.0
        d_mu = 0.0
        if var_mu > VAR_FLOOR:
            d_mu = d_q * fr.amp**2 * fr.lam_shot
            d_lam_shot += d_q * fr.amp**2 * fr.mu
            d_lam_read += d_q * fr.amp**2
        d_amp += d_q * 2 * fr.amp * max(var_mu, VAR_FLOOR)

        d_f = fw.weights[i] * d_bayer + d_mu / fr.f.size
        d_y = np.where(fr.inside, d_f, 0.0)
        half = np.where(fr.live, fr.amp * fr.z / (2.0 * fr.sd), 0.0)
        d_x = d_y * (1.0 + half * fr.lam_shot)
        d_lam_shot += float(np.vdot(d_y, half * fr.x))
        d_lam_read += float(np.vdot(d_y, half))
        d_amp += float(np.vdot(d_y, fr.sd * fr.z))

        if not drop_gain_path:
            dshot_dg = model.shot_slope
            dread_dshot = model.read_slope * fr.lam_read / fr.lam_shot
            d_gain[i] = (d_lam_shot + d_lam_read * dread_dshot) * dshot_dg + d_amp * model.amplification_grad(fr.g)

        ds, de = _integrate_grad(seq.bayer, fw.timeline.starts[i], fw.timeline.ends[i], seq.e_S, avg=fr.x)
        d_start[i] = float(np.vdot(d_x, ds))
        d_end[i] = float(np.vdot(d_x, de))

    gains = np.array([fr.g for fr in fw.frames])
    d_t = fw.timeline.start_jacobian().T @ d_start + fw.timeline.end_jacobian().T @ d_end
    d_t += d_gain * (-gains / fw.t)
    return d_t


def _setup(seq: RadianceSequence, cfg: CameraConfig, seed: int, n: int):
    z = burst_noise(seed, n, seq.shape, cfg.noise)
    target = demosaic_bilinear(ground_truth(seq, cfg))
    return z, target


def _logits(logits, cfg: CameraConfig) -> ScheduleLogits:
    if isinstance(logits, ScheduleLogits):
        return logits
    return ScheduleLogits.from_config(logits, cfg)


def objective(logits, seq: RadianceSequence, g_p: float, cfg: CameraConfig, seed: int) -> float:
    """L1 restoration loss of the proxy fusion for the schedule given by ``logits``."""
    lg = _logits(logits, cfg)
    sched = bounded_softmax(lg)
    z, target = _setup(seq, cfg, seed, sched.n)
    return _forward(sched.t, seq, g_p, cfg, z, target).loss


def value_and_grad(logits, seq: RadianceSequence, g_p: float, cfg: CameraConfig, seed: int, drop_gain_path: bool = False):
    lg = _logits(logits, cfg)
    sched = bounded_softmax(lg)
    z, target = _setup(seq, cfg, seed, sched.n)
    fw = _forward(sched.t, seq, g_p, cfg, z, target)
    d_t = _backward(fw, seq, cfg, g_p, drop_gain_path)
    return fw.loss, bounded_softmax_jacobian(lg).T @ d_t


def objective_grad(logits, seq: RadianceSequence, g_p: float, cfg: CameraConfig, seed: int, drop_gain_path: bool = False) -> np.ndarray:
    """Gradient of :func:`objective` with respect to the n + 1 logits.

    ``drop_gain_path`` zeroes the dependence of the noise on the gains; it
    exists only to show that :func:`gradcheck` catches a broken chain.
    """
    return value_and_grad(logits, seq, g_p, cfg, seed, drop_gain_path)[1]


def central_difference(fun: Callable[[np.ndarray], float], x, h: float = 1e-4) -> np.ndarray:
    if not h > 0:
        raise ValueError("step must be positive")
    x = np.asarray(x, dtype=np.float64)
    grad = np.empty_like(x)
    for j in range(x.size):
        e = np.zeros_like(x)
        e[j] = h
        grad[j] = (fun(x + e) - fun(x - e)) / (2 * h)
    return grad


def finite_diff_grad(logits, seq: RadianceSequence, g_p: float, cfg: CameraConfig, seed: int, h: float = 1e-4) -> np.ndarray:
    """Central differences of :func:`objective` with the same noise on both sides."""
    lg = _logits(logits, cfg)
    z, target = _setup(seq, cfg, seed, lg.n)

    def fun(f):
        sched = bounded_softmax(ScheduleLogits(f, lg.t_u, lg.epsilon))
        return _forward(sched.t, seq, g_p, cfg, z, target).loss

    return central_difference(fun, lg.f, h)


def evaluate_schedule(sched: ExposureSchedule, seq: RadianceSequence, g_p: float, cfg: CameraConfig, seed: int) -> dict:
    """Loss, PSNR and SSIM of the fused burst for an explicit schedule."""
    z, target = _setup(seq, cfg, seed, sched.n)
    fw = _forward(sched.t, seq, g_p, cfg, z, target)
    return {
        "loss": fw.loss,
        "psnr_db": psnr(fw.fused, target),
        "ssim": ssim(fw.fused, target) if min(target.shape[:2]) >= 11 else math.nan,
        "fused": fw.fused,
        "weights": fw.weights,
    }


# ---------------------------------------------------------------- optimizer


@dataclass
class StepRecord:
    step: int
    logits: np.ndarray
    t: np.ndarray
    loss: float
    grad_norm: float
    seed: int


@dataclass
class OptimTrajectory:
    records: List[StepRecord] = field(default_factory=list)
    aborted: bool = False

    def __len__(self):
        return len(self.records)

    @property
    def initial(self) -> StepRecord:
        return self.records[0]

    @property
    def final(self) -> StepRecord:
        return self.records[-1]

    def schedule(self, cfg: CameraConfig) -> ExposureSchedule:
        return bounded_softmax(ScheduleLogits.from_config(self.final.logits, cfg))


def _step_seed(seed: int, step: int, policy: str) -> int:
    if policy == "fixed":
        return seed
    if policy == "per-step":
        return int(np.random.SeedSequence([seed, step]).generate_state(1)[0])
    raise ValueError(f"unknown seed policy {policy!r}")


def optimize_schedule(
    init_logits,
    seq: RadianceSequence,
    g_p: float,
    cfg: CameraConfig,
    seed: int = 0,
    seed_policy: str = "fixed",
    steps: int = 200,
    lr: float = 0.5,
    momentum: float = 0.9,
) -> OptimTrajectory:
    """Gradient descent with momentum on the schedule logits.

    Records ``steps + 1`` points: the start and the state after each update.
    With ``seed_policy="fixed"`` every step sees the same noise (common
    random numbers); ``"per-step"`` redraws it each step.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    if lr < 0:
        raise ValueError("learning rate must be non-negative")
    _step_seed(seed, 0, seed_policy)
    f = np.array(_logits(init_logits, cfg).f, dtype=np.float64)
    velocity = np.zeros_like(f)
    traj = OptimTrajectory()
    for step in range(steps + 1):
        s = _step_seed(seed, step, seed_policy)
        lg = ScheduleLogits.from_config(f, cfg)
        sched = bounded_softmax(lg)
        sched.validate(cfg)
        loss, grad = value_and_grad(lg, seq, g_p, cfg, s)
        if not (math.isfinite(loss) and np.all(np.isfinite(grad))):
            traj.aborted = True
            break
        traj.records.append(StepRecord(step, f.copy(), sched.t, loss, float(np.linalg.norm(grad)), s))
        if step == steps:
            break
        velocity = momentum * velocity + grad
        f = f - lr * velocity
    return traj


# ------------------------------------------------------------------ search


@dataclass
class SearchResult:
    best_index: int
    best: ExposureSchedule
    scores: List[dict]


def pseudo_gt_search(
    seq: RadianceSequence,
    g_p: float,
    cfg: CameraConfig,
    candidates: Sequence[ExposureSchedule] = DEFAULT_CANDIDATES,
    seed: int = 0,
    common_noise: bool = True,
) -> SearchResult:
    """Score every candidate schedule and pick the one with the highest PSNR.

    With ``common_noise`` all candidates share one noise realization. Ties
    go to the lowest index.
    """
    candidates = list(candidates)
    if not candidates:
        raise ValueError("candidate set is empty")

    def score(k):
        s = seed if common_noise else int(np.random.SeedSequence([seed, k]).generate_state(1)[0])
        r = evaluate_schedule(candidates[k], seq, g_p, cfg, s)
        return {"index": k, "t": candidates[k].t, "loss": r["loss"], "psnr_db": r["psnr_db"], "ssim": r["ssim"], "seed": s}

    with ThreadPoolExecutor(max_workers=n_threads()) as pool:
        scores = list(pool.map(score, range(len(candidates))))
    best = 0
    for k, row in enumerate(scores):
        if row["psnr_db"] > scores[best]["psnr_db"]:
            best = k
    return SearchResult(best, candidates[best], scores)


# --------------------------------------------------------------- gradcheck


def relative_error(a: np.ndarray, b: np.ndarray, floor: float = 1e-8) -> np.ndarray:
    """Componentwise |a - b| / max(|a|, |b|); NaN where both are below ``floor``."""
    scale = np.maximum(np.abs(a), np.abs(b))
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(scale > floor, np.abs(a - b) / scale, np.nan)


def near_breakpoint(t: np.ndarray, cfg: CameraConfig, margin: float = 1e-3) -> bool:
    """True if a movable frame edge lies within ``margin`` radiance frames of a frame boundary.

    The first start is pinned to ``t0`` and does not move with the schedule.
    """
    tl = build_timeline(ExposureSchedule(t), cfg)
    edges = np.concatenate([tl.starts[1:], tl.ends]) / cfg.e_S
    return bool(np.any(np.abs(edges - np.round(edges)) < margin))


@dataclass
class GradcheckTrial:
    index: int
    logits: np.ndarray
    g_p: float
    analytic: np.ndarray
    numeric: np.ndarray
    max_rel_err: float
    status: str


@dataclass
class GradcheckReport:
    trials: List[GradcheckTrial]
    rtol: float

    @property
    def max_rel_err(self) -> float:
        errs = [t.max_rel_err for t in self.trials if not math.isnan(t.max_rel_err)]
        return max(errs) if errs else 0.0

    @property
    def status(self) -> str:
        if any(t.status == "FAIL" for t in self.trials):
            return "FAIL"
        if all(t.status == "PASS-degenerate" for t in self.trials):
            return "PASS-degenerate"
        return "PASS"


def check_gradient(logits, seq, g_p, cfg, seed, h: float = 1e-6, rtol: float = 1e-3, drop_gain_path: bool = False, index: int = 0) -> GradcheckTrial:
    lg = _logits(logits, cfg)
    analytic = objective_grad(lg, seq, g_p, cfg, seed, drop_gain_path=drop_gain_path)
    numeric = finite_diff_grad(lg, seq, g_p, cfg, seed, h)
    rel = relative_error(analytic, numeric)
    if np.all(np.isnan(rel)):
        return GradcheckTrial(index, lg.f, g_p, analytic, numeric, math.nan, "PASS-degenerate")
    worst = float(np.nanmax(rel))
    return GradcheckTrial(index, lg.f, g_p, analytic, numeric, worst, "PASS" if worst < rtol else "FAIL")


def gradcheck(
    trials: int = 50,
    seed: int = 0,
    cfg: Optional[CameraConfig] = None,
    seq: Optional[RadianceSequence] = None,
    size: int = 64,
    h: float = 1e-6,
    rtol: float = 1e-3,
    drop_gain_path: bool = False,
) -> GradcheckReport:
    """Compare analytic and finite-difference gradients on random configurations.

    Each trial draws logits, a preview gain in ``[g_min, g_max]``, a noise
    seed and (unless ``seq`` is given) a random scene. Logits whose frame
    edges fall near a radiance-frame boundary are redrawn, since the loss
    has a kink there.
    """
    from burstsched.scenes import frames_needed, random_scene

    cfg = cfg or CameraConfig()
    rng = np.random.default_rng(seed)
    out = []
    for k in range(trials):
        scene = seq if seq is not None else random_scene(rng, size, size, frames_needed(cfg), cfg.e_S)
        g_p = float(rng.uniform(cfg.g_min, cfg.g_max))
        while True:
            f = rng.normal(0.0, 1.0, cfg.n + 1)
            t = bounded_softmax(ScheduleLogits.from_config(f, cfg)).t
            if not near_breakpoint(t, cfg):
                break
        noise_seed = int(rng.integers(2**31))
        out.append(check_gradient(f, scene, g_p, cfg, noise_seed, h, rtol, drop_gain_path, k))
    return GradcheckReport(out, rtol)
