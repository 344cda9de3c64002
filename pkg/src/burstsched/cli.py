"""Command-line entry point: ``burstsched <command> ...``.

Every command is deterministic for fixed flags and seeds. Times on the
command line are in units of 1/1920 s unless ``--seconds`` is given.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from burstsched.core import UNIT, CameraConfig, ExposureSchedule, ScheduleLogits, bounded_softmax, normalize_inputs
from burstsched.fusion import psnr, ssim
from burstsched.io import export_png, import_png_sequence, read_bayer, read_png, read_radseq, write_bayer, write_radseq
from burstsched.motion import motion_magnitude
from burstsched.rawconv import DEFAULT_CCM_BANK, ColorPipelineParams, convert_sequence, demosaic_bilinear, forward_isp, sample_pipeline_params
from burstsched.schedopt import DEFAULT_CANDIDATES, gradcheck, optimize_schedule, pseudo_gt_search
from burstsched.simulator import ground_truth, synthesize_burst, synthesize_previews


def _num(x) -> str:
    """Shortest decimal that round-trips the float exactly."""
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(x)


def _floats(text: str):
    return [float(v) for v in text.split(",") if v.strip()]


def _config(args) -> CameraConfig:
    cfg = CameraConfig.from_json(args.config) if args.config else CameraConfig()
    if getattr(args, "noise_free", False):
        cfg = replace(cfg, noise=replace(cfg.noise, enabled=False))
    return cfg


def _write_json(path, data) -> None:
    with open(path, "w") as fh:
        json.dump(data, fh, indent=2, sort_keys=True, allow_nan=True)
        fh.write("\n")


def _schedule_header(n: int):
    return [f"t{i + 1}_s" for i in range(n)] + [f"t{i + 1}_u1920" for i in range(n)]


def _schedule_cells(t):
    return [_num(x) for x in t] + [_num(x / UNIT) for x in t]


# ---------------------------------------------------------------- commands


def cmd_convert(args) -> int:
    frames = import_png_sequence(args.in_dir, args.pattern)
    if args.wb_seed is not None:
        params = sample_pipeline_params(args.wb_seed)
    else:
        params = ColorPipelineParams()
    if args.ccm is not None:
        params = replace(params, ccm=DEFAULT_CCM_BANK[args.ccm])
    cfg = _config(args)
    seq = convert_sequence(frames, params, cfg.e_S)
    write_radseq(args.out, seq)
    _write_json(str(args.out) + ".json", {"color_pipeline": params.to_dict(), "frames": len(seq), "e_S": seq.e_S})
    print(f"wrote {len(seq)} frames of {seq.shape[1]}x{seq.shape[0]} to {args.out}")
    return 0


def _schedule_from_args(args, cfg: CameraConfig) -> ExposureSchedule:
    if args.logits is not None:
        return bounded_softmax(ScheduleLogits.from_config(_floats(args.logits), cfg))
    values = np.asarray(_floats(args.schedule))
    return ExposureSchedule(values if args.seconds else values * UNIT)


def cmd_simulate(args) -> int:
    cfg = _config(args)
    seq = read_radseq(args.radseq)
    sched = _schedule_from_args(args, cfg)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    burst = synthesize_burst(seq, sched, args.gain_p, cfg, args.seed)
    I_p, I_prev = synthesize_previews(seq, args.gain_p, cfg, args.seed)
    gt = ground_truth(seq, cfg)
    m_raw = motion_magnitude(I_p, I_prev, args.downsample, cfg.m_thr)
    g_norm, m_norm = normalize_inputs(args.gain_p, m_raw, cfg)

    records = []
    for i, (frame, p) in enumerate(zip(burst.frames, burst.noise)):
        name = f"frame_{i + 1}.bayer"
        write_bayer(out / name, frame)
        records.append(
            {
                "file": name,
                "exposure_s": frame.exposure,
                "exposure_u1920": frame.exposure / UNIT,
                "gain": frame.gain,
                "t_start_s": frame.t_start,
                "t_end_s": frame.t_end,
                "lambda_shot": p.lambda_shot,
                "lambda_read": p.lambda_read,
            }
        )
    for name, frame in (("preview.bayer", I_p), ("preview_prev.bayer", I_prev), ("gt.bayer", gt)):
        write_bayer(out / name, frame)
    if args.png:
        for i, frame in enumerate(burst.frames):
            export_png(forward_isp(frame), out / f"frame_{i + 1}.png")
        export_png(forward_isp(I_p), out / "preview.png")
        export_png(forward_isp(gt), out / "gt.png")
    manifest = {
        "seed": args.seed,
        "gain_p": args.gain_p,
        "schedule": sched.to_dict(),
        "frames": records,
        "previews": {"current": "preview.bayer", "previous": "preview_prev.bayer"},
        "ground_truth": "gt.bayer",
        "motion": {"m_p_raw": m_raw, "m_p_norm": m_norm, "g_p_norm": g_norm},
        "camera": cfg.to_dict(),
    }
    _write_json(out / "manifest.json", manifest)
    print(f"gains: {', '.join(f'{g:.6g}' for g in burst.gains)}")
    print(f"motion m_p: raw {m_raw:.4f} px  normalized {m_norm:.4f}   gain g_p normalized {g_norm:.4f}")
    return 0


def _load_candidates(path):
    if path is None:
        return list(DEFAULT_CANDIDATES)
    with open(path) as fh:
        data = json.load(fh)
    out = []
    for item in data:
        if isinstance(item, dict):
            out.append(ExposureSchedule.from_dict(item))
        else:
            out.append(ExposureSchedule.from_units(item))
    return out


def cmd_search(args) -> int:
    cfg = _config(args)
    seq = read_radseq(args.radseq)
    candidates = _load_candidates(args.candidates)
    result = pseudo_gt_search(seq, args.gain_p, cfg, candidates, args.seed, common_noise=not args.independent_noise)
    n = max(c.n for c in candidates)
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["candidate_or_step", *_schedule_header(n), "loss", "psnr_db", "ssim", "grad_norm", "seed", "best"])
        for row in result.scores:
            t = list(row["t"]) + [math.nan] * (n - len(row["t"]))
            writer.writerow(
                [row["index"], *_schedule_cells(t), _num(row["loss"]), _num(row["psnr_db"]), _num(row["ssim"]), "", row["seed"], int(row["index"] == result.best_index)]
            )
    units = ", ".join(f"{x:g}" for x in result.best.t / UNIT)
    print(f"best candidate {result.best_index}: ({units})/1920 s  PSNR {result.scores[result.best_index]['psnr_db']:.3f} dB")
    return 0


def cmd_optimize(args) -> int:
    cfg = _config(args)
    seq = read_radseq(args.radseq)
    init = _floats(args.init_logits) if args.init_logits else np.zeros(cfg.n + 1)
    traj = optimize_schedule(init, seq, args.gain_p, cfg, args.seed, args.seed_policy, args.steps, args.lr)
    n = cfg.n
    with open(args.out_csv, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["candidate_or_step", *_schedule_header(n), *[f"f{j + 1}" for j in range(n + 1)], "loss", "grad_norm", "seed"])
        for rec in traj.records:
            writer.writerow([rec.step, *_schedule_cells(rec.t), *[_num(v) for v in rec.logits], _num(rec.loss), _num(rec.grad_norm), rec.seed])
    sched = traj.schedule(cfg)
    sched.validate(cfg)
    sched.save(args.out_schedule)
    print(f"loss {traj.initial.loss:.6g} -> {traj.final.loss:.6g} after {len(traj) - 1} steps")
    print(f"schedule: ({', '.join(f'{x:.3f}' for x in sched.t / UNIT)})/1920 s")
    if traj.aborted:
        print("stopped early: non-finite loss", file=sys.stderr)
        return 1
    return 0


def cmd_gradcheck(args) -> int:
    cfg = _config(args)
    seq = read_radseq(args.radseq) if args.radseq else None
    report = gradcheck(
        trials=args.trials,
        seed=args.seed,
        cfg=cfg,
        seq=seq,
        size=args.size,
        h=args.h,
        rtol=args.rtol,
        drop_gain_path=args.inject_bug == "gain-chain",
    )
    data = {
        "status": report.status,
        "max_rel_err": report.max_rel_err,
        "rtol": report.rtol,
        "injected_bug": args.inject_bug,
        "trials": [
            {
                "index": t.index,
                "status": t.status,
                "max_rel_err": t.max_rel_err,
                "g_p": t.g_p,
                "logits": t.logits.tolist(),
                "analytic": t.analytic.tolist(),
                "numeric": t.numeric.tolist(),
            }
            for t in report.trials
        ],
    }
    _write_json(args.report, data)
    print(f"{report.status}: max relative error {report.max_rel_err:.3e} over {len(report.trials)} trials (rtol {report.rtol:g})")
    return 1 if report.status == "FAIL" else 0


def _load_rgb(path) -> np.ndarray:
    path = Path(path)
    if path.suffix == ".bayer":
        return demosaic_bilinear(read_bayer(path))
    img = read_png(path)
    return demosaic_bilinear(img) if img.ndim == 2 else img


def cmd_eval(args) -> int:
    a = _load_rgb(args.fused)
    b = _load_rgb(args.gt)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    record = {"psnr_db": psnr(a, b), "ssim": ssim(a, b), "l1_loss": float(np.abs(a - b).mean())}
    out = Path(args.out)
    if out.suffix == ".csv":
        with open(out, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["psnr_db", "ssim", "l1_loss"])
            writer.writerow([_num(record["psnr_db"]), _num(record["ssim"]), _num(record["l1_loss"])])
    else:
        _write_json(out, record)
    print(f"PSNR {record['psnr_db']:.4f} dB  SSIM {record['ssim']:.4f}  L1 {record['l1_loss']:.6g}")
    return 0


# ------------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="burstsched", description=__doc__.splitlines()[0])
    parser.add_argument("--config", help="JSON file with camera setting overrides")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("convert", help="sRGB PNG sequence -> RAW radiance sequence")
    p.add_argument("in_dir")
    p.add_argument("out")
    p.add_argument("--pattern", default="*.png")
    p.add_argument("--ccm", type=int, choices=range(len(DEFAULT_CCM_BANK)), help="index into the CCM bank (0 = identity)")
    p.add_argument("--wb-seed", type=int, help="sample CCM and white-balance gains with this seed")
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("simulate", help="synthesize a burst, previews and ground truth")
    p.add_argument("radseq")
    p.add_argument("out_dir")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--schedule", help="comma-separated exposure times")
    group.add_argument("--logits", help="comma-separated n+1 schedule logits")
    p.add_argument("--seconds", action="store_true", help="--schedule is in seconds, not 1/1920 s")
    p.add_argument("--gain-p", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--downsample", type=int, default=4)
    p.add_argument("--png", action="store_true", help="also write sRGB previews of each frame")
    p.add_argument("--noise-free", action="store_true")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("search", help="brute-force pseudo-ground-truth schedule search")
    p.add_argument("radseq")
    p.add_argument("out")
    p.add_argument("--gain-p", type=float, required=True)
    p.add_argument("--candidates", help="JSON list of schedules (lists in 1/1920 s or {t_seconds: [...]})")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--independent-noise", action="store_true", help="draw separate noise for each candidate")
    p.add_argument("--noise-free", action="store_true")
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("optimize", help="gradient descent on schedule logits")
    p.add_argument("radseq")
    p.add_argument("out_csv")
    p.add_argument("out_schedule")
    p.add_argument("--gain-p", type=float, required=True)
    p.add_argument("--steps", type=int, default=200)
    p.add_argument("--lr", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--seed-policy", choices=("fixed", "per-step"), default="fixed")
    p.add_argument("--init-logits", help="comma-separated n+1 starting logits (default zeros)")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("gradcheck", help="analytic vs finite-difference gradient report")
    p.add_argument("radseq", nargs="?", help="use this scene for every trial (default: random scenes)")
    p.add_argument("report")
    p.add_argument("--trials", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--size", type=int, default=64)
    p.add_argument("--h", type=float, default=1e-6, help="finite-difference step in logit units")
    p.add_argument("--rtol", type=float, default=1e-3)
    p.add_argument("--inject-bug", choices=("gain-chain",), help="deliberately break the analytic gradient")
    p.add_argument("--noise-free", action="store_true")
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("eval", help="PSNR / SSIM / L1 between two images")
    p.add_argument("fused", help=".png or .bayer")
    p.add_argument("gt", help=".png or .bayer")
    p.add_argument("out", help=".json or .csv")
    p.set_defaults(func=cmd_eval)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (OSError, ValueError, KeyError) as exc:
        print(f"burstsched {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
