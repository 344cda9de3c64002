"""Simulate one low-light burst and look at what the schedule does to it.

A textured scene slides sideways while four frames are captured with the
schedule (8, 24, 40, 56)/1920 s. Each frame gets the gain that keeps its
brightness equal to the 1/120 s preview, so short frames are noisy and long
frames are blurred. The script prints per-frame statistics and writes sRGB
PNGs of the frames, the previews and the sharp reference.

    python demos/01_simulate_burst.py [OUT_DIR]
"""

import sys
from pathlib import Path

import numpy as np

from burstsched import CameraConfig, ExposureSchedule, ground_truth, synthesize_burst, synthesize_previews
from burstsched.io import export_png
from burstsched.motion import shot_context
from burstsched.rawconv import forward_isp
from burstsched.scenes import frames_needed, translating_scene

out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_out/burst")
out.mkdir(parents=True, exist_ok=True)

cfg = CameraConfig()
seq = translating_scene(96, 96, frames_needed(cfg), velocity=(0.05, 0.25), seed=11)
sched = ExposureSchedule.from_units([8, 24, 40, 56])
g_p = 76800.0

burst = synthesize_burst(seq, sched, g_p, cfg, seed=0)
gt = ground_truth(seq, cfg)
I_p, I_prev = synthesize_previews(seq, g_p, cfg, seed=0)
ctx = shot_context(I_p, I_prev, g_p, cfg)

print(f"preview gain {g_p:.0f} (normalized {ctx.g_p_norm:.2f}), motion {ctx.m_p_raw:.2f} px (normalized {ctx.m_p_norm:.2f})")
print(f"{'frame':>5} {'t [1/1920 s]':>13} {'window':>12} {'gain':>9} {'mean':>7} {'RMSE vs GT':>11}")
for i, frame in enumerate(burst.frames):
    rmse = np.sqrt(np.mean((frame.plane - gt.plane) ** 2))
    window = f"{frame.t_start * 1920:.0f}-{frame.t_end * 1920:.0f}"
    print(f"{i + 1:>5} {frame.exposure * 1920:>13.1f} {window:>12} {frame.gain:>9.0f} {frame.plane.mean():>7.4f} {rmse:>11.4f}")
    export_png(forward_isp(frame), out / f"frame_{i + 1}.png")

export_png(forward_isp(gt), out / "ground_truth.png")
export_png(forward_isp(I_p), out / "preview.png")
print(f"mean brightness of the reference: {gt.plane.mean():.4f}")
print(f"images written to {out}/")
