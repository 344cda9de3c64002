"""Optimize schedule logits by gradient descent through the simulator.

Starting from short uniform exposures on a static, noisy scene, the
optimizer lengthens the frames because nothing is lost to blur. On a scene
with fast motion it settles on shorter frames. The noise field is held
fixed (common random numbers), so the loss curve is deterministic.

    python demos/04_optimize_schedule.py
"""

import numpy as np

from burstsched import CameraConfig, optimize_schedule
from burstsched.scenes import frames_needed, static_scene, translating_scene

cfg = CameraConfig()
n = frames_needed(cfg)
start = np.array([-2.0, -2.0, -2.0, -2.0, 2.0])

for title, seq, g_p in [
    ("static scene", static_scene(64, 64, n, seed=4), 102400.0),
    ("moving scene (3 px/frame)", translating_scene(64, 64, n, (1.0, 3.0), seed=4, ramp=2e-4), 51200.0),
]:
    traj = optimize_schedule(start, seq, g_p, cfg, seed=0, steps=150, lr=0.5)
    print(f"\n{title}")
    for rec in traj.records[::30]:
        units = ", ".join(f"{x * 1920:5.1f}" for x in rec.t)
        print(f"  step {rec.step:>3}: loss {rec.loss:.5f}  t = ({units})/1920 s  total {rec.t.sum() * 1920:5.1f}")
