"""Check the analytic schedule gradient against finite differences.

Each trial draws a random scene, preview gain, logits and noise seed, then
compares the analytic gradient with central differences of the same loss.
A second run removes the dependence of the gains on the exposure times from
the analytic chain; the check is expected to catch this.

    python demos/05_gradient_check.py
"""

import numpy as np

from burstsched.schedopt import gradcheck

report = gradcheck(trials=10, seed=0, size=64)
print(f"intact gradient: {report.status}, max relative error {report.max_rel_err:.2e}")
for t in report.trials[:3]:
    print(f"  g_p {t.g_p:8.0f}  analytic {np.array2string(t.analytic, precision=4)}")
    print(f"  {'':>11}  numeric  {np.array2string(t.numeric, precision=4)}")

broken = gradcheck(trials=10, seed=0, size=64, drop_gain_path=True)
print(f"gain path removed: {broken.status}, max relative error {broken.max_rel_err:.2e}")
