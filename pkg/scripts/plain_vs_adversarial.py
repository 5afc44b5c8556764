"""Iterations to reach margin 1/2 from w0 = (0, c) on the single example ((1, 0), +1).

Plain GD grows the useful coordinate like ln(t), so the count explodes with c;
alpha-GD at alpha = 1/2 pushes the model toward the data at a constant rate.
"""
import numpy as np

from advlin.losses import Dataset
from advlin.metrics import exp_gd_threshold_tight
from advlin.trainers import run_alpha_gd

S = Dataset(np.array([[1.0, 0.0]]), np.array([1.0]))
print(f"{'c':>4} {'alpha-GD':>9} {'plain GD':>9} {'lower bound':>12}")
for c in (1, 2, 5, 8, 10, 12):
    w0 = np.array([0.0, float(c)])
    adv = run_alpha_gd(S, 0.5, 1.0, 200, w0=w0).first_margin_at_least(0.5)
    plain = run_alpha_gd(S, 0.0, 1.0, 20_000, w0=w0).first_margin_at_least(0.5)
    print(f"{c:>4} {adv!s:>9} {plain!s:>9} {exp_gd_threshold_tight(c, 0.5):>12.1f}")
