"""Tabulate the GD and SGD bounds and the corollary iteration counts for both datasets."""
import sys

import numpy as np

from advlin.data import IrisSpec, SyntheticSpec, load_iris, scale_to_unit_ball, synth_two_circles
from advlin.harness import emit_bound_table
from advlin.metrics import BoundInputs, gd_step_cap, max_margin, sgd_step_cap

IRIS = "tests/data/iris.data"
T_GRID = [2, 10, 100, 1000, 10_000, 100_000, 1_000_000]

for name, S in (("synthetic", synth_two_circles(SyntheticSpec())), ("iris", load_iris(IrisSpec(IRIS)))):
    S, _ = scale_to_unit_ball(S)
    gamma = max_margin(S).gamma
    for frac in (0.25, 0.5, 0.75):
        alpha = frac * gamma
        eta = min(gd_step_cap(gamma, alpha), sgd_step_cap(alpha))
        print(f"\n## {name}: n={S.n} gamma={gamma:.6g} alpha={alpha:.6g} eta={eta:.6g}")
        sys.stdout.write(emit_bound_table(BoundInputs(S.n, S.d, gamma, alpha, eta), T_GRID))
