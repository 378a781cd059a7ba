"""
Desirability-function direct search
===================================

Each objective is mapped onto [0, 1] and the weighted geometric mean D is
maximized with restarted Nelder-Mead over the coded box.
"""

import numpy as np

from sprayopt.desirability import desirability_max, maximize_desirability
from sprayopt.glm import normalize
from sprayopt.problems import builtin

# A one-sided transform: hardness of 662.5 is halfway between L=600 and U=725.
print("d(662.5) with r=2.5:", round(desirability_max(662.5, 600.0, 725.0, 2.5), 5))

for name in ("I", "II", "III"):
    problem = builtin(name)
    result = maximize_desirability(problem, seed=0)
    print(f"\nProblem {name}: D = {result.overall:.5f} (restart {result.restart_index})")
    print("  decision:", np.round(result.decision, 2))
    for label, d, f in zip(problem.labels, result.individual, result.raw):
        print(f"  {label:<12} value {f:10.4f}   d = {d:.4f}")

# The published desirability setting for Problem I, for comparison
p = builtin("I")
x_star = [45, 200, 1.04, 80, 751]
print("\nD at the published Problem I setting:", round(float(p.desirability.overall(p.raw_coded(normalize(x_star)))), 5))
