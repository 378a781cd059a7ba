"""
Weighted-sum sweep with SQP
===========================

101 weight vectors, each solved from 32 Latin-hypercube starts.  The Problem I
front is not convex enough for scalarization to reach its interior, so every
weight lands at one of the two extremes.
"""

import numpy as np

from sprayopt.problems import builtin, grid_optima
from sprayopt.weighted_sum import weighted_sum_sweep

problem = builtin("I")
sweep = weighted_sum_sweep(problem, seed=0)
summary = sweep.summary()
print(f"{summary['n_converged_weights']}/{summary['n_weights']} weights converged, "
      f"{summary['n_deduplicated']} distinct solutions")

for x, f in zip(sweep.solutions.decisions, sweep.solutions.raw):
    print(np.round(x, 2), "->", np.round(f, 4))

# Which weights reach which solution
targets = problem.encode(sweep.deduplicated.decisions)
for k, target in enumerate(targets):
    hits = [r["weights"][0] for r in sweep.records
            if r["converged"] and np.max(np.abs(np.array(r["coded"]) - target)) < 1e-3]
    print(f"solution {k}: reached by {len(hits)} weights, w1 in [{min(hits):.2f}, {max(hits):.2f}]")

coded, best = grid_optima(problem, per_axis=11)
print("grid optima (hardness, efficiency):", np.round(np.diag(best), 4))
