"""
Dominance, fronts, crowding and hypervolume
===========================================

Six candidates are compared under (maximize f1, minimize f2).  Maximized
objectives are negated so everything else works on minimization.
"""

import numpy as np

from sprayopt.pareto import (
    crowding_distance,
    hypervolume_2d,
    non_dominated_sort,
    strongly_dominates,
    weakly_dominates,
)

labels = np.array(list("ABCDEF"))
raw = np.array([[2, 7], [3, 5], [4, 6], [4, 4], [6, 5], [7, 7]], dtype=float)
F = raw * [-1, 1]  # canonical form

print("B dominates A:", weakly_dominates(F[1], F[0]))
print("D dominates C weakly:", weakly_dominates(F[3], F[2]), " strongly:", strongly_dominates(F[3], F[2]))

fronts, ranks = non_dominated_sort(F)
for r, front in enumerate(fronts, start=1):
    print(f"front {r}: {', '.join(labels[front])}")

first = F[fronts[0]]
print("crowding on the first front:", crowding_distance(first))

# Hypervolume in canonical space against a reference point dominated by every member.
ref = first.max(axis=0) + 1
print("hypervolume:", hypervolume_2d(first, ref))
