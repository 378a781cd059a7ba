"""
NSGA-II on Problem I
====================

A seeded run at desk scale, with the front written as CSV and SVG and the
hypervolume traced per generation.
"""

import sys
from pathlib import Path

import numpy as np

from sprayopt.nsga2 import NsgaConfig, run
from sprayopt.problems import builtin
from sprayopt.svg import scatter_svg

out_dir = Path(sys.argv[1] if len(sys.argv) > 1 else "nsga2_demo_output")
out_dir.mkdir(exist_ok=True)

problem = builtin("I")
front = run(problem, NsgaConfig(population=100, generations=200, seed=7))
print(f"{len(front)} non-dominated solutions")

order = np.argsort(front.raw[:, 0])
for i in order[:: max(1, len(order) // 8)]:
    print(np.round(front.decisions[i], 2), "->", np.round(front.raw[i], 4))

history = front.provenance["history"]
for rec in history[::40]:
    print(f"generation {rec['generation']:>3}: front size {rec['front_size']:>3}, hypervolume {rec['hypervolume']:.4f}")

(out_dir / "front.csv").write_text(front.to_csv())
(out_dir / "front.svg").write_text(scatter_svg(front.raw, "hardness (HV5)", "efficiency", "Problem I, NSGA-II"))
print("wrote", out_dir / "front.csv", "and", out_dir / "front.svg")
