"""A posteriori weighted-sum scalarization solved by box-constrained SQP.

The SQP iteration keeps every iterate inside the box, models curvature with a
damped BFGS matrix, computes steps from a box-constrained QP solved by a primal
active-set method, and globalizes with Armijo backtracking.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.stats import qmc

from .pareto import SolutionSet, pareto_mask


@dataclass(frozen=True)
class SqpConfig:
    xtol: float = 1e-8
    max_iterations: int = 200
    multistart: int = 32
    armijo_c1: float = 1e-4
    backtrack: float = 0.5
    max_backtracks: int = 60

    def __post_init__(self):
        if not self.xtol > 0:
            raise ValueError("xtol must be positive")
        if self.max_iterations < 1 or self.multistart < 1:
            raise ValueError("max_iterations and multistart must be >= 1")
        if not 0 < self.armijo_c1 < 1 or not 0 < self.backtrack < 1:
            raise ValueError("Armijo parameters must lie in (0, 1)")


def weight_lattice(k: int, step: float) -> np.ndarray:
    """All weight vectors on a regular simplex grid, one per row.

    ``k=2`` gives ``(w1, 1-w1)``; ``k=3`` gives ``(w1, w2, 1-w1-w2)`` for every
    grid pair with ``w1 + w2 <= 1``.
    """
    if k not in (2, 3):
        raise ValueError("weight lattices are defined for 2 or 3 objectives")
    m = int(round(1.0 / step))
    if m < 1 or abs(m * step - 1.0) > 1e-9:
        raise ValueError(f"step {step} does not divide 1")
    if k == 2:
        w1 = np.arange(m + 1) / m
        return np.column_stack([w1, 1.0 - w1])
    rows = [(i / m, j / m, (m - i - j) / m) for i in range(m + 1) for j in range(m + 1 - i)]
    return np.array(rows)


def _check_weights(w) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
        raise ValueError(f"weights must be nonnegative and sum to 1, got {w}")
    return w


def scalarize(problem, w, coded) -> tuple[float, np.ndarray]:
    """Weighted sum of canonical objectives and its analytic gradient."""
    w = _check_weights(w)
    z = np.asarray(coded, dtype=float)
    value, grad = 0.0, np.zeros_like(z)
    for wl, sign, model in zip(w, problem.signs, problem.models):
        if wl == 0:
            continue
        value += wl * sign * model.predict(z)
        grad += wl * sign * model.gradient(z)
    return float(value), grad


def bfgs_update(H, s, y, damping_threshold: float = 1e-8, max_condition_ratio: float = 1e-12) -> np.ndarray:
    """Direct BFGS update of a Hessian approximation with Powell damping.

    Damping replaces ``y`` by ``theta*y + (1-theta)*H s`` whenever the curvature
    ``s'y`` is not safely positive, which keeps the update positive definite.
    Eigenvalues below ``max_condition_ratio`` times the largest are raised to
    that floor so definiteness survives floating point.
    """
    H = np.asarray(H, dtype=float)
    s = np.asarray(s, dtype=float)
    y = np.asarray(y, dtype=float)
    if not np.any(s):
        raise ValueError("zero step")
    Hs = H @ s
    sHs = float(s @ Hs)
    sy = float(s @ y)
    if sy <= damping_threshold * np.linalg.norm(s) * np.linalg.norm(y) and sy < 0.2 * sHs:
        theta = 0.8 * sHs / (sHs - sy)
        y = theta * y + (1 - theta) * Hs
        sy = float(s @ y)
    H_new = H - np.outer(Hs, Hs) / sHs + np.outer(y, y) / sy
    H_new = 0.5 * (H_new + H_new.T)
    # Exact arithmetic keeps H_new positive definite, but pairs with small positive
    # curvature inflate the condition number until rounding breaks definiteness.
    eig, vec = np.linalg.eigh(H_new)
    floor = max_condition_ratio * eig[-1]
    if eig[0] < floor:
        H_new = (vec * np.maximum(eig, floor)) @ vec.T
        H_new = 0.5 * (H_new + H_new.T)
    return H_new


def solve_box_qp(H, g, lower, upper, max_iter: int = 200) -> np.ndarray:
    """Minimize ``g'd + d'Hd/2`` subject to ``lower <= d <= upper``.

    Primal active-set method started from ``d = 0``, which must be feasible.
    ``H`` must be symmetric positive definite.
    """
    H = np.asarray(H, dtype=float)
    g = np.asarray(g, dtype=float)
    lo = np.asarray(lower, dtype=float)
    hi = np.asarray(upper, dtype=float)
    n = g.size
    try:
        np.linalg.cholesky(H)
    except np.linalg.LinAlgError:
        raise ValueError("QP Hessian is not positive definite") from None
    if np.any(lo > 0) or np.any(hi < 0):
        raise ValueError("d = 0 must satisfy the bounds")

    # 0 free, -1 held at lower, +1 held at upper
    state = np.zeros(n, dtype=int)
    fixed_forever = lo == hi
    state[fixed_forever] = -1
    d = np.zeros(n)
    scale = max(1.0, float(np.abs(g).max()), float(np.abs(H).max()))
    for _ in range(max_iter):
        free = state == 0
        target = np.where(state < 0, lo, np.where(state > 0, hi, 0.0))
        if free.any():
            rhs = -(g[free] + H[np.ix_(free, ~free)] @ target[~free])
            target[free] = np.linalg.solve(H[np.ix_(free, free)], rhs)
        p = target - d
        alpha, block, block_side = 1.0, -1, 0
        for i in np.flatnonzero(free):
            if p[i] < 0 and target[i] < lo[i]:
                a = (lo[i] - d[i]) / p[i]
                if a < alpha:
                    alpha, block, block_side = a, i, -1
            elif p[i] > 0 and target[i] > hi[i]:
                a = (hi[i] - d[i]) / p[i]
                if a < alpha:
                    alpha, block, block_side = a, i, 1
        if block >= 0:
            d = d + alpha * p
            state[block] = block_side
            d[block] = lo[block] if block_side < 0 else hi[block]
            continue
        d = target
        grad = H @ d + g
        # multiplier sign: held-at-lower wants grad >= 0, held-at-upper wants grad <= 0
        viol = np.where(state < 0, -grad, np.where(state > 0, grad, 0.0))
        viol[fixed_forever] = 0.0
        worst = int(np.argmax(viol))
        if viol[worst] <= 1e-14 * scale:
            return d
        state[worst] = 0
    raise RuntimeError("box QP active-set iteration did not terminate")


@dataclass
class SqpResult:
    x: np.ndarray
    fun: float
    iterations: int
    converged: bool
    nfev: int
    message: str = ""


def sqp_minimize(
    fun: Callable[[np.ndarray], tuple[float, np.ndarray]],
    x0,
    lower,
    upper,
    config: SqpConfig = SqpConfig(),
) -> SqpResult:
    """Minimize a smooth function over a box; ``fun`` returns ``(value, gradient)``.

    Stops when ``max_i |dx_i| / max(|x_i|, 1) < xtol`` or when the QP step
    vanishes (a KKT point); the iteration cap returns the best iterate flagged as
    not converged.
    """
    lo = np.asarray(lower, dtype=float)
    hi = np.asarray(upper, dtype=float)
    x = np.asarray(x0, dtype=float)
    if np.any(x < lo) or np.any(x > hi):
        raise ValueError("start point must lie in the box")
    f, g = fun(x)
    nfev = 1
    H = np.eye(x.size)
    for it in range(1, config.max_iterations + 1):
        d = solve_box_qp(H, g, lo - x, hi - x)
        if not np.any(d):
            return SqpResult(x, f, it, True, nfev, "zero QP step")
        slope = float(g @ d)
        t = 1.0
        for _ in range(config.max_backtracks):
            x_new = np.clip(x + t * d, lo, hi)
            f_new, g_new = fun(x_new)
            nfev += 1
            if f_new <= f + config.armijo_c1 * t * slope:
                break
            t *= config.backtrack
        else:
            # no decrease representable in floating point along d
            rel = np.max(np.abs(t * d) / np.maximum(np.abs(x), 1.0))
            return SqpResult(x, f, it, bool(rel < np.sqrt(config.xtol)), nfev, "line search stalled")
        s = x_new - x
        if not np.any(s):
            return SqpResult(x, f, it, True, nfev, "zero step")
        H = bfgs_update(H, s, g_new - g)
        converged = np.max(np.abs(s) / np.maximum(np.abs(x_new), 1.0)) < config.xtol
        x, f, g = x_new, f_new, g_new
        if converged:
            return SqpResult(x, f, it, True, nfev, "xtol reached")
    return SqpResult(x, f, config.max_iterations, False, nfev, "iteration cap")


def latin_hypercube_starts(lower, upper, n: int, seed) -> np.ndarray:
    lo = np.asarray(lower, dtype=float)
    hi = np.asarray(upper, dtype=float)
    return qmc.scale(qmc.LatinHypercube(lo.size, seed=seed).random(n), lo, hi)


@dataclass
class SweepResult:
    solutions: SolutionSet  # non-dominated subset of the deduplicated solutions
    deduplicated: SolutionSet
    records: list[dict] = field(default_factory=list)

    def summary(self) -> dict:
        return {
            "method": "weighted-sum",
            "n_weights": len(self.records),
            "n_converged_weights": sum(r["converged"] for r in self.records),
            "n_deduplicated": len(self.deduplicated),
            "n_nondominated": len(self.solutions),
            "runs": self.records,
        }


def _dedupe(points: np.ndarray, tol: float) -> list[int]:
    keep: list[int] = []
    for i, p in enumerate(points):
        if all(np.max(np.abs(p - points[j])) > tol for j in keep):
            keep.append(i)
    return keep


def weighted_sum_sweep(
    problem,
    lattice: Sequence | np.ndarray | None = None,
    config: SqpConfig | None = None,
    seed: int = 0,
    dedup_tol: float = 1e-4,
) -> SweepResult:
    """Solve the weighted-sum problem for each weight vector with multistart SQP."""
    config = config or problem.sqp
    if lattice is None:
        lattice = weight_lattice(problem.n_obj, problem.weight_step)
    lattice = np.atleast_2d(np.asarray(lattice, dtype=float))
    if lattice.size == 0:
        raise ValueError("empty weight lattice")
    lo, hi = problem.lower, problem.upper
    starts = latin_hypercube_starts(lo, hi, config.multistart, seed)

    records, coded = [], []
    for wi, w in enumerate(lattice):
        w = _check_weights(w)
        best: SqpResult | None = None
        n_conv = 0
        for x0 in starts:
            res = sqp_minimize(lambda z: scalarize(problem, w, z), x0, lo, hi, config)
            if not res.converged:
                continue
            n_conv += 1
            if best is None or res.fun < best.fun:
                best = res
        rec = {"weight_index": wi, "weights": [float(v) for v in w], "converged": best is not None,
               "n_converged_starts": n_conv}
        if best is None:
            warnings.warn(f"no start converged for weights {w.tolist()}; skipped", RuntimeWarning, stacklevel=2)
        else:
            rec.update(iterations=best.iterations, value=best.fun, coded=[float(v) for v in best.x])
            coded.append(best.x)
        records.append(rec)

    if not coded:
        raise RuntimeError("no weight vector produced a converged solution")
    coded = np.array(coded)
    coded = coded[_dedupe(coded, dedup_tol)]
    raw = problem.raw_coded(coded)
    dedup = SolutionSet(problem.decode(coded), raw, problem.labels, problem.directions,
                        provenance={"method": "weighted-sum", "seed": seed})
    front = dedup.subset(np.flatnonzero(pareto_mask(dedup.canonical))).with_ranking()
    return SweepResult(front, dedup, records)
