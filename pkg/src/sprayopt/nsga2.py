"""Real-coded elitist NSGA-II.

Each generation builds N offspring by crowded binary tournaments, simulated
binary crossover and polynomial mutation, merges them with the parents, and
keeps the best N of the 2N by front rank, breaking the last front by
descending crowding distance.  Search happens in the problem's solver space
(coded units for the HVOF problems).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .glm import ModelOverflowError
from .pareto import Candidate, SolutionSet, crowding_distance, hypervolume_2d, non_dominated_sort

_WORST = np.finfo(float).max


@dataclass(frozen=True)
class NsgaConfig:
    population: int = 100
    generations: int = 200
    crossover_prob: float = 0.9
    eta_c: float = 15.0
    mutation_prob: float | None = None  # None -> 1 / number of variables
    eta_m: float = 20.0
    seed: int = 0

    def __post_init__(self):
        if self.population < 4 or self.population % 2:
            raise ValueError("population must be even and at least 4")
        if self.generations < 0:
            raise ValueError("generations must be >= 0")
        if not 0 <= self.crossover_prob <= 1:
            raise ValueError("crossover_prob must lie in [0, 1]")
        if self.mutation_prob is not None and not 0 <= self.mutation_prob <= 1:
            raise ValueError("mutation_prob must lie in [0, 1]")
        if not (self.eta_c > 0 and self.eta_m > 0):
            raise ValueError("distribution indices must be positive")


def _rng(seed_or_rng) -> np.random.Generator:
    if isinstance(seed_or_rng, np.random.Generator):
        return seed_or_rng
    return np.random.default_rng(seed_or_rng)


def initialize(lower, upper, n: int, seed=None) -> np.ndarray:
    """``n`` points drawn uniformly from the box."""
    if n < 4 or n % 2:
        raise ValueError("population must be even and at least 4")
    lo = np.asarray(lower, dtype=float)
    hi = np.asarray(upper, dtype=float)
    return lo + _rng(seed).random((n, lo.size)) * (hi - lo)


def _beats(rank_a, crowd_a, rank_b, crowd_b):
    """+1 if a wins, -1 if b wins, 0 on a full tie."""
    if rank_a != rank_b:
        return 1 if rank_a < rank_b else -1
    if crowd_a != crowd_b:
        return 1 if crowd_a > crowd_b else -1
    return 0


def crowded_tournament(a: Candidate, b: Candidate, rng=None) -> Candidate:
    """Lower rank wins, then larger crowding, then a fair coin."""
    for c in (a, b):
        if c.rank is None or c.crowding is None:
            raise ValueError("tournament needs rank and crowding on both candidates")
    outcome = _beats(a.rank, a.crowding, b.rank, b.crowding)
    if outcome == 0:
        return a if _rng(rng).random() < 0.5 else b
    return a if outcome > 0 else b


def _tournament_select(rank, crowd, n: int, rng) -> np.ndarray:
    pool = len(rank)
    a = rng.integers(pool, size=n)
    b = rng.integers(pool, size=n)
    coin = rng.random(n) < 0.5
    a_wins = (rank[a] < rank[b]) | ((rank[a] == rank[b]) & (crowd[a] > crowd[b]))
    tie = (rank[a] == rank[b]) & (crowd[a] == crowd[b])
    a_wins = np.where(tie, coin, a_wins)
    return np.where(a_wins, a, b)


def sbx_crossover(p1, p2, eta_c: float, p_c: float, lower, upper, rng=None):
    """Simulated binary crossover of parent rows; returns two children arrays.

    Children are symmetric about the parents' midpoint before clamping to the box.
    Works on single vectors or on stacked pairs.
    """
    rng = _rng(rng)
    p1 = np.asarray(p1, dtype=float)
    p2 = np.asarray(p2, dtype=float)
    u = rng.random(p1.shape)
    beta = np.where(
        u <= 0.5,
        (2 * u) ** (1 / (eta_c + 1)),
        (1 / (2 * (1 - u))) ** (1 / (eta_c + 1)),
    )
    c1 = 0.5 * ((1 + beta) * p1 + (1 - beta) * p2)
    c2 = 0.5 * ((1 - beta) * p1 + (1 + beta) * p2)
    cross = rng.random(p1.shape[:-1] + (1,)) < p_c
    c1 = np.where(cross, c1, p1)
    c2 = np.where(cross, c2, p2)
    return np.clip(c1, lower, upper), np.clip(c2, lower, upper)


def polynomial_mutation(x, eta_m: float, p_m: float, lower, upper, rng=None) -> np.ndarray:
    """Bounded polynomial mutation; each coordinate mutates with probability ``p_m``."""
    rng = _rng(rng)
    x = np.asarray(x, dtype=float)
    lo = np.broadcast_to(np.asarray(lower, dtype=float), x.shape)
    hi = np.broadcast_to(np.asarray(upper, dtype=float), x.shape)
    span = hi - lo
    mutate = rng.random(x.shape) < p_m
    u = rng.random(x.shape)
    d1 = (x - lo) / span
    d2 = (hi - x) / span
    mpow = 1 / (eta_m + 1)
    low_side = u < 0.5
    val_lo = 2 * u + (1 - 2 * u) * (1 - d1) ** (eta_m + 1)
    val_hi = 2 * (1 - u) + 2 * (u - 0.5) * (1 - d2) ** (eta_m + 1)
    delta = np.where(low_side, val_lo ** mpow - 1, 1 - val_hi ** mpow)
    out = np.where(mutate, x + delta * span, x)
    return np.clip(out, lo, hi)


def rank_and_crowd(F) -> tuple[list[np.ndarray], np.ndarray, np.ndarray]:
    fronts, ranks = non_dominated_sort(F)
    crowd = np.empty(len(ranks))
    for front in fronts:
        crowd[front] = crowding_distance(F[front])
    return fronts, ranks, crowd


def environmental_selection(F, n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Pick ``n`` survivors from the merged population.

    Whole fronts are admitted while they fit; the splitting front is ordered by
    descending crowding distance (stable) and truncated.  Returns survivor
    indices with their rank and crowding.
    """
    F = np.asarray(F, dtype=float)
    if n > len(F):
        raise ValueError("cannot select more members than available")
    fronts, ranks, crowd = rank_and_crowd(F)
    chosen = []
    for front in fronts:
        room = n - sum(len(c) for c in chosen)
        if room <= 0:
            break
        if len(front) <= room:
            chosen.append(front)
        else:
            order = np.argsort(-crowd[front], kind="stable")
            chosen.append(front[order[:room]])
    idx = np.concatenate(chosen)
    return idx, ranks[idx], crowd[idx]


def evaluate_population(problem, X) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Canonical objectives, raw objectives and a failure mask for each row.

    Rows whose evaluation fails get the worst representable objectives.
    """
    signs = problem.signs
    try:
        raw = np.atleast_2d(problem.raw_coded(X))
        failed = ~np.all(np.isfinite(raw), axis=1)
    except (ModelOverflowError, FloatingPointError, ValueError):
        raw = np.empty((len(X), len(signs)))
        failed = np.zeros(len(X), dtype=bool)
        for i, x in enumerate(X):
            try:
                raw[i] = problem.raw_coded(x)
                failed[i] = not np.all(np.isfinite(raw[i]))
            except (ModelOverflowError, FloatingPointError, ValueError):
                failed[i] = True
    F = raw * signs
    F[failed] = _WORST
    raw = raw.copy()
    raw[failed] = _WORST * signs
    return F, raw, failed


def _hv_reference(F: np.ndarray) -> np.ndarray:
    worst, best = F.max(axis=0), F.min(axis=0)
    span = np.where(worst > best, worst - best, 1.0)
    return worst + 0.1 * span


def _front_hv(F: np.ndarray, ref: np.ndarray) -> float:
    pts = F[np.all(F <= ref, axis=1)]
    return hypervolume_2d(pts, ref) if len(pts) else 0.0


def run(problem, config: NsgaConfig | None = None,
        progress: Callable[[dict], None] | None = None) -> SolutionSet:
    """Run the generation loop and return the final first front in physical units.

    ``progress`` receives one record per generation (generation index, size of
    the first front and, for two objectives, its hypervolume against a reference
    point fixed from the initial population).  The same records are kept in
    ``provenance["history"]``.
    """
    config = config or problem.nsga2
    rng = np.random.default_rng(config.seed)
    lo, hi = problem.lower, problem.upper
    n = config.population
    p_m = config.mutation_prob if config.mutation_prob is not None else 1.0 / lo.size

    X = initialize(lo, hi, n, rng)
    F, raw, failed = evaluate_population(problem, X)
    _, rank, crowd = rank_and_crowd(F)
    ref = _hv_reference(F[~failed] if (~failed).any() else F) if F.shape[1] == 2 else None

    history = []

    def record(gen):
        rec = {"generation": gen, "front_size": int(np.sum(rank == 1))}
        if ref is not None:
            rec["hypervolume"] = _front_hv(F[rank == 1], ref)
        history.append(rec)
        if progress is not None:
            progress(rec)

    record(0)
    for gen in range(1, config.generations + 1):
        parents = _tournament_select(rank, crowd, n, rng)
        p1, p2 = X[parents[0::2]], X[parents[1::2]]
        c1, c2 = sbx_crossover(p1, p2, config.eta_c, config.crossover_prob, lo, hi, rng)
        Q = np.empty_like(X)
        Q[0::2], Q[1::2] = c1, c2
        Q = polynomial_mutation(Q, config.eta_m, p_m, lo, hi, rng)
        FQ, rawQ, failedQ = evaluate_population(problem, Q)

        XR = np.vstack([X, Q])
        FR = np.vstack([F, FQ])
        idx, rank, crowd = environmental_selection(FR, n)
        X, F = XR[idx], FR[idx]
        raw = np.vstack([raw, rawQ])[idx]
        failed = np.concatenate([failed, failedQ])[idx]
        record(gen)

    first = np.flatnonzero(rank == 1)
    out = SolutionSet(
        problem.decode(X[first]), raw[first], problem.labels, problem.directions,
        rank=rank[first], crowding=crowding_distance(F[first]), feasible=~failed[first],
        provenance={"method": "nsga2", "seed": config.seed, "history": history,
                    "hv_reference": None if ref is None else ref.tolist()},
    )
    return out
