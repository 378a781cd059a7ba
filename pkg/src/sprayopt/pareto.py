"""Dominance, non-dominated sorting, crowding and Pareto filtering.

All routines work on objective values in *canonical minimization form*:
maximized objectives have already been negated.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .glm import N_PARAMS, PARAM_NAMES

MINIMIZE = "minimize"
MAXIMIZE = "maximize"
DIRECTIONS = (MINIMIZE, MAXIMIZE)


def direction_signs(directions: Sequence[str]) -> np.ndarray:
    """+1 for minimized, -1 for maximized objectives."""
    bad = [d for d in directions if d not in DIRECTIONS]
    if bad:
        raise ValueError(f"unknown directions {bad}; use {DIRECTIONS}")
    return np.array([1.0 if d == MINIMIZE else -1.0 for d in directions])


@dataclass(frozen=True)
class ObjectiveVector:
    """Objective values of one candidate, both canonical and in natural units."""

    values: np.ndarray
    raw_values: np.ndarray
    labels: tuple[str, ...]
    directions: tuple[str, ...]
    feasible: bool = True

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        raw = np.asarray(self.raw_values, dtype=float)
        if values.ndim != 1 or values.size < 1 or raw.shape != values.shape:
            raise ValueError("values and raw_values must be equal-length 1-d arrays")
        if len(self.labels) != values.size or len(self.directions) != values.size:
            raise ValueError("labels/directions must match the number of objectives")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "raw_values", raw)
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "directions", tuple(self.directions))

    @classmethod
    def from_raw(cls, raw, labels, directions, feasible: bool = True) -> "ObjectiveVector":
        raw = np.asarray(raw, dtype=float)
        return cls(raw * direction_signs(directions), raw, labels, directions, feasible)


def _canonical(v) -> np.ndarray:
    return np.asarray(v.values if isinstance(v, ObjectiveVector) else v, dtype=float)


def _pair(a, b) -> tuple[np.ndarray, np.ndarray]:
    a, b = _canonical(a), _canonical(b)
    if a.shape != b.shape:
        raise ValueError(f"objective vectors differ in length: {a.shape} vs {b.shape}")
    return a, b


def weakly_dominates(a, b) -> bool:
    """No worse in every objective and strictly better in at least one."""
    a, b = _pair(a, b)
    return bool(np.all(a <= b) and np.any(a < b))


def strongly_dominates(a, b) -> bool:
    """Strictly better in every objective."""
    a, b = _pair(a, b)
    return bool(np.all(a < b))


def _objective_matrix(F) -> np.ndarray:
    F = np.asarray(F.canonical if isinstance(F, SolutionSet) else F, dtype=float)
    if F.ndim != 2 or F.shape[0] == 0:
        raise ValueError("expected a nonempty (n, k) objective matrix")
    return F


def dominance_matrix(F, block: int = 512) -> np.ndarray:
    """``D[i, j]`` is True iff row i weakly dominates row j."""
    F = _objective_matrix(F)
    n = F.shape[0]
    D = np.empty((n, n), dtype=bool)
    for start in range(0, n, block):
        A = F[start:start + block, None, :]
        D[start:start + block] = np.all(A <= F[None], axis=2) & np.any(A < F[None], axis=2)
    return D


def non_dominated_sort(F) -> tuple[list[np.ndarray], np.ndarray]:
    """Fast non-dominated sort.

    Returns the list of fronts (ascending index arrays) and a 1-based rank per row.
    """
    F = _objective_matrix(F)
    D = dominance_matrix(F)
    counts = D.sum(axis=0)
    ranks = np.zeros(F.shape[0], dtype=int)
    fronts = []
    current = np.flatnonzero(counts == 0)
    rank = 1
    while current.size:
        ranks[current] = rank
        fronts.append(current)
        counts = counts - D[current].sum(axis=0)
        counts[current] = -1
        current = np.flatnonzero(counts == 0)
        rank += 1
    return fronts, ranks


def crowding_distance(F) -> np.ndarray:
    """Crowding distance of every member of one front.

    Boundary members in any objective get ``inf``; an objective with zero range
    adds nothing to interior members.
    """
    F = _objective_matrix(F)
    n, k = F.shape
    dist = np.zeros(n)
    if n <= 2:
        dist[:] = np.inf
        return dist
    for l in range(k):
        order = np.argsort(F[:, l], kind="stable")
        f = F[order, l]
        dist[order[0]] = dist[order[-1]] = np.inf
        span = f[-1] - f[0]
        if span > 0:
            dist[order[1:-1]] += (f[2:] - f[:-2]) / span
    return dist


def ideal_vector(F) -> np.ndarray:
    """Componentwise minimum of the canonical objectives over the set."""
    return _objective_matrix(F).min(axis=0)


def pareto_mask(F) -> np.ndarray:
    F = _objective_matrix(F)
    return ~dominance_matrix(F).any(axis=0)


def hypervolume_2d(F, reference) -> float:
    """Area dominated by a bi-objective front and bounded by ``reference``."""
    F = _objective_matrix(F)
    ref = np.asarray(reference, dtype=float)
    if F.shape[1] != 2 or ref.shape != (2,):
        raise ValueError("hypervolume_2d needs two objectives")
    if np.any(F > ref):
        raise ValueError("every point must dominate the reference point")
    F = F[np.lexsort((F[:, 1], F[:, 0]))]
    area, best_f2 = 0.0, ref[1]
    for f1, f2 in F:
        if f2 < best_f2:
            area += (ref[0] - f1) * (best_f2 - f2)
            best_f2 = f2
    return float(area)


@dataclass(frozen=True)
class Candidate:
    decision: np.ndarray  # physical units
    objectives: ObjectiveVector
    rank: int | None = None
    crowding: float | None = None

    def __post_init__(self):
        if self.rank is not None and self.rank < 1:
            raise ValueError("rank must be >= 1")
        if self.crowding is not None and not self.crowding >= 0:
            raise ValueError("crowding must be >= 0")


@dataclass
class SolutionSet:
    """Array-backed collection of candidates sharing labels and directions."""

    decisions: np.ndarray  # (n, 5) physical units
    raw: np.ndarray  # (n, k) natural units
    labels: tuple[str, ...]
    directions: tuple[str, ...]
    rank: np.ndarray | None = None
    crowding: np.ndarray | None = None
    feasible: np.ndarray | None = None
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        self.decisions = np.asarray(self.decisions, dtype=float).reshape(-1, N_PARAMS)
        self.raw = np.asarray(self.raw, dtype=float).reshape(len(self.decisions), -1)
        self.labels = tuple(self.labels)
        self.directions = tuple(self.directions)
        if self.raw.shape[1] != len(self.labels) or len(self.labels) != len(self.directions):
            raise ValueError("labels/directions must match the objective columns")
        direction_signs(self.directions)
        n = len(self.decisions)
        if self.rank is not None:
            self.rank = np.asarray(self.rank, dtype=int).reshape(n)
        if self.crowding is not None:
            self.crowding = np.asarray(self.crowding, dtype=float).reshape(n)
        if self.feasible is None:
            self.feasible = np.ones(n, dtype=bool)

    def __len__(self):
        return len(self.decisions)

    @property
    def canonical(self) -> np.ndarray:
        return self.raw * direction_signs(self.directions)

    def objective_vector(self, i: int) -> ObjectiveVector:
        return ObjectiveVector(self.canonical[i], self.raw[i], self.labels, self.directions, bool(self.feasible[i]))

    def candidates(self) -> Iterator[Candidate]:
        for i in range(len(self)):
            yield Candidate(
                self.decisions[i].copy(),
                self.objective_vector(i),
                None if self.rank is None else int(self.rank[i]),
                None if self.crowding is None else float(self.crowding[i]),
            )

    def subset(self, idx) -> "SolutionSet":
        idx = np.asarray(idx, dtype=int)
        return SolutionSet(
            self.decisions[idx], self.raw[idx], self.labels, self.directions,
            None if self.rank is None else self.rank[idx],
            None if self.crowding is None else self.crowding[idx],
            self.feasible[idx], dict(self.provenance),
        )

    @classmethod
    def from_candidates(cls, candidates: Sequence[Candidate], provenance: dict | None = None) -> "SolutionSet":
        if not candidates:
            raise ValueError("need at least one candidate")
        labels, directions = candidates[0].objectives.labels, candidates[0].objectives.directions
        for c in candidates:
            if c.objectives.labels != labels or c.objectives.directions != directions:
                raise ValueError("candidates disagree on objective labels or directions")
        ranks = [c.rank for c in candidates]
        crowd = [c.crowding for c in candidates]
        return cls(
            np.array([c.decision for c in candidates]),
            np.array([c.objectives.raw_values for c in candidates]),
            labels, directions,
            None if any(r is None for r in ranks) else np.array(ranks),
            None if any(c is None for c in crowd) else np.array(crowd),
            np.array([c.objectives.feasible for c in candidates]),
            dict(provenance or {}),
        )

    def with_ranking(self) -> "SolutionSet":
        """Copy with rank and within-front crowding assigned."""
        F = self.canonical
        fronts, ranks = non_dominated_sort(F)
        crowd = np.empty(len(self))
        for front in fronts:
            crowd[front] = crowding_distance(F[front])
        out = self.subset(np.arange(len(self)))
        out.rank, out.crowding = ranks, crowd
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow([*PARAM_NAMES, *self.labels, "rank", "crowding"])
        for i in range(len(self)):
            row = [format_number(v) for v in self.decisions[i]] + [format_number(v) for v in self.raw[i]]
            row.append("" if self.rank is None else str(int(self.rank[i])))
            row.append("" if self.crowding is None else format_number(self.crowding[i]))
            writer.writerow(row)
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, directions: Sequence[str]) -> "SolutionSet":
        rows = list(csv.reader(io.StringIO(text)))
        header, body = rows[0], [r for r in rows[1:] if r]
        if tuple(header[:N_PARAMS]) != PARAM_NAMES or header[-2:] != ["rank", "crowding"]:
            raise ValueError(f"not a solution-set CSV header: {header}")
        labels = tuple(header[N_PARAMS:-2])
        data = np.array([[float(v) for v in r[:-2]] for r in body]).reshape(len(body), -1)
        rank = None if any(r[-2] == "" for r in body) else np.array([int(r[-2]) for r in body])
        crowd = None if any(r[-1] == "" for r in body) else np.array([float(r[-1]) for r in body])
        return cls(data[:, :N_PARAMS], data[:, N_PARAMS:], labels, tuple(directions), rank, crowd)


def format_number(v: float) -> str:
    """9 significant digits, ``inf`` for infinities."""
    v = float(v)
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return f"{v:.9g}"


def pareto_filter(solutions):
    """Keep exactly the first non-dominated front, preserving input order.

    Accepts a :class:`SolutionSet` or an ``(n, k)`` canonical objective matrix; for
    a matrix the surviving row indices are returned.
    """
    if isinstance(solutions, SolutionSet):
        return solutions.subset(np.flatnonzero(pareto_mask(solutions.canonical)))
    return np.flatnonzero(pareto_mask(solutions))
