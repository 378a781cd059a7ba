"""One-sided desirability transforms and direct-search maximization of overall desirability."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import minimize
from scipy.stats import qmc

from .pareto import DIRECTIONS, MAXIMIZE, MINIMIZE


def _check_bounds(lower, upper, shape):
    if not np.all(np.asarray(lower) < np.asarray(upper)):
        raise ValueError("desirability bounds need L < U")
    if not np.all(np.asarray(shape) > 0):
        raise ValueError("shape exponent r must be positive")


def desirability_min(f, lower, upper, shape=1.0):
    """1 at or below ``lower``, 0 at or above ``upper``, ``((U-f)/(U-L))**r`` between."""
    _check_bounds(lower, upper, shape)
    t = np.clip((upper - np.asarray(f, dtype=float)) / (upper - lower), 0.0, 1.0)
    out = t ** shape
    return float(out) if np.ndim(out) == 0 else out


def desirability_max(f, lower, upper, shape=1.0):
    """0 at or below ``lower``, 1 at or above ``upper``, ``((f-L)/(U-L))**r`` between."""
    _check_bounds(lower, upper, shape)
    t = np.clip((np.asarray(f, dtype=float) - lower) / (upper - lower), 0.0, 1.0)
    out = t ** shape
    return float(out) if np.ndim(out) == 0 else out


def overall_desirability(d, weights=None) -> np.ndarray | float:
    """Weighted geometric mean ``(prod d_j**w_j) ** (1/sum w)`` along the last axis."""
    d = np.asarray(d, dtype=float)
    w = np.ones(d.shape[-1]) if weights is None else np.asarray(weights, dtype=float)
    if np.any(w < 0) or not w.sum() > 0:
        raise ValueError("weights must be nonnegative with a positive sum")
    w = w / w.sum()
    with np.errstate(divide="ignore"):
        out = np.prod(d ** w, axis=-1)
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class DesirabilityTarget:
    direction: str
    lower: float
    upper: float
    shape: float = 1.0
    weight: float = 1.0

    def __post_init__(self):
        if self.direction not in DIRECTIONS:
            raise ValueError(f"direction must be one of {DIRECTIONS}")
        if not self.lower < self.upper:
            raise ValueError("need L < U")
        if not self.shape > 0:
            raise ValueError("shape exponent must be positive")
        if self.weight < 0:
            raise ValueError("weight must be nonnegative")

    def __call__(self, f):
        fn = desirability_max if self.direction == MAXIMIZE else desirability_min
        return fn(f, self.lower, self.upper, self.shape)

    def progress(self, f):
        """Linear position inside ``[L, U]``, capped at 1 but not floored at 0."""
        f = np.asarray(f, dtype=float)
        t = (f - self.lower) if self.direction == MAXIMIZE else (self.upper - f)
        return np.minimum(t / (self.upper - self.lower), 1.0)

    def to_dict(self) -> dict:
        return {"direction": self.direction, "L": self.lower, "U": self.upper, "r": self.shape, "weight": self.weight}

    @classmethod
    def from_dict(cls, data) -> "DesirabilityTarget":
        return cls(data["direction"], data["L"], data["U"], data.get("r", 1.0), data.get("weight", 1.0))


@dataclass(frozen=True)
class DesirabilitySpec:
    targets: tuple[DesirabilityTarget, ...]

    def __post_init__(self):
        targets = tuple(self.targets)
        if not targets:
            raise ValueError("need at least one desirability target")
        if not sum(t.weight for t in targets) > 0:
            raise ValueError("at least one weight must be positive")
        object.__setattr__(self, "targets", targets)

    @property
    def weights(self) -> np.ndarray:
        return np.array([t.weight for t in self.targets])

    def individual(self, raw) -> np.ndarray:
        raw = np.asarray(raw, dtype=float)
        return np.stack([t(raw[..., j]) for j, t in enumerate(self.targets)], axis=-1)

    def overall(self, raw):
        return overall_desirability(self.individual(raw), self.weights)

    def to_list(self) -> list[dict]:
        return [t.to_dict() for t in self.targets]

    @classmethod
    def from_list(cls, items: Sequence[dict]) -> "DesirabilitySpec":
        return cls(tuple(DesirabilityTarget.from_dict(d) for d in items))


@dataclass(frozen=True)
class DirectSearchConfig:
    restarts: int = 50
    xatol: float = 1e-8
    fatol: float = 1e-8
    max_evaluations: int = 5000
    initial_step: float = 0.25  # simplex edge as a fraction of the box width

    def __post_init__(self):
        if self.restarts < 1 or self.max_evaluations < 1:
            raise ValueError("restarts and max_evaluations must be >= 1")
        if not (self.xatol > 0 and self.fatol > 0 and self.initial_step > 0):
            raise ValueError("tolerances and initial_step must be positive")


@dataclass
class DesirabilityResult:
    decision: np.ndarray  # physical units
    coded: np.ndarray
    overall: float
    individual: np.ndarray
    raw: np.ndarray
    labels: tuple[str, ...]
    zero_everywhere: bool
    restart_index: int
    evaluations: int

    def to_dict(self) -> dict:
        from .glm import PARAM_NAMES

        return {
            "method": "desirability",
            "decision": dict(zip(PARAM_NAMES, map(float, self.decision))),
            "coded": [float(v) for v in self.coded],
            "D": float(self.overall),
            "d": dict(zip(self.labels, map(float, self.individual))),
            "predictions": dict(zip(self.labels, map(float, self.raw))),
            "zero_desirability_everywhere": bool(self.zero_everywhere),
            "restart_index": int(self.restart_index),
            "evaluations": int(self.evaluations),
        }


_BLOCK = 50


def restart_points(lower, upper, n: int, seed: int) -> np.ndarray:
    """Nested Latin-hypercube restarts: fixed-size blocks, so a prefix of a larger
    budget equals the smaller budget."""
    lo = np.asarray(lower, dtype=float)
    hi = np.asarray(upper, dtype=float)
    blocks = []
    for b in range(-(-n // _BLOCK)):
        rng = np.random.default_rng([seed, b])
        blocks.append(qmc.LatinHypercube(lo.size, seed=rng).random(_BLOCK))
    return qmc.scale(np.vstack(blocks)[:n], lo, hi)


def _initial_simplex(x0, lo, hi, step):
    n = x0.size
    simplex = np.tile(x0, (n + 1, 1))
    for i in range(n):
        h = step * (hi[i] - lo[i])
        simplex[i + 1, i] = x0[i] + h if x0[i] + h <= hi[i] else x0[i] - h
    return simplex


def maximize_desirability(problem, spec: DesirabilitySpec | None = None,
                          config: DirectSearchConfig | None = None, seed: int = 0) -> DesirabilityResult:
    """Nelder-Mead with box clamping from Latin-hypercube restarts.

    Where D = 0 the search follows the weighted sum of each objective's linear
    progress toward its bounds, so restarts can leave the zero plateau.  The
    surrogate only steers the search; the reported D is always the true one.
    """
    spec = spec or problem.desirability
    config = config or problem.direct_search
    if len(spec.targets) != problem.n_obj:
        raise ValueError("desirability spec does not match the problem's objectives")
    lo, hi = problem.lower, problem.upper
    w = spec.weights / spec.weights.sum()

    def score(z):
        raw = problem.raw_coded(np.clip(z, lo, hi))
        D = spec.overall(raw)
        if D > 0:
            return -D
        progress = np.array([t.progress(raw[j]) for j, t in enumerate(spec.targets)])
        return 1.0 - float(w @ progress) / (1.0 + abs(float(w @ progress)))

    best = None
    total_evals = 0
    for ri, x0 in enumerate(restart_points(lo, hi, config.restarts, seed)):
        res = minimize(
            score, x0, method="Nelder-Mead", bounds=list(zip(lo, hi)),
            options={"xatol": config.xatol, "fatol": config.fatol, "maxfev": config.max_evaluations,
                     "initial_simplex": _initial_simplex(x0, lo, hi, config.initial_step)},
        )
        total_evals += res.nfev
        z = np.clip(res.x, lo, hi)
        raw = problem.raw_coded(z)
        D = float(spec.overall(raw))
        key = (D, -float(score(z)))
        if best is None or key > best[0]:
            best = (key, ri, z, raw)

    (D, _), ri, z, raw = best
    return DesirabilityResult(
        decision=problem.decode(z), coded=z, overall=D, individual=spec.individual(raw),
        raw=raw, labels=problem.labels, zero_everywhere=D == 0.0, restart_index=ri,
        evaluations=total_evals,
    )
