"""Gamma log-linear coating-property models over coded HVOF process parameters.

Every model predicts a strictly positive property as ``exp(h(z))`` where ``h``
is a quadratic polynomial (intercept, linear, pure quadratic and two-factor
interaction terms) of the coded parameter vector ``z``.  Physical parameters are
coded as ``z = (x - center) / half_range`` so the WC-10Co-4Cr bounds map to
``[-1, 1]``.

Parameter order everywhere is ``(pfr, sod, lambda, cv, tgf)``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np
from scipy.stats import qmc

PARAM_NAMES: tuple[str, ...] = ("pfr", "sod", "lambda", "cv", "tgf")
PARAM_UNITS: tuple[str, ...] = ("g/min", "mm", "-", "m/min", "nl/m")
N_PARAMS = len(PARAM_NAMES)

PFR, SOD, LAMBDA, CV, TGF = range(N_PARAMS)

# exp() overflows past ~709; anything beyond this is a broken input, not a prediction
MAX_LINEAR_PREDICTOR = 700.0


class ModelOverflowError(FloatingPointError):
    """Raised when a linear predictor leaves the representable range."""


class ParameterVector(NamedTuple):
    """Five HVOF process inputs in physical units.

    Being a tuple, it can be passed anywhere a 5-vector is accepted.
    """

    pfr: float
    sod: float
    lam: float
    cv: float
    tgf: float

    @classmethod
    def from_array(cls, x) -> "ParameterVector":
        x = _as_vector(x)
        return cls(*(float(v) for v in x))


def _as_vector(x, name: str = "x") -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.shape[-1:] != (N_PARAMS,):
        raise ValueError(f"{name} must have trailing dimension {N_PARAMS}, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


@dataclass(frozen=True)
class ParameterSpace:
    """Box of admissible process parameters plus the coding used by the models.

    ``center`` and ``half_range`` default to the midpoint and half-width of the
    box; pass them explicitly to use a different coding.
    """

    lower: np.ndarray
    upper: np.ndarray
    center: np.ndarray = None  # type: ignore[assignment]
    half_range: np.ndarray = None  # type: ignore[assignment]

    def __post_init__(self):
        lower = _as_vector(self.lower, "lower").copy()
        upper = _as_vector(self.upper, "upper").copy()
        if np.any(lower >= upper):
            raise ValueError("every lower bound must be strictly below its upper bound")
        center = (lower + upper) / 2 if self.center is None else _as_vector(self.center, "center").copy()
        half = (upper - lower) / 2 if self.half_range is None else _as_vector(self.half_range, "half_range").copy()
        if np.any(half <= 0):
            raise ValueError("half_range must be positive")
        for name, arr in (("lower", lower), ("upper", upper), ("center", center), ("half_range", half)):
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def coded_lower(self) -> np.ndarray:
        return (self.lower - self.center) / self.half_range

    @property
    def coded_upper(self) -> np.ndarray:
        return (self.upper - self.center) / self.half_range

    def contains(self, x, atol: float = 1e-9) -> bool:
        x = _as_vector(x)
        return bool(np.all(x >= self.lower - atol) & np.all(x <= self.upper + atol))

    def to_dict(self) -> dict:
        return {
            name: {
                "lower": float(self.lower[i]),
                "upper": float(self.upper[i]),
                "center": float(self.center[i]),
                "half_range": float(self.half_range[i]),
            }
            for i, name in enumerate(PARAM_NAMES)
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Mapping[str, float]]) -> "ParameterSpace":
        missing = set(PARAM_NAMES) - set(data)
        if missing:
            raise ValueError(f"bounds missing parameters: {sorted(missing)}")
        rows = [data[name] for name in PARAM_NAMES]
        kwargs = {
            "lower": [r["lower"] for r in rows],
            "upper": [r["upper"] for r in rows],
        }
        if all("center" in r for r in rows):
            kwargs["center"] = [r["center"] for r in rows]
        if all("half_range" in r for r in rows):
            kwargs["half_range"] = [r["half_range"] for r in rows]
        return cls(**kwargs)

    def __eq__(self, other):
        if not isinstance(other, ParameterSpace):
            return NotImplemented
        return all(
            np.array_equal(getattr(self, f), getattr(other, f))
            for f in ("lower", "upper", "center", "half_range")
        )

    __hash__ = None  # type: ignore[assignment]


# WC-10Co-4Cr material boundaries
WC_CO_CR_SPACE = ParameterSpace(
    lower=[45.0, 200.0, 0.84, 75.0, 615.0],
    upper=[75.0, 260.0, 1.04, 125.0, 751.0],
)

# general equipment boundaries; coding still follows the material box
GENERAL_SPACE = ParameterSpace(
    lower=[20.0, 170.0, 0.50, 50.0, 530.0],
    upper=[150.0, 320.0, 1.20, 150.0, 830.0],
    center=WC_CO_CR_SPACE.center,
    half_range=WC_CO_CR_SPACE.half_range,
)


def normalize(x, space: ParameterSpace = WC_CO_CR_SPACE) -> np.ndarray:
    """Map physical parameters to coded units. Accepts ``(..., 5)`` arrays."""
    return (_as_vector(x) - space.center) / space.half_range


def denormalize(coded, space: ParameterSpace = WC_CO_CR_SPACE) -> np.ndarray:
    """Inverse of :func:`normalize`."""
    return _as_vector(coded, "coded") * space.half_range + space.center


_KINDS = ("intercept", "linear", "quadratic", "interaction")
_N_INDICES = {"intercept": 0, "linear": 1, "quadratic": 1, "interaction": 2}


@dataclass(frozen=True)
class ModelTerm:
    kind: str
    indices: tuple[int, ...]
    coefficient: float

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown term kind {self.kind!r}")
        idx = tuple(int(i) for i in self.indices)
        if len(idx) != _N_INDICES[self.kind]:
            raise ValueError(f"{self.kind} term needs {_N_INDICES[self.kind]} indices, got {idx}")
        if any(not 0 <= i < N_PARAMS for i in idx):
            raise ValueError(f"parameter index out of range in {idx}")
        if self.kind == "interaction":
            if idx[0] == idx[1]:
                raise ValueError("interaction indices must be distinct; use a quadratic term")
            idx = tuple(sorted(idx))
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "coefficient", float(self.coefficient))

    @property
    def key(self) -> tuple[str, tuple[int, ...]]:
        return self.kind, self.indices

    def label(self) -> str:
        names = [PARAM_NAMES[i] for i in self.indices]
        if self.kind == "intercept":
            return "1"
        if self.kind == "linear":
            return names[0]
        if self.kind == "quadratic":
            return f"{names[0]}^2"
        return f"{names[0]}*{names[1]}"

    def to_dict(self) -> dict:
        return {"kind": self.kind, "indices": list(self.indices), "coefficient": self.coefficient}

    @classmethod
    def from_dict(cls, data: Mapping) -> "ModelTerm":
        return cls(data["kind"], tuple(data.get("indices", ())), data["coefficient"])


@dataclass(frozen=True)
class GammaLogLinearModel:
    """Conditional mean of a gamma GLM with log link.

    The polynomial is stored as ``h(z) = c + b.z + z'Qz`` with ``Q`` symmetric,
    so ``grad h = b + 2Qz`` and ``hess h = 2Q``.
    """

    name: str
    terms: tuple[ModelTerm, ...]
    unit: str = ""
    _intercept: float = field(init=False, repr=False, compare=False)
    _linear: np.ndarray = field(init=False, repr=False, compare=False)
    _quad: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        terms = tuple(self.terms)
        keys = [t.key for t in terms]
        if len(set(keys)) != len(keys):
            raise ValueError(f"duplicate terms in model {self.name!r}")
        c = 0.0
        b = np.zeros(N_PARAMS)
        Q = np.zeros((N_PARAMS, N_PARAMS))
        for t in terms:
            if t.kind == "intercept":
                c = t.coefficient
            elif t.kind == "linear":
                b[t.indices[0]] = t.coefficient
            elif t.kind == "quadratic":
                i = t.indices[0]
                Q[i, i] = t.coefficient
            else:
                i, j = t.indices
                Q[i, j] = Q[j, i] = t.coefficient / 2
        b.flags.writeable = False
        Q.flags.writeable = False
        object.__setattr__(self, "terms", terms)
        object.__setattr__(self, "_intercept", c)
        object.__setattr__(self, "_linear", b)
        object.__setattr__(self, "_quad", Q)

    @property
    def curvature(self) -> np.ndarray:
        """Hessian of the linear predictor: 2*beta_jj on the diagonal, beta_jm off it."""
        return 2 * self._quad

    def linear_predictor(self, coded) -> np.ndarray:
        z = _as_vector(coded, "coded")
        return self._intercept + z @ self._linear + np.einsum("...i,ij,...j->...", z, self._quad, z)

    def _checked_exp(self, h):
        h = np.asarray(h)
        if np.any(np.abs(h) > MAX_LINEAR_PREDICTOR):
            worst = float(np.max(np.abs(h)))
            raise ModelOverflowError(
                f"{self.name}: linear predictor magnitude {worst:.4g} exceeds {MAX_LINEAR_PREDICTOR}"
            )
        return np.exp(h)

    def predict(self, coded) -> np.ndarray | float:
        """Predicted property in model units; vectorized over leading axes."""
        out = self._checked_exp(self.linear_predictor(coded))
        return float(out) if out.ndim == 0 else out

    def gradient(self, coded) -> np.ndarray:
        z = _as_vector(coded, "coded")
        mu = self._checked_exp(self.linear_predictor(z))
        grad_h = self._linear + 2 * z @ self._quad
        return mu[..., None] * grad_h

    def hessian(self, coded) -> np.ndarray:
        """``exp(h) * (grad_h grad_h^T + B)``; exactly symmetric."""
        z = _as_vector(coded, "coded")
        mu = self._checked_exp(self.linear_predictor(z))
        grad_h = self._linear + 2 * z @ self._quad
        outer = grad_h[..., :, None] * grad_h[..., None, :]
        return mu[..., None, None] * (outer + self.curvature)

    def formula(self) -> str:
        parts = [f"{t.coefficient:+.4f}*{t.label()}" if t.kind != "intercept" else f"{t.coefficient:.4f}" for t in self.terms]
        return f"{self.name} = exp({' '.join(parts)})"

    def to_dict(self) -> dict:
        return {"name": self.name, "unit": self.unit, "terms": [t.to_dict() for t in self.terms]}

    @classmethod
    def from_dict(cls, data: Mapping) -> "GammaLogLinearModel":
        return cls(data["name"], tuple(ModelTerm.from_dict(t) for t in data["terms"]), data.get("unit", ""))


# Published coefficient table, beta_0 .. beta_12 per property.
_COEFFICIENT_TABLE = """\
velocity     6.1297 -0.0056  0.0494 -0.0182  0.0483 -0.0304 -0.0219 -0.0087  0.0068  0.0142
temperature  7.4491 -0.0072 -0.0195  0.0254  0.0513 -0.0056 -0.0123 -0.0042  0.0040  0.0034
rate         3.6337  0.2668 -0.0207  0.0636  0.1259 -0.0303 -0.0259 -0.0540 -0.0524  0.0184
efficiency  -0.4546  0.0051 -0.0207  0.0636  0.1259 -0.0273 -0.0553 -0.0538  0.0184
thickness    4.8928  0.2275  0.0664 -0.2658  0.0376 -0.0338  0.0428 -0.0492 -0.0254 -0.0331
roughness    3.5241  0.0229 -0.0065 -0.0342 -0.0419 -0.0979  0.0325  0.0164 -0.0219 -0.0242 -0.0665
hardness     6.3520 -0.0372 -0.0345  0.0025 -0.0192  0.1189 -0.0216  0.0248
porosity     2.7056  0.0046  0.0146 -0.0293  0.0074 -0.0462  0.0363  0.0134  0.0242  0.0294 -0.0150 -0.0366 -0.0233
"""

# Which term each beta_i multiplies.  () = intercept, (i,) = linear, (i, i) = quadratic,
# (i, j) = interaction, None = coefficient present in the table but absent from the formula.
_LAYOUTS: dict[str, tuple] = {
    "velocity": ((), (PFR,), (SOD,), (LAMBDA,), (TGF,), (SOD, SOD), (TGF, TGF), (PFR, SOD), (PFR, LAMBDA), (SOD, TGF)),
    "temperature": ((), (PFR,), (SOD,), (LAMBDA,), (TGF,), (LAMBDA, LAMBDA), (TGF, TGF), (PFR, TGF), (SOD, LAMBDA), (SOD, TGF)),
    "rate": ((), (PFR,), (SOD,), (LAMBDA,), (TGF,), (PFR, PFR), (LAMBDA, LAMBDA), (CV, CV), (TGF, TGF), (PFR, TGF)),
    "efficiency": ((), (PFR,), (SOD,), (LAMBDA,), (TGF,), (LAMBDA, LAMBDA), (CV, CV), (TGF, TGF), (PFR, TGF)),
    "thickness": ((), (PFR,), (LAMBDA,), (CV,), (TGF,), (LAMBDA, LAMBDA), (CV, CV), (TGF, TGF), (PFR, LAMBDA), (CV, TGF)),
    # beta_9 = -0.0242 has no term in the printed roughness formula
    "roughness": ((), (PFR,), (SOD,), (LAMBDA,), (CV,), (TGF,), (CV, CV), (TGF, TGF), (SOD, TGF), None, (LAMBDA, TGF)),
    "hardness": ((), (PFR,), (SOD,), (LAMBDA,), (CV,), (TGF,), (LAMBDA, CV), (LAMBDA, TGF)),
    "porosity": ((), (PFR,), (SOD,), (LAMBDA,), (CV,), (TGF,), (CV, CV), (TGF, TGF),
                 (PFR, LAMBDA), (PFR, CV), (PFR, TGF), (LAMBDA, CV), (LAMBDA, TGF)),
}

# velocity, rate and thickness units are not printed with the models
MODEL_UNITS: dict[str, str] = {
    "velocity": "m/s",
    "temperature": "degC",
    "rate": "um/pass",
    "efficiency": "fraction",
    "thickness": "um",
    "roughness": "um",
    "hardness": "HV5",
    "porosity": "%",
}

MODEL_NAMES: tuple[str, ...] = tuple(MODEL_UNITS)


def _term_from_layout(slot, coefficient: float) -> ModelTerm:
    if len(slot) == 0:
        return ModelTerm("intercept", (), coefficient)
    if len(slot) == 1:
        return ModelTerm("linear", slot, coefficient)
    if slot[0] == slot[1]:
        return ModelTerm("quadratic", slot[:1], coefficient)
    return ModelTerm("interaction", slot, coefficient)


def parse_coefficient_table(text: str = _COEFFICIENT_TABLE) -> dict[str, list[float]]:
    table = {}
    for line in text.splitlines():
        if not line.strip():
            continue
        name, *values = line.split()
        table[name] = [float(v) for v in values]
    return table


def _build_registry() -> dict[str, GammaLogLinearModel]:
    table = parse_coefficient_table()
    models = {}
    for name in MODEL_NAMES:
        layout, coefs = _LAYOUTS[name], table[name]
        if len(layout) != len(coefs):
            raise RuntimeError(f"layout/coefficient mismatch for {name}")
        terms = tuple(_term_from_layout(slot, c) for slot, c in zip(layout, coefs) if slot is not None)
        models[name] = GammaLogLinearModel(name, terms, MODEL_UNITS[name])
    return models


class ModelRegistry(Mapping[str, GammaLogLinearModel]):
    """Read-only name -> model mapping with JSON import/export."""

    def __init__(self, models: Iterable[GammaLogLinearModel]):
        self._models = {m.name: m for m in models}

    def __getitem__(self, name: str) -> GammaLogLinearModel:
        try:
            return self._models[name]
        except KeyError:
            raise KeyError(f"unknown model {name!r}; available: {', '.join(self._models)}") from None

    def __iter__(self):
        return iter(self._models)

    def __len__(self):
        return len(self._models)

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps({"models": [m.to_dict() for m in self._models.values()]}, indent=indent)

    @classmethod
    def from_json(cls, text: str) -> "ModelRegistry":
        data = json.loads(text)
        return cls(GammaLogLinearModel.from_dict(m) for m in data["models"])


DEFAULT_REGISTRY = ModelRegistry(_build_registry().values())


def get_model(name: str) -> GammaLogLinearModel:
    return DEFAULT_REGISTRY[name]


@dataclass(frozen=True)
class ConvexityReport:
    model: str
    classification: str  # "positive-definite", "positive-semidefinite" or "indefinite"
    min_eigenvalue: float
    witness: np.ndarray | None  # coded point with a negative eigenvalue
    n_samples: int

    @property
    def positive_definite(self) -> bool:
        return self.classification == "positive-definite"


def convexity_report(
    model: GammaLogLinearModel,
    space: ParameterSpace = WC_CO_CR_SPACE,
    n_samples: int = 1024,
    seed: int = 0,
) -> ConvexityReport:
    """Sample the coded box and classify the definiteness of the model Hessian.

    Samples come from a scrambled Sobol sequence; the box corners are always
    included since curvature extremes of a quadratic exponent sit there.
    """
    lo, hi = space.coded_lower, space.coded_upper
    sobol = qmc.Sobol(N_PARAMS, scramble=True, seed=seed).random(n_samples)
    corners = np.array(np.meshgrid(*zip(lo, hi), indexing="ij")).reshape(N_PARAMS, -1).T
    pts = np.vstack([qmc.scale(sobol, lo, hi), corners, (lo + hi) / 2])
    eig = np.linalg.eigvalsh(model.hessian(pts))
    mins = eig[:, 0]
    # relative tolerance against the largest curvature seen at that point
    scale = np.maximum(np.abs(eig).max(axis=1), np.finfo(float).tiny)
    tol = 1e-12 * scale
    worst = int(np.argmin(mins / scale))
    min_eig = float(mins[worst])
    if np.all(mins > tol):
        cls, witness = "positive-definite", None
    elif mins[worst] < -tol[worst]:
        cls, witness = "indefinite", pts[worst].copy()
    else:
        cls, witness = "positive-semidefinite", None
    return ConvexityReport(model.name, cls, min_eig, witness, len(pts))


def predict_all(x, names: Sequence[str] = MODEL_NAMES, space: ParameterSpace = WC_CO_CR_SPACE,
                registry: Mapping[str, GammaLogLinearModel] = DEFAULT_REGISTRY) -> dict[str, float]:
    """Predict several properties at a physical parameter setting."""
    z = normalize(x, space)
    return {name: registry[name].predict(z) for name in names}
