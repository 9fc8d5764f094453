"""Discrete fuzzy-set algebra and the Mamdani inference pipeline.

Everything here is immutable and side-effect free. Fuzzy sets are carried as
sample vectors over a uniform grid of their universe, so composition, clipping,
aggregation and centroid defuzzification are plain array operations.
"""
from __future__ import annotations

import math
import operator
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

__all__ = [
    "Universe",
    "MembershipFunction",
    "FuzzySubset",
    "LinguisticVariable",
    "DiscreteFuzzySet",
    "FuzzyRelation",
    "FuzzyRule",
    "Modifier",
    "EmptyAggregateError",
    "UniverseMismatchError",
    "check_degree",
    "eval_membership",
    "apply_modifier",
    "t_norm",
    "t_conorm",
    "negate",
    "implication",
    "build_relation",
    "generalized_modus_ponens",
    "fuzzify",
    "clip",
    "aggregate",
    "defuzzify_centroid",
    "rule_strengths",
    "conclude",
    "infer_mamdani",
    "T_NORMS",
    "T_CONORMS",
]

DEFAULT_RESOLUTION = 1001


class EmptyAggregateError(ValueError):
    """No rule contributed to the output set, so there is nothing to defuzzify."""


class UniverseMismatchError(ValueError):
    pass


def check_degree(value: float, what: str = "degree") -> float:
    value = float(value)
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{what} must lie in [0, 1], got {value!r}")
    return value


# --------------------------------------------------------------------------
# universes and membership functions
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Universe:
    """A bounded, discretized reference set."""

    name: str
    low: float
    high: float
    resolution: int = DEFAULT_RESOLUTION

    def __post_init__(self):
        if not (math.isfinite(self.low) and math.isfinite(self.high)):
            raise ValueError(f"universe {self.name!r}: bounds must be finite")
        if not self.low < self.high:
            raise ValueError(f"universe {self.name!r}: low must be < high")
        if int(self.resolution) != self.resolution or self.resolution < 2:
            raise ValueError(f"universe {self.name!r}: resolution must be an integer >= 2")

    @property
    def step(self) -> float:
        return (self.high - self.low) / (self.resolution - 1)

    @property
    def grid(self) -> np.ndarray:
        # x_i = low + i * (high - low) / (resolution - 1)
        grid = self.low + np.arange(self.resolution) * (self.high - self.low) / (self.resolution - 1)
        grid[-1] = self.high
        return grid

    def clamp(self, x: float) -> float:
        return min(max(float(x), self.low), self.high)

    def to_dict(self) -> dict:
        return {"name": self.name, "low": self.low, "high": self.high, "resolution": self.resolution}


_SHAPE_ARITY = {"triangular": 3, "trapezoidal": 4, "ramp-up": 2, "ramp-down": 2}


@dataclass(frozen=True)
class MembershipFunction:
    """Piecewise-linear membership function.

    Every shape reduces to a trapezoid ``(a, b, c, d)``: rising on ``[a, b]``,
    flat at 1 on ``[b, c]``, falling on ``[c, d]``. A ramp-up never falls and a
    ramp-down is 1 everywhere left of its first breakpoint.
    """

    shape: str
    params: tuple[float, ...]

    def __post_init__(self):
        if self.shape not in _SHAPE_ARITY:
            raise ValueError(f"unknown membership shape {self.shape!r}; expected one of {sorted(_SHAPE_ARITY)}")
        params = tuple(float(p) for p in self.params)
        object.__setattr__(self, "params", params)
        if len(params) != _SHAPE_ARITY[self.shape]:
            raise ValueError(f"{self.shape} takes {_SHAPE_ARITY[self.shape]} parameters, got {len(params)}")
        if not all(math.isfinite(p) for p in params):
            raise ValueError(f"{self.shape} parameters must be finite")
        if any(p > q for p, q in zip(params, params[1:])):
            raise ValueError(f"{self.shape} parameters must be non-decreasing, got {params}")

    @classmethod
    def triangular(cls, a, b, c):
        return cls("triangular", (a, b, c))

    @classmethod
    def trapezoidal(cls, a, b, c, d):
        return cls("trapezoidal", (a, b, c, d))

    @classmethod
    def ramp_up(cls, a, b):
        return cls("ramp-up", (a, b))

    @classmethod
    def ramp_down(cls, a, b):
        return cls("ramp-down", (a, b))

    @property
    def corners(self) -> tuple[float, float, float, float]:
        p = self.params
        if self.shape == "triangular":
            return p[0], p[1], p[1], p[2]
        if self.shape == "trapezoidal":
            return p
        if self.shape == "ramp-up":
            return p[0], p[1], math.inf, math.inf
        return -math.inf, -math.inf, p[0], p[1]

    def __call__(self, x: float) -> float:
        a, b, c, d = self.corners
        x = float(x)
        if b <= x <= c:
            return 1.0
        if x <= a or x >= d:
            return 0.0
        if x < b:
            return (x - a) / (b - a)
        return (d - x) / (d - c)

    def evaluate(self, xs: np.ndarray) -> np.ndarray:
        """Vectorised evaluation; agrees bit-for-bit with the scalar path."""
        a, b, c, d = self.corners
        xs = np.asarray(xs, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            rising = (xs - a) / (b - a)
            falling = (d - xs) / (d - c)
        out = np.zeros_like(xs)
        out = np.where((xs > a) & (xs < b), rising, out)
        out = np.where((xs > c) & (xs < d), falling, out)
        out = np.where((xs >= b) & (xs <= c), 1.0, out)
        return out

    def to_dict(self) -> dict:
        return {"shape": self.shape, "params": list(self.params)}


def eval_membership(mf: MembershipFunction, x: float) -> float:
    if not math.isfinite(x):
        raise ValueError(f"membership argument must be finite, got {x!r}")
    return mf(x)


@dataclass(frozen=True)
class FuzzySubset:
    label: str
    universe: Universe
    mf: MembershipFunction

    def membership(self, x: float) -> float:
        if not math.isfinite(x):
            raise ValueError(f"crisp input must be finite, got {x!r}")
        return self.mf(self.universe.clamp(x))

    def discretize(self) -> "DiscreteFuzzySet":
        return DiscreteFuzzySet(self.universe, self.mf.evaluate(self.universe.grid))


@dataclass(frozen=True)
class LinguisticVariable:
    """A named variable, its universe, and its labelled terms.

    ``aliases`` maps alternative labels onto canonical term labels so that
    rule text can use either.
    """

    name: str
    universe: Universe
    terms: tuple[FuzzySubset, ...]
    aliases: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        object.__setattr__(self, "aliases", dict(self.aliases))
        if not self.terms:
            raise ValueError(f"variable {self.name!r} needs at least one term")
        labels = [t.label for t in self.terms]
        if len(set(labels)) != len(labels):
            raise ValueError(f"variable {self.name!r} has duplicate term labels")
        for t in self.terms:
            if t.universe != self.universe:
                raise UniverseMismatchError(f"term {t.label!r} is not over universe {self.universe.name!r}")
        for alias, target in self.aliases.items():
            if target not in labels:
                raise ValueError(f"alias {alias!r} of variable {self.name!r} points at unknown term {target!r}")
            if alias in labels:
                raise ValueError(f"alias {alias!r} shadows a term of variable {self.name!r}")

    @property
    def labels(self) -> list[str]:
        return [t.label for t in self.terms]

    def canonical(self, label: str) -> str:
        label = self.aliases.get(label, label)
        if label not in self.labels:
            raise KeyError(f"variable {self.name!r} has no term {label!r}")
        return label

    def term(self, label: str) -> FuzzySubset:
        label = self.canonical(label)
        return next(t for t in self.terms if t.label == label)

    def fuzzify(self, x: float) -> dict[str, float]:
        return {t.label: t.membership(x) for t in self.terms}

    def to_dict(self) -> dict:
        out = {
            "name": self.name,
            "universe": self.universe.to_dict(),
            "terms": [{"label": t.label, **t.mf.to_dict()} for t in self.terms],
        }
        if self.aliases:
            out["aliases"] = dict(self.aliases)
        return out

    @classmethod
    def from_dict(cls, data: Mapping) -> "LinguisticVariable":
        u = data["universe"]
        universe = Universe(u["name"], float(u["low"]), float(u["high"]), int(u.get("resolution", DEFAULT_RESOLUTION)))
        terms = tuple(
            FuzzySubset(t["label"], universe, MembershipFunction(t["shape"], tuple(t["params"])))
            for t in data["terms"]
        )
        return cls(data["name"], universe, terms, data.get("aliases", {}))


def fuzzify(lv: LinguisticVariable, x: float) -> dict[str, float]:
    return lv.fuzzify(x)


# --------------------------------------------------------------------------
# discrete carriers
# --------------------------------------------------------------------------


def _frozen(samples, shape: tuple[int, ...]) -> np.ndarray:
    arr = np.array(samples, dtype=float)
    if arr.shape != shape:
        raise ValueError(f"expected samples of shape {shape}, got {arr.shape}")
    if arr.size and (np.isnan(arr).any() or arr.min() < 0.0 or arr.max() > 1.0):
        raise ValueError("samples must be degrees in [0, 1]")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class DiscreteFuzzySet:
    universe: Universe
    samples: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "samples", _frozen(self.samples, (self.universe.resolution,)))

    @classmethod
    def zeros(cls, universe: Universe) -> "DiscreteFuzzySet":
        return cls(universe, np.zeros(universe.resolution))

    @property
    def height(self) -> float:
        return float(self.samples.max())

    def __eq__(self, other):
        if not isinstance(other, DiscreteFuzzySet):
            return NotImplemented
        return self.universe == other.universe and np.array_equal(self.samples, other.samples)


@dataclass(frozen=True, eq=False)
class FuzzyRelation:
    domain: Universe
    codomain: Universe
    samples: np.ndarray

    def __post_init__(self):
        shape = (self.domain.resolution, self.codomain.resolution)
        object.__setattr__(self, "samples", _frozen(self.samples, shape))


# --------------------------------------------------------------------------
# connectives
# --------------------------------------------------------------------------


class Modifier(Enum):
    NONE = "none"
    WEAKENING = "weakening"
    STRENGTHENING = "strengthening"


def apply_modifier(m: Modifier | str, d: float) -> float:
    """Concentration squares a degree, dilation takes its square root."""
    m = Modifier(m)
    d = check_degree(d)
    if m is Modifier.STRENGTHENING:
        return d * d
    if m is Modifier.WEAKENING:
        return math.sqrt(d)
    return d


def _probabilistic_sum(a, b):
    return a + b - a * b


T_NORMS: dict[str, Callable] = {"min": min, "product": operator.mul}
T_CONORMS: dict[str, Callable] = {"max": max, "probabilistic-sum": _probabilistic_sum}


def t_norm(a: float, b: float, kind: str = "min") -> float:
    return T_NORMS[kind](a, b)


def t_conorm(a: float, b: float, kind: str = "max") -> float:
    return T_CONORMS[kind](a, b)


def negate(a: float) -> float:
    return 1.0 - a


def implication(a, b, method: str = "mamdani"):
    """Fuzzy implication degree; works on scalars and broadcasting arrays."""
    if method == "mamdani":
        return np.minimum(a, b) if isinstance(a, np.ndarray) or isinstance(b, np.ndarray) else min(a, b)
    if method == "godel":
        if isinstance(a, np.ndarray) or isinstance(b, np.ndarray):
            return np.where(np.asarray(a) <= np.asarray(b), 1.0, b)
        return 1.0 if a <= b else b
    raise ValueError(f"unknown implication {method!r}; expected 'mamdani' or 'godel'")


def build_relation(a: DiscreteFuzzySet, b: DiscreteFuzzySet, method: str = "mamdani") -> FuzzyRelation:
    samples = implication(a.samples[:, None], b.samples[None, :], method)
    return FuzzyRelation(a.universe, b.universe, np.broadcast_to(samples, (a.samples.size, b.samples.size)))


def generalized_modus_ponens(a_prime: DiscreteFuzzySet, relation: FuzzyRelation) -> DiscreteFuzzySet:
    """Sup-min composition of an observed premise with a rule relation."""
    if a_prime.universe != relation.domain:
        raise UniverseMismatchError(
            f"premise is over {a_prime.universe.name!r} but relation domain is {relation.domain.name!r}"
        )
    composed = np.minimum(a_prime.samples[:, None], relation.samples).max(axis=0)
    return DiscreteFuzzySet(relation.codomain, composed)


# --------------------------------------------------------------------------
# Mamdani pipeline
# --------------------------------------------------------------------------


def clip(consequent: FuzzySubset, strength: float) -> DiscreteFuzzySet:
    strength = check_degree(strength, "rule strength")
    return DiscreteFuzzySet(consequent.universe, np.minimum(consequent.discretize().samples, strength))


def aggregate(sets: Sequence[DiscreteFuzzySet]) -> DiscreteFuzzySet:
    sets = list(sets)
    if not sets:
        raise ValueError("cannot aggregate an empty list of fuzzy sets")
    universe = sets[0].universe
    for s in sets[1:]:
        if s.universe != universe:
            raise UniverseMismatchError("aggregated sets must share one universe")
    return DiscreteFuzzySet(universe, np.maximum.reduce([s.samples for s in sets]))


def defuzzify_centroid(s: DiscreteFuzzySet) -> float:
    total = float(s.samples.sum())
    if total <= 0.0:
        raise EmptyAggregateError("empty aggregate: no rule fired")
    x = s.universe.grid
    value = float(np.dot(x, s.samples) / total)
    # guard against rounding just outside the hull of the grid
    return min(max(value, s.universe.low), s.universe.high)


@dataclass(frozen=True)
class FuzzyRule:
    """``IF v1 is t1 AND v2 is t2 ... THEN w is u``."""

    rule_id: str
    premises: tuple[tuple[str, str], ...]
    consequent: tuple[str, str]

    def __post_init__(self):
        object.__setattr__(self, "premises", tuple(tuple(p) for p in self.premises))
        object.__setattr__(self, "consequent", tuple(self.consequent))
        if not self.premises:
            raise ValueError(f"rule {self.rule_id!r} has no premises")

    def canonicalized(self, variables: Mapping[str, LinguisticVariable]) -> "FuzzyRule":
        """Resolve term aliases against the given variables."""
        try:
            premises = tuple((v, variables[v].canonical(t)) for v, t in self.premises)
            cv, ct = self.consequent
            consequent = (cv, variables[cv].canonical(ct))
        except KeyError as exc:
            raise ValueError(f"rule {self.rule_id!r}: {exc.args[0]}") from None
        return FuzzyRule(self.rule_id, premises, consequent)

    def to_dict(self) -> dict:
        return {"id": self.rule_id, "if": [list(p) for p in self.premises], "then": list(self.consequent)}

    @classmethod
    def from_dict(cls, data: Mapping) -> "FuzzyRule":
        return cls(data["id"], tuple(tuple(p) for p in data["if"]), tuple(data["then"]))


def rule_strengths(
    rules: Iterable[FuzzyRule],
    variables: Mapping[str, LinguisticVariable],
    inputs: Mapping[str, float],
    t_norm_kind: str = "min",
) -> list[tuple[FuzzyRule, float]]:
    """Firing strength of every rule: the t-norm of its premise degrees."""
    tn = T_NORMS[t_norm_kind]
    degrees: dict[str, dict[str, float]] = {}
    out = []
    for rule in rules:
        strength = 1.0
        for var, term in rule.premises:
            if var not in inputs:
                raise KeyError(f"rule {rule.rule_id!r} needs an input for {var!r}")
            if var not in degrees:
                degrees[var] = variables[var].fuzzify(inputs[var])
            strength = tn(strength, degrees[var][variables[var].canonical(term)])
        out.append((rule, strength))
    return out


def conclude(
    fired: Iterable[tuple[tuple[str, str], float]],
    variables: Mapping[str, LinguisticVariable],
) -> dict[str, DiscreteFuzzySet]:
    """Clip each fired consequent and max-aggregate per output variable.

    Consequents with zero strength contribute nothing and are skipped.
    """
    per_variable: dict[str, list[DiscreteFuzzySet]] = {}
    for (var, term), strength in fired:
        if strength <= 0.0:
            continue
        per_variable.setdefault(var, []).append(clip(variables[var].term(term), strength))
    return {var: aggregate(sets) for var, sets in per_variable.items()}


def infer_mamdani(
    rules: Iterable[FuzzyRule],
    variables: Mapping[str, LinguisticVariable],
    inputs: Mapping[str, float],
    t_norm_kind: str = "min",
    output: str | None = None,
) -> float:
    """Fuzzify, fire, clip, aggregate and defuzzify by centroid.

    Returns the crisp value of ``output`` (or of the single consequent
    variable when ``output`` is omitted).
    """
    rules = list(rules)
    fired = [(r.consequent, s) for r, s in rule_strengths(rules, variables, inputs, t_norm_kind)]
    outputs = {r.consequent[0] for r in rules}
    if output is None:
        if len(outputs) != 1:
            raise ValueError(f"rule base concludes on {sorted(outputs)}; pass output=")
        (output,) = outputs
    sets = conclude(fired, variables)
    if output not in sets:
        raise EmptyAggregateError(f"empty aggregate: no rule fired for {output!r}")
    return defuzzify_centroid(sets[output])
