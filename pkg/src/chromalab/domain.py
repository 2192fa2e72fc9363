"""Shared vocabulary types and the composition-normalization primitive.

All types here are immutable values: safe to copy, hash where sensible, and
hand between concurrent tasks. Canonical JSON serialization uses snake_case
field names; fractional quantities are written with 9 significant digits.
"""

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .errors import AllZero

__all__ = [
    "Role",
    "SubstanceRecord",
    "Recipe",
    "RHProgram",
    "ResponseCurve",
    "ScoreBreakdown",
    "ArticleRecord",
    "normalize_recipe",
    "quantize_recipe",
    "fraction9",
]


class Role(str, Enum):
    """Functional role of a reagent. Declaration order is the tie-break order."""

    COLORANT = "colorant"
    ADDITIVE = "additive"
    SOLVENT = "solvent"
    REACTOR = "reactor"
    ADJUSTER = "adjuster"

    @property
    def rank(self) -> int:
        return _ROLE_RANK[self]


_ROLE_RANK = {r: i for i, r in enumerate(Role)}


def fraction9(x: float) -> float:
    """Round to 9 significant digits, the canonical wire precision for fractions."""
    return float(f"{float(x):.9g}")


@dataclass(frozen=True)
class SubstanceRecord:
    """A mined candidate reagent."""

    cas: str
    name: str
    role: Role
    purpose: str
    relevance: float
    sources: tuple[str, ...] = ()

    def __post_init__(self):
        if not isinstance(self.role, Role):
            object.__setattr__(self, "role", Role(self.role))
        if not 0.0 <= self.relevance <= 1.0:
            raise ValueError(f"relevance {self.relevance} outside [0, 1]")
        object.__setattr__(self, "sources", tuple(self.sources))

    def to_json_dict(self) -> dict:
        return {
            "cas": self.cas,
            "name": self.name,
            "role": self.role.value,
            "purpose": self.purpose,
            "relevance": fraction9(self.relevance),
            "sources": list(self.sources),
        }

    @classmethod
    def from_json_dict(cls, d: Mapping) -> "SubstanceRecord":
        return cls(
            cas=d["cas"],
            name=d["name"],
            role=Role(d["role"]),
            purpose=d["purpose"],
            relevance=float(d["relevance"]),
            sources=tuple(d.get("sources", ())),
        )


@dataclass(frozen=True)
class Recipe:
    """A point on the fixed-total composition simplex.

    ``composition`` is an ordered CAS -> mass-fraction mapping; the key order
    is the campaign's canonical ingredient order.
    """

    composition: dict[str, float]

    def __post_init__(self):
        for cas, frac in self.composition.items():
            if frac < 0.0:
                raise ValueError(f"negative fraction for {cas}: {frac}")
        total = sum(self.composition.values())
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"fractions sum to {total!r}, not 1")

    @property
    def keys(self) -> tuple[str, ...]:
        return tuple(self.composition)

    def to_vector(self, order: Optional[Sequence[str]] = None) -> np.ndarray:
        order = self.keys if order is None else order
        return np.array([self.composition.get(k, 0.0) for k in order])

    @classmethod
    def from_vector(cls, keys: Sequence[str], vec: Iterable[float]) -> "Recipe":
        return cls(composition={k: float(v) for k, v in zip(keys, vec)})

    def to_json_dict(self) -> dict:
        return {"composition": {k: fraction9(v) for k, v in self.composition.items()}}

    @classmethod
    def from_json_dict(cls, d: Mapping) -> "Recipe":
        return cls(composition={k: float(v) for k, v in d["composition"].items()})


def quantize_recipe(recipe: Recipe) -> Recipe:
    """Snap fractions to exact multiples of 1e-9 that still sum to one.

    Nano-unit rounding with largest-remainder correction. Quantized recipes
    survive JSON serialization at 9 significant digits bit-for-bit, which is
    what makes persisted campaign state stable across save/load cycles. The
    operation is idempotent.
    """
    items = list(recipe.composition.items())
    scale = 10**9
    raw = [frac * scale for _, frac in items]
    units = [int(math.floor(r)) for r in raw]
    leftover = scale - sum(units)
    order = sorted(range(len(raw)), key=lambda i: (-(raw[i] - units[i]), i))
    for j in range(leftover):
        units[order[j % len(units)]] += 1
    return Recipe(composition={k: u / scale for (k, _), u in zip(items, units)})


def normalize_recipe(raw: Mapping[str, float]) -> Recipe:
    """Scale a nonnegative composition so its fractions sum to one.

    Raises AllZero when the raw vector sums to zero. Proportions are
    preserved; the operation is idempotent and scale-invariant.
    """
    for cas, v in raw.items():
        if v < 0.0:
            raise ValueError(f"negative entry for {cas}: {v}")
    total = float(sum(raw.values()))
    if total == 0.0:
        raise AllZero("raw composition sums to zero")
    return Recipe(composition={k: float(v) / total for k, v in raw.items()})


@dataclass(frozen=True)
class RHProgram:
    """A humidity exposure schedule: (rh_percent, duration_s) steps.

    The first and last steps must sit at the lowest RH level in the program,
    so reversibility is measurable against a common baseline. Zero-duration
    steps are tolerated (they contribute no samples).
    """

    steps: tuple[tuple[float, float], ...]
    sample_dt_s: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "steps", tuple((float(h), float(d)) for h, d in self.steps))
        if not self.steps:
            raise ValueError("program needs at least one step")
        if self.sample_dt_s <= 0:
            raise ValueError("sample_dt_s must be positive")
        for rh, dur in self.steps:
            if not 0.0 <= rh <= 100.0:
                raise ValueError(f"rh {rh} outside [0, 100]")
            if dur < 0.0:
                raise ValueError(f"negative duration {dur}")
        if self.total_duration_s <= 0:
            raise ValueError("program has zero total duration")
        lowest = min(rh for rh, _ in self.steps)
        if self.steps[0][0] != lowest or self.steps[-1][0] != lowest:
            raise ValueError("first and last steps must be at the baseline (lowest RH) level")

    @property
    def total_duration_s(self) -> float:
        return sum(d for _, d in self.steps)

    @property
    def n_samples(self) -> int:
        return int(math.floor(self.total_duration_s / self.sample_dt_s))

    def to_json_dict(self) -> dict:
        return {
            "steps": [[fraction9(h), fraction9(d)] for h, d in self.steps],
            "sample_dt_s": fraction9(self.sample_dt_s),
        }

    @classmethod
    def from_json_dict(cls, d: Mapping) -> "RHProgram":
        return cls(
            steps=tuple((h, dur) for h, dur in d["steps"]),
            sample_dt_s=float(d["sample_dt_s"]),
        )


@dataclass(frozen=True, eq=False)
class ResponseCurve:
    """Simulated color-vs-time data on a uniform grid, channels in [0, 1]."""

    t: np.ndarray
    color: np.ndarray
    recipe_id: str = ""
    program_id: str = ""

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        color = np.asarray(self.color, dtype=float)
        if color.ndim != 2 or color.shape[1] != 3:
            raise ValueError(f"color must be (n, 3), got {color.shape}")
        if len(t) != len(color):
            raise ValueError("t and color lengths differ")
        if len(t) and (color.min() < 0.0 or color.max() > 1.0):
            raise ValueError("channels must be clamped to [0, 1]")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "color", color)

    def __len__(self) -> int:
        return len(self.t)

    def to_json_dict(self) -> dict:
        return {
            "t": [fraction9(v) for v in self.t],
            "color": [[fraction9(c) for c in row] for row in self.color],
            "recipe_id": self.recipe_id,
            "program_id": self.program_id,
        }


@dataclass(frozen=True)
class ScoreBreakdown:
    """The four curve metrics, plus the weighted score once assigned."""

    amplitude: float
    response_time_s: float
    reversibility: float
    sensitivity: float
    score: Optional[float] = None

    def __post_init__(self):
        for name in ("amplitude", "response_time_s", "reversibility", "sensitivity"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} is not finite")
        if not 0.0 <= self.reversibility <= 1.0:
            raise ValueError(f"reversibility {self.reversibility} outside [0, 1]")
        if self.score is not None and not 0.0 <= self.score <= 1.0:
            raise ValueError(f"score {self.score} outside [0, 1]")

    def with_score(self, value: float) -> "ScoreBreakdown":
        return replace(self, score=value)

    def to_json_dict(self) -> dict:
        return {
            "amplitude": fraction9(self.amplitude),
            "response_time_s": fraction9(self.response_time_s),
            "reversibility": fraction9(self.reversibility),
            "sensitivity": fraction9(self.sensitivity),
            "score": None if self.score is None else fraction9(self.score),
        }

    @classmethod
    def from_json_dict(cls, d: Mapping) -> "ScoreBreakdown":
        return cls(
            amplitude=float(d["amplitude"]),
            response_time_s=float(d["response_time_s"]),
            reversibility=float(d["reversibility"]),
            sensitivity=float(d["sensitivity"]),
            score=None if d.get("score") is None else float(d["score"]),
        )


@dataclass(frozen=True)
class ArticleRecord:
    """A retrieved article: metadata plus optional fulltext and relevance."""

    id: str
    title: str
    abstract: str
    fulltext: Optional[str] = None
    relevance: Optional[float] = None

    def __post_init__(self):
        if self.relevance is not None and not 0.0 <= self.relevance <= 1.0:
            raise ValueError(f"relevance {self.relevance} outside [0, 1]")

    def with_relevance(self, value: float) -> "ArticleRecord":
        return replace(self, relevance=value)

    def to_json_dict(self) -> dict:
        d = {"id": self.id, "title": self.title, "abstract": self.abstract}
        if self.fulltext is not None:
            d["fulltext"] = self.fulltext
        if self.relevance is not None:
            d["relevance"] = fraction9(self.relevance)
        return d
