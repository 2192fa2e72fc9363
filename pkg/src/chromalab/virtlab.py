"""Deterministic simulated colorimetric laboratory.

Replaces the physical rig: given a recipe and a humidity program it produces
a color-vs-time curve, extracts the four curve metrics, folds them into a
weighted score, and supports humidity calibration of a two-recipe array.

The chemistry is a configurable stand-in, not a physical model: each
ingredient contributes a logistic-saturation color shift per channel, first
order kinetics set the approach speed, and a recipe-level reversibility
factor controls how much of the accumulated shift recovers on drying.
"""

import hashlib
import math
from dataclasses import dataclass, field
from itertools import combinations_with_replacement
from typing import Mapping, Optional, Sequence, Union

import numpy as np

from .domain import Recipe, ResponseCurve, RHProgram, ScoreBreakdown
from .errors import BadWeights, RankDeficient, UnknownIngredient

__all__ = [
    "IngredientResponse",
    "WorldModel",
    "ScoreWeights",
    "ReferenceScales",
    "CalibrationModel",
    "default_world",
    "default_program",
    "world_for_ingredients",
    "steady_state_color",
    "simulate_curve",
    "extract_metrics",
    "score",
    "calibrate_array",
    "evaluate_rmse",
    "REFERENCE_INGREDIENTS",
    "BENEFICIAL_COLORANT",
]

SeedLike = Union[int, Sequence[int]]

_AMPLITUDE_EPS = 1e-9
_MIN_TAU_S = 0.5


@dataclass(frozen=True)
class IngredientResponse:
    """Colorimetric behavior of one ingredient.

    gains: steady-state shift per channel at full saturation and unit fraction.
    h50/steepness: logistic humidity response midpoint and width (%RH).
    kinetic: fractional change of the base time constant per unit fraction.
    reversibility: fraction of this ingredient's shift recovered on drying.
    """

    gains: tuple[float, float, float]
    h50: float
    steepness: float
    kinetic: float = 0.0
    reversibility: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "gains", tuple(float(g) for g in self.gains))
        if not all(math.isfinite(g) for g in self.gains):
            raise ValueError("gains must be finite")
        if self.steepness <= 0:
            raise ValueError("steepness must be positive")


@dataclass(frozen=True)
class WorldModel:
    """Complete specification of the simulated chemistry."""

    ingredients: dict[str, IngredientResponse]
    interactions: dict[tuple[str, str], float] = field(default_factory=dict)
    baseline_color: tuple[float, float, float] = (0.82, 0.80, 0.78)
    tau0_s: float = 12.0
    noise_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.tau0_s <= 0:
            raise ValueError("tau0_s must be positive")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")
        inter = {}
        for pair, coeff in self.interactions.items():
            a, b = sorted(pair)
            for cas in (a, b):
                if cas not in self.ingredients:
                    raise UnknownIngredient(f"interaction references unknown ingredient {cas}")
            inter[(a, b)] = float(coeff)
        object.__setattr__(self, "interactions", inter)

    def with_noise(self, sigma: float) -> "WorldModel":
        return WorldModel(
            ingredients=self.ingredients,
            interactions=self.interactions,
            baseline_color=self.baseline_color,
            tau0_s=self.tau0_s,
            noise_sigma=sigma,
            seed=self.seed,
        )

    def to_json_dict(self) -> dict:
        return {
            "baseline_color": list(self.baseline_color),
            "tau0_s": self.tau0_s,
            "noise_sigma": self.noise_sigma,
            "seed": self.seed,
            "ingredients": {
                cas: {
                    "gains": list(ing.gains),
                    "h50": ing.h50,
                    "steepness": ing.steepness,
                    "kinetic": ing.kinetic,
                    "reversibility": ing.reversibility,
                }
                for cas, ing in sorted(self.ingredients.items())
            },
            "interactions": [
                {"a": a, "b": b, "coeff": c}
                for (a, b), c in sorted(self.interactions.items())
            ],
        }

    @classmethod
    def from_json_dict(cls, d: Mapping) -> "WorldModel":
        return cls(
            ingredients={
                cas: IngredientResponse(
                    gains=tuple(v["gains"]),
                    h50=float(v["h50"]),
                    steepness=float(v["steepness"]),
                    kinetic=float(v.get("kinetic", 0.0)),
                    reversibility=float(v.get("reversibility", 1.0)),
                )
                for cas, v in d["ingredients"].items()
            },
            interactions={(e["a"], e["b"]): float(e["coeff"]) for e in d.get("interactions", [])},
            baseline_color=tuple(d.get("baseline_color", (0.82, 0.80, 0.78))),
            tau0_s=float(d.get("tau0_s", 12.0)),
            noise_sigma=float(d.get("noise_sigma", 0.0)),
            seed=int(d.get("seed", 0)),
        )


# Reference ingredient set: one strongly beneficial colorant (cobalt chloride),
# two mild colorants, film-forming additives, and a solvent. Calcium chloride,
# nickel bromide, and tetramethylammonium iodide are detrimental (slow, poorly
# reversible, or quenching).
BENEFICIAL_COLORANT = "7646-79-9"   # cobalt(II) chloride

REFERENCE_INGREDIENTS: dict[str, IngredientResponse] = {
    "7646-79-9": IngredientResponse(  # cobalt(II) chloride
        gains=(0.50, -0.12, -0.45), h50=45.0, steepness=10.0, kinetic=-0.25, reversibility=0.95),
    "7718-54-9": IngredientResponse(  # nickel(II) iodide
        gains=(0.18, 0.10, -0.20), h50=25.0, steepness=8.0, kinetic=0.10, reversibility=0.85),
    "13462-88-9": IngredientResponse(  # nickel(II) bromide
        gains=(0.06, 0.04, -0.05), h50=65.0, steepness=12.0, kinetic=0.60, reversibility=0.45),
    "10043-52-4": IngredientResponse(  # calcium chloride
        gains=(-0.04, -0.04, -0.04), h50=55.0, steepness=15.0, kinetic=0.90, reversibility=0.55),
    "75-58-1": IngredientResponse(  # tetramethylammonium iodide
        gains=(0.02, 0.01, -0.02), h50=50.0, steepness=12.0, kinetic=0.40, reversibility=0.65),
    "25322-68-3": IngredientResponse(  # polyethylene glycol
        gains=(0.0, 0.0, 0.0), h50=50.0, steepness=10.0, kinetic=-0.10, reversibility=1.0),
    "9004-57-3": IngredientResponse(  # ethyl cellulose
        gains=(0.0, 0.0, 0.0), h50=50.0, steepness=10.0, kinetic=0.15, reversibility=0.90),
    "67-63-0": IngredientResponse(  # isopropanol
        gains=(0.0, 0.0, 0.0), h50=50.0, steepness=10.0, kinetic=-0.30, reversibility=1.0),
}

_REFERENCE_INTERACTIONS: dict[tuple[str, str], float] = {
    ("7646-79-9", "75-58-1"): -0.30,     # TMAI quenches the cobalt response
    ("10043-52-4", "7646-79-9"): -0.25,  # CaCl2 scavenges moisture
    ("25322-68-3", "7646-79-9"): 0.12,   # PEG improves film quality
    ("75-58-1", "7718-54-9"): 0.10,      # TMAI boosts the nickel iodide response
}


def default_world(noise_sigma: float = 0.003, seed: int = 0) -> WorldModel:
    """The stock eight-ingredient world used by campaigns and tests."""
    return WorldModel(
        ingredients=dict(REFERENCE_INGREDIENTS),
        interactions=dict(_REFERENCE_INTERACTIONS),
        noise_sigma=noise_sigma,
        seed=seed,
    )


def world_for_ingredients(cas_list: Sequence[str], noise_sigma: float = 0.003,
                          seed: int = 0) -> WorldModel:
    """A world covering the given ingredient set.

    Reference ingredients keep their stock parameters; anything else gets
    mild parameters derived deterministically from its CAS string, so
    arbitrary selections stay runnable.
    """
    ingredients: dict[str, IngredientResponse] = {}
    for cas in cas_list:
        if cas in REFERENCE_INGREDIENTS:
            ingredients[cas] = REFERENCE_INGREDIENTS[cas]
            continue
        digest = hashlib.sha256(f"virtlab-ingredient:{cas}".encode()).digest()
        rng = np.random.default_rng(int.from_bytes(digest[:8], "big"))
        gains = tuple(rng.uniform(-0.08, 0.08, size=3))
        ingredients[cas] = IngredientResponse(
            gains=gains,
            h50=float(rng.uniform(30.0, 70.0)),
            steepness=float(rng.uniform(8.0, 16.0)),
            kinetic=float(rng.uniform(-0.2, 0.6)),
            reversibility=float(rng.uniform(0.5, 1.0)),
        )
    interactions = {
        pair: coeff for pair, coeff in _REFERENCE_INTERACTIONS.items()
        if pair[0] in ingredients and pair[1] in ingredients
    }
    return WorldModel(ingredients=ingredients, interactions=interactions,
                      noise_sigma=noise_sigma, seed=seed)


def default_program(step_s: float = 60.0, dt_s: float = 1.0) -> RHProgram:
    """Baseline at 5 %RH, steps to 95 %RH and back: covers the 5-95 span."""
    levels = [5.0, 20.0, 40.0, 60.0, 80.0, 95.0, 5.0]
    return RHProgram(steps=tuple((h, step_s) for h in levels), sample_dt_s=dt_s)


def _saturation(h: float, h50: float, steepness: float) -> float:
    return 1.0 / (1.0 + math.exp(-(h - h50) / steepness))


def _fraction_vector(world: WorldModel, recipe: Recipe) -> dict[str, float]:
    unknown = set(recipe.composition) - set(world.ingredients)
    if unknown:
        raise UnknownIngredient(f"recipe uses ingredients outside the world: {sorted(unknown)}")
    return dict(recipe.composition)


def steady_delta(world: WorldModel, fractions: Mapping[str, float], rh: float) -> np.ndarray:
    """Steady-state color shift (3 channels) of a mixture at the given RH."""
    delta = np.zeros(3)
    for cas, x in fractions.items():
        if x == 0.0:
            continue
        ing = world.ingredients[cas]
        delta += x * _saturation(rh, ing.h50, ing.steepness) * np.asarray(ing.gains)
    for (a, b), coeff in world.interactions.items():
        xa = fractions.get(a, 0.0)
        xb = fractions.get(b, 0.0)
        if xa == 0.0 or xb == 0.0:
            continue
        ia, ib = world.ingredients[a], world.ingredients[b]
        sat = _saturation(rh, 0.5 * (ia.h50 + ib.h50), 0.5 * (ia.steepness + ib.steepness))
        direction = 0.5 * (np.asarray(ia.gains) + np.asarray(ib.gains))
        delta += coeff * xa * xb * sat * direction
    return delta


def steady_state_color(world: WorldModel, recipe: Recipe, rh: float) -> np.ndarray:
    """Equilibrium color of a recipe at the given RH, clamped to [0, 1]."""
    fractions = _fraction_vector(world, recipe)
    return np.clip(np.asarray(world.baseline_color) + steady_delta(world, fractions, rh), 0.0, 1.0)


def _recipe_kinetics(world: WorldModel, fractions: Mapping[str, float]) -> tuple[float, float]:
    tau = world.tau0_s * (1.0 + sum(x * world.ingredients[c].kinetic for c, x in fractions.items()))
    rev = sum(x * world.ingredients[c].reversibility for c, x in fractions.items())
    return max(tau, _MIN_TAU_S), min(max(rev, 0.0), 1.0)


def simulate_curve(recipe: Recipe, program: RHProgram, world: WorldModel, seed: SeedLike,
                   recipe_id: str = "", program_id: str = "") -> ResponseCurve:
    """Color-vs-time curve of a recipe under a humidity program.

    Within each step every channel relaxes exponentially toward its
    steady-state value with the recipe's time constant; on steps that move
    back toward the dry baseline only a ``reversibility`` fraction of the
    accumulated shift recovers. Additive Gaussian observation noise, then
    clamping to [0, 1]. Byte-identical output for identical arguments.
    """
    fractions = _fraction_vector(world, recipe)
    tau, rev = _recipe_kinetics(world, fractions)
    c0 = np.asarray(world.baseline_color)

    n = program.n_samples
    dt = program.sample_dt_s
    t = dt * np.arange(1, n + 1)
    boundaries = np.cumsum([d for _, d in program.steps])
    step_of = np.minimum(np.searchsorted(boundaries, t, side="left"), len(program.steps) - 1)

    color = np.empty((n, 3))
    c_entry = c0.copy()
    t_entry = 0.0
    for i, (rh, _) in enumerate(program.steps):
        target = c0 + steady_delta(world, fractions, rh)
        # Drying transitions recover only a reversibility fraction of the shift.
        if np.linalg.norm(target - c0) < np.linalg.norm(c_entry - c0):
            target = target + (1.0 - rev) * (c_entry - target)
        mask = step_of == i
        if mask.any():
            decay = np.exp(-(t[mask] - t_entry) / tau)
            color[mask] = target[None, :] + decay[:, None] * (c_entry - target)[None, :]
        t_exit = boundaries[i]
        c_entry = target + math.exp(-(t_exit - t_entry) / tau) * (c_entry - target)
        t_entry = t_exit

    if world.noise_sigma > 0:
        entropy = [seed] if isinstance(seed, int) else list(seed)
        rng = np.random.default_rng(np.random.SeedSequence([world.seed, *entropy]))
        color = color + rng.normal(0.0, world.noise_sigma, size=color.shape)
    return ResponseCurve(t=t, color=np.clip(color, 0.0, 1.0),
                         recipe_id=recipe_id, program_id=program_id)


def _step_end_indices(program: RHProgram) -> list[Optional[int]]:
    """Index of the last sample inside each step (None for zero-sample steps)."""
    n = program.n_samples
    dt = program.sample_dt_s
    t = dt * np.arange(1, n + 1)
    boundaries = np.cumsum([d for _, d in program.steps])
    step_of = np.minimum(np.searchsorted(boundaries, t, side="left"), len(program.steps) - 1)
    out: list[Optional[int]] = []
    for i in range(len(program.steps)):
        idx = np.nonzero(step_of == i)[0]
        out.append(int(idx[-1]) if len(idx) else None)
    return out


def extract_metrics(curve: ResponseCurve, program: RHProgram) -> ScoreBreakdown:
    """Amplitude, t90 response time, reversibility, and sensitivity.

    Amplitude is the largest per-step L2 color distance from the equilibrated
    baseline (end of the first step). Response time is the time for the
    largest step to reach 90 % of its excursion. Reversibility compares the
    residual after the final baseline step against the amplitude. Sensitivity
    is the least-squares slope of the steady-state distance against %RH.

    A flat curve (amplitude below 1e-9) is degenerate: response time is
    reported as the program duration and reversibility as zero.
    """
    if len(curve) != program.n_samples:
        raise ValueError(
            f"curve has {len(curve)} samples but the program defines {program.n_samples}")
    ends = _step_end_indices(program)
    if ends[0] is None or ends[-1] is None:
        raise ValueError("first and last program steps must contain samples")
    baseline = curve.color[ends[0]]
    dist = np.linalg.norm(curve.color - baseline[None, :], axis=1)

    levels = []
    step_dist = []
    for (rh, _), idx in zip(program.steps, ends):
        if idx is None:
            continue
        levels.append(rh)
        step_dist.append(dist[idx])
    levels_arr = np.asarray(levels)
    step_arr = np.asarray(step_dist)

    amplitude = float(step_arr.max())
    sensitivity = float(np.polyfit(levels_arr, step_arr, 1)[0]) if len(levels_arr) >= 2 else 0.0
    total = program.total_duration_s

    if amplitude < _AMPLITUDE_EPS:
        return ScoreBreakdown(amplitude=amplitude, response_time_s=total,
                              reversibility=0.0, sensitivity=sensitivity)

    # Response time: t90 within the largest-excursion step.
    order = [i for i, idx in enumerate(ends) if idx is not None]
    largest = max(order, key=lambda i: dist[ends[i]])
    start_idx = 0
    prev = [i for i in order if i < largest]
    if prev:
        start_idx = ends[prev[-1]] + 1
    seg = dist[start_idx:ends[largest] + 1]
    d_start = dist[start_idx - 1] if start_idx > 0 else 0.0
    threshold = d_start + 0.9 * (dist[ends[largest]] - d_start)
    hit = np.nonzero(seg >= threshold)[0]
    step_start_t = curve.t[start_idx] - program.sample_dt_s
    response_time = float(curve.t[start_idx + hit[0]] - step_start_t) if len(hit) else \
        float(curve.t[ends[largest]] - step_start_t)

    residual = float(dist[ends[-1]])
    reversibility = min(max(1.0 - residual / amplitude, 0.0), 1.0)
    return ScoreBreakdown(amplitude=amplitude, response_time_s=response_time,
                          reversibility=reversibility, sensitivity=sensitivity)


@dataclass(frozen=True)
class ScoreWeights:
    amplitude: float = 0.4
    response_time: float = 0.2
    reversibility: float = 0.2
    sensitivity: float = 0.2

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.amplitude, self.response_time, self.reversibility, self.sensitivity)


@dataclass(frozen=True)
class ReferenceScales:
    """Full-marks scales: metric_k / ref_k is clamped into [0, 1]."""

    amplitude: float = 0.55
    response_time_s: float = 60.0
    reversibility: float = 1.0
    sensitivity: float = 0.005


def score(breakdown: ScoreBreakdown, weights: ScoreWeights = ScoreWeights(),
          refs: ReferenceScales = ReferenceScales()) -> float:
    """Weighted sum of normalized metrics, in [0, 1].

    Amplitude, reversibility, and sensitivity normalize as metric/ref;
    response time as 1 - time/ref (faster is better). All terms clamp to
    [0, 1] before weighting.
    """
    w = weights.as_tuple()
    if any(x < 0 for x in w):
        raise BadWeights("weights must be nonnegative")
    if abs(sum(w) - 1.0) > 1e-9:
        raise BadWeights(f"weights sum to {sum(w)!r}, not 1")
    r = (refs.amplitude, refs.response_time_s, refs.reversibility, refs.sensitivity)
    if any(x <= 0 for x in r):
        raise BadWeights("reference scales must be positive")

    def clamp01(v: float) -> float:
        return min(max(v, 0.0), 1.0)

    parts = (
        clamp01(breakdown.amplitude / refs.amplitude),
        clamp01(1.0 - breakdown.response_time_s / refs.response_time_s),
        clamp01(breakdown.reversibility / refs.reversibility),
        clamp01(breakdown.sensitivity / refs.sensitivity),
    )
    return float(sum(wk * pk for wk, pk in zip(w, parts)))


@dataclass(frozen=True, eq=False)
class CalibrationModel:
    """Polynomial regression from two recipes' steady-state colors to %RH."""

    recipes: tuple[Recipe, Recipe]
    degree: int
    ridge: float
    coefficients: np.ndarray
    training_grid: tuple[float, ...]


def _poly_design(features: np.ndarray, degree: int) -> np.ndarray:
    n, m = features.shape
    cols = [np.ones(n)]
    for deg in range(1, degree + 1):
        for combo in combinations_with_replacement(range(m), deg):
            col = np.ones(n)
            for j in combo:
                col = col * features[:, j]
            cols.append(col)
    return np.column_stack(cols)


def _array_features(world: WorldModel, recipes: Sequence[Recipe], levels: Sequence[float],
                    rng: Optional[np.random.Generator]) -> np.ndarray:
    rows = []
    for rh in levels:
        feats = np.concatenate([steady_state_color(world, r, rh) for r in recipes])
        if rng is not None and world.noise_sigma > 0:
            feats = feats + rng.normal(0.0, world.noise_sigma, size=feats.shape)
        rows.append(feats)
    return np.asarray(rows)


def calibrate_array(recipe_pair: Sequence[Recipe], world: WorldModel,
                    training_grid: Sequence[float], noise_seed: int = 0,
                    degree: int = 2, ridge: float = 1e-8) -> CalibrationModel:
    """Fit RH = poly(features) for a two-recipe array by ridge least squares."""
    if len(recipe_pair) != 2:
        raise ValueError("calibration needs exactly two recipes")
    grid = tuple(float(h) for h in training_grid)
    if len(set(grid)) < 6:
        raise ValueError("training grid needs at least 6 distinct RH levels")
    if min(grid) < 5.0 or max(grid) > 95.0:
        raise ValueError("training grid must lie within [5, 95] %RH")

    rng = np.random.default_rng(np.random.SeedSequence([world.seed, noise_seed]))
    features = _array_features(world, recipe_pair, grid, rng)
    if np.abs(features - features[0]).max() < 1e-12:
        raise RankDeficient("array features carry no humidity variation")

    A = _poly_design(features, degree)
    y = np.asarray(grid)
    coef = np.linalg.solve(A.T @ A + ridge * np.eye(A.shape[1]), A.T @ y)
    return CalibrationModel(recipes=(recipe_pair[0], recipe_pair[1]), degree=degree,
                            ridge=ridge, coefficients=coef, training_grid=grid)


def predict_rh(calibration: CalibrationModel, world: WorldModel, levels: Sequence[float],
               noise_seed: Optional[int] = None) -> np.ndarray:
    """Predicted %RH at the given true levels (optionally with feature noise)."""
    rng = None
    if noise_seed is not None:
        rng = np.random.default_rng(np.random.SeedSequence([world.seed, noise_seed]))
    features = _array_features(world, calibration.recipes, levels, rng)
    return _poly_design(features, calibration.degree) @ calibration.coefficients


def evaluate_rmse(calibration: CalibrationModel, world: WorldModel,
                  eval_grid: Sequence[float], noise_seed: Optional[int] = None) -> float:
    """%RH root-mean-square error over a grid disjoint from training."""
    grid = tuple(float(h) for h in eval_grid)
    if set(grid) & set(calibration.training_grid):
        raise ValueError("evaluation grid must be disjoint from the training grid")
    pred = predict_rh(calibration, world, grid, noise_seed=noise_seed)
    return float(np.sqrt(np.mean((pred - np.asarray(grid)) ** 2)))
