import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from chromalab.domain import Recipe, RHProgram, ScoreBreakdown, normalize_recipe
from chromalab.errors import BadWeights, RankDeficient, UnknownIngredient
from chromalab.virtlab import (
    BENEFICIAL_COLORANT,
    IngredientResponse,
    ReferenceScales,
    ScoreWeights,
    WorldModel,
    calibrate_array,
    default_program,
    default_world,
    evaluate_rmse,
    extract_metrics,
    score,
    simulate_curve,
    steady_state_color,
    world_for_ingredients,
)

from conftest import REFERENCE_KEYS


def reference_recipe(**fractions) -> Recipe:
    comp = {cas: 0.0 for cas in REFERENCE_KEYS}
    comp.update(fractions)
    return normalize_recipe(comp)


def single_ingredient_world(gain=(0.4, -0.1, -0.3), h50=45.0, steepness=10.0,
                            tau0=10.0, reversibility=1.0, noise=0.0):
    return WorldModel(
        ingredients={"X": IngredientResponse(gains=gain, h50=h50, steepness=steepness,
                                             reversibility=reversibility)},
        baseline_color=(0.5, 0.5, 0.5),
        tau0_s=tau0,
        noise_sigma=noise,
    )


class TestSimulateCurve:
    def test_pure_solvent_is_flat_at_baseline(self):
        world = default_world(noise_sigma=0.0)
        recipe = reference_recipe(**{"67-63-0": 1.0})
        curve = simulate_curve(recipe, default_program(), world, seed=0)
        assert np.allclose(curve.color, np.asarray(world.baseline_color), atol=1e-12)

    def test_zero_duration_tail_equivalence(self):
        world = default_world(noise_sigma=0.003)
        recipe = reference_recipe(**{BENEFICIAL_COLORANT: 0.6, "67-63-0": 0.4})
        base = default_program()
        extended = RHProgram(steps=base.steps + ((base.steps[-1][0], 0.0),),
                             sample_dt_s=base.sample_dt_s)
        a = simulate_curve(recipe, base, world, seed=5)
        b = simulate_curve(recipe, extended, world, seed=5)
        assert np.array_equal(a.color, b.color)
        assert np.array_equal(a.t, b.t)

    def test_single_step_matches_closed_form(self):
        # c(t) = c0 + delta * (1 - exp(-t / tau)), sampled on the same grid.
        world = single_ingredient_world()
        recipe = Recipe(composition={"X": 1.0})
        program = RHProgram(steps=((70.0, 300.0),), sample_dt_s=1.0)
        curve = simulate_curve(recipe, program, world, seed=0)

        sat = 1.0 / (1.0 + math.exp(-(70.0 - 45.0) / 10.0))
        delta = sat * np.array([0.4, -0.1, -0.3])
        t = np.arange(1, 301, dtype=float)
        expected = 0.5 + delta[None, :] * (1.0 - np.exp(-t / 10.0))[:, None]
        assert np.abs(curve.color - expected).max() <= 1e-9

    def test_unknown_ingredient(self):
        world = single_ingredient_world()
        with pytest.raises(UnknownIngredient):
            simulate_curve(Recipe(composition={"Y": 1.0}),
                           RHProgram(steps=((5.0, 10.0),)), world, seed=0)

    def test_deterministic_bytes(self):
        world = default_world(noise_sigma=0.01)
        recipe = reference_recipe(**{BENEFICIAL_COLORANT: 0.5, "67-63-0": 0.5})
        a = simulate_curve(recipe, default_program(), world, seed=42)
        b = simulate_curve(recipe, default_program(), world, seed=42)
        assert np.array_equal(a.color, b.color)
        c = simulate_curve(recipe, default_program(), world, seed=43)
        assert not np.array_equal(a.color, c.color)

    def test_channels_clamped(self):
        world = single_ingredient_world(gain=(5.0, -5.0, 0.0), noise=0.05)
        curve = simulate_curve(Recipe(composition={"X": 1.0}),
                               RHProgram(steps=((5.0, 30.0), (95.0, 60.0), (5.0, 30.0))),
                               world, seed=1)
        assert curve.color.min() >= 0.0 and curve.color.max() <= 1.0

    def test_monotone_in_beneficial_colorant(self):
        world = default_world(noise_sigma=0.0)
        program = default_program()
        amplitudes = []
        base = {cas: 1.0 for cas in REFERENCE_KEYS if cas != BENEFICIAL_COLORANT}
        for t in np.linspace(0.0, 1.0, 100):
            comp = {cas: (1.0 - t) * v / len(base) for cas, v in base.items()}
            comp[BENEFICIAL_COLORANT] = t
            if t == 0.0 and sum(comp.values()) == 0:
                continue
            recipe = normalize_recipe(comp)
            curve = simulate_curve(recipe, program, world, seed=0)
            amplitudes.append(extract_metrics(curve, program).amplitude)
        diffs = np.diff(amplitudes)
        assert np.all(diffs >= -1e-12)


class TestExtractMetrics:
    def test_flat_curve_degenerate_path(self):
        world = default_world(noise_sigma=0.0)
        program = default_program()
        recipe = reference_recipe(**{"67-63-0": 1.0})
        curve = simulate_curve(recipe, program, world, seed=0)
        metrics = extract_metrics(curve, program)
        assert metrics.amplitude == 0.0
        assert metrics.response_time_s == program.total_duration_s
        assert metrics.reversibility == 0.0

    def test_t90_matches_analytic_value(self):
        tau = 14.0
        world = single_ingredient_world(tau0=tau)
        program = RHProgram(steps=((0.0, 60.0), (80.0, 600.0), (0.0, 120.0)),
                            sample_dt_s=1.0)
        curve = simulate_curve(Recipe(composition={"X": 1.0}), program, world, seed=0)
        metrics = extract_metrics(curve, program)
        assert abs(metrics.response_time_s - tau * math.log(10.0)) <= program.sample_dt_s

    def test_perfect_recovery_reversibility_one(self):
        world = single_ingredient_world(tau0=2.0, reversibility=1.0)
        program = RHProgram(steps=((0.0, 60.0), (80.0, 120.0), (0.0, 120.0)))
        curve = simulate_curve(Recipe(composition={"X": 1.0}), program, world, seed=0)
        metrics = extract_metrics(curve, program)
        assert metrics.reversibility == pytest.approx(1.0, abs=1e-6)

    def test_irreversible_film_scores_low_reversibility(self):
        world = single_ingredient_world(tau0=2.0, reversibility=0.2)
        program = RHProgram(steps=((0.0, 60.0), (80.0, 120.0), (0.0, 120.0)))
        curve = simulate_curve(Recipe(composition={"X": 1.0}), program, world, seed=0)
        metrics = extract_metrics(curve, program)
        assert metrics.reversibility == pytest.approx(0.2, abs=1e-3)

    def test_metric_ranges_on_random_recipes(self):
        world = default_world(noise_sigma=0.005)
        program = default_program()
        rng = np.random.default_rng(3)
        for i in range(25):
            raw = rng.dirichlet(np.ones(len(REFERENCE_KEYS)))
            recipe = Recipe.from_vector(REFERENCE_KEYS, raw / raw.sum())
            metrics = extract_metrics(simulate_curve(recipe, program, world, seed=i), program)
            assert 0.0 <= metrics.reversibility <= 1.0
            assert metrics.response_time_s <= program.total_duration_s

    def test_misaligned_curve_rejected(self):
        world = single_ingredient_world()
        program = RHProgram(steps=((0.0, 60.0), (80.0, 60.0), (0.0, 60.0)))
        curve = simulate_curve(Recipe(composition={"X": 1.0}), program, world, seed=0)
        other = RHProgram(steps=((0.0, 30.0), (80.0, 30.0), (0.0, 30.0)))
        with pytest.raises(ValueError):
            extract_metrics(curve, other)


class TestScore:
    def test_reference_ceilings_give_one(self):
        refs = ReferenceScales()
        breakdown = ScoreBreakdown(amplitude=refs.amplitude, response_time_s=0.0,
                                   reversibility=1.0, sensitivity=refs.sensitivity)
        assert score(breakdown, ScoreWeights(), refs) == pytest.approx(1.0)

    def test_flat_curve_scores_zero(self):
        program = default_program()
        breakdown = ScoreBreakdown(amplitude=0.0, response_time_s=program.total_duration_s,
                                   reversibility=0.0, sensitivity=0.0)
        assert score(breakdown) == 0.0

    def test_amplitude_only_projection(self):
        weights = ScoreWeights(amplitude=1.0, response_time=0.0, reversibility=0.0,
                               sensitivity=0.0)
        refs = ReferenceScales(amplitude=0.5)
        breakdown = ScoreBreakdown(amplitude=0.2, response_time_s=1e9,
                                   reversibility=0.0, sensitivity=0.0)
        assert score(breakdown, weights, refs) == pytest.approx(0.4)

    def test_bad_weights(self):
        with pytest.raises(BadWeights):
            score(ScoreBreakdown(0.1, 1.0, 0.5, 0.0), ScoreWeights(amplitude=0.9))
        with pytest.raises(BadWeights):
            score(ScoreBreakdown(0.1, 1.0, 0.5, 0.0), refs=ReferenceScales(amplitude=0.0))

    @settings(max_examples=60)
    @given(
        st.floats(min_value=0, max_value=1), st.floats(min_value=0, max_value=500),
        st.floats(min_value=0, max_value=1), st.floats(min_value=0, max_value=0.02),
        st.floats(min_value=0.001, max_value=1),
    )
    def test_monotone_in_each_metric(self, amp, rt, rev, sens, bump):
        base = ScoreBreakdown(amplitude=amp, response_time_s=rt,
                              reversibility=rev, sensitivity=sens)
        s0 = score(base)
        assert score(ScoreBreakdown(amp + bump, rt, rev, sens)) >= s0
        assert score(ScoreBreakdown(amp, rt + bump * 100, rev, sens)) <= s0
        assert score(ScoreBreakdown(amp, rt, min(rev + bump, 1.0), sens)) >= s0
        assert score(ScoreBreakdown(amp, rt, rev, sens + bump * 0.01)) >= s0
        assert 0.0 <= s0 <= 1.0


def complementary_pair():
    lo = reference_recipe(**{BENEFICIAL_COLORANT: 0.55, "7718-54-9": 0.15,
                             "25322-68-3": 0.10, "9004-57-3": 0.05, "67-63-0": 0.15})
    hi = reference_recipe(**{BENEFICIAL_COLORANT: 0.45, "13462-88-9": 0.25,
                             "10043-52-4": 0.05, "25322-68-3": 0.10, "67-63-0": 0.15})
    return lo, hi


class TestCalibration:
    TRAINING = [float(h) for h in np.arange(5.0, 96.0, 5.0)]
    HELD_OUT = [float(h) for h in np.arange(7.5, 93.0, 5.0)]

    def test_noise_free_rmse_below_half_percent(self):
        world = default_world(noise_sigma=0.0)
        calibration = calibrate_array(complementary_pair(), world, self.TRAINING,
                                      noise_seed=0)
        assert evaluate_rmse(calibration, world, self.HELD_OUT) <= 0.5

    def test_near_training_point_interpolates(self):
        world = default_world(noise_sigma=0.0)
        calibration = calibrate_array(complementary_pair(), world, self.TRAINING,
                                      noise_seed=0)
        assert evaluate_rmse(calibration, world, [50.5]) <= 0.5

    def test_rank_deficient_featureless_array(self):
        world = default_world(noise_sigma=0.0)
        inert = reference_recipe(**{"67-63-0": 1.0})
        with pytest.raises(RankDeficient):
            calibrate_array((inert, inert), world, self.TRAINING, noise_seed=0)

    def test_grid_preconditions(self):
        world = default_world(noise_sigma=0.0)
        with pytest.raises(ValueError):
            calibrate_array(complementary_pair(), world, [10, 20, 30], noise_seed=0)
        with pytest.raises(ValueError):
            calibrate_array(complementary_pair(), world, [2, 20, 40, 60, 80, 95],
                            noise_seed=0)

    def test_eval_grid_must_be_disjoint(self):
        world = default_world(noise_sigma=0.0)
        calibration = calibrate_array(complementary_pair(), world, self.TRAINING,
                                      noise_seed=0)
        with pytest.raises(ValueError):
            evaluate_rmse(calibration, world, [5.0, 33.0])

    def test_steady_state_color_in_range(self):
        world = default_world(noise_sigma=0.0)
        for rh in (5.0, 50.0, 95.0):
            c = steady_state_color(world, complementary_pair()[0], rh)
            assert c.min() >= 0.0 and c.max() <= 1.0


class TestWorldModel:
    def test_round_trip(self):
        world = default_world(noise_sigma=0.004, seed=3)
        again = WorldModel.from_json_dict(world.to_json_dict())
        assert again == world

    def test_default_world_shape(self):
        world = default_world()
        gains = {cas: np.linalg.norm(ing.gains) for cas, ing in world.ingredients.items()}
        strongest = max(gains, key=gains.get)
        assert strongest == BENEFICIAL_COLORANT
        detrimental = [cas for cas, ing in world.ingredients.items()
                       if ing.reversibility < 0.7 or ing.kinetic > 0.5]
        assert len(detrimental) >= 2

    def test_world_for_unknown_ingredients_is_deterministic(self):
        a = world_for_ingredients(["7646-79-9", "64-17-5"], seed=1)
        b = world_for_ingredients(["7646-79-9", "64-17-5"], seed=1)
        assert a == b
        assert a.ingredients["7646-79-9"] == default_world().ingredients["7646-79-9"]

    def test_interaction_keys_validated(self):
        with pytest.raises(UnknownIngredient):
            WorldModel(ingredients={"X": IngredientResponse(gains=(0.1, 0, 0), h50=50,
                                                            steepness=10)},
                       interactions={("X", "Y"): 0.5})
