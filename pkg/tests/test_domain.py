import json
import math

import pytest
from hypothesis import given, strategies as st

from chromalab.domain import (
    Recipe,
    RHProgram,
    Role,
    ScoreBreakdown,
    SubstanceRecord,
    fraction9,
    normalize_recipe,
    quantize_recipe,
)
from chromalab.errors import AllZero

KEYS8 = [f"k{i}" for i in range(8)]


class TestNormalizeRecipe:
    def test_equal_entries_split_evenly(self):
        recipe = normalize_recipe({k: 1.0 for k in KEYS8})
        assert all(v == pytest.approx(0.125, abs=1e-12) for v in recipe.composition.values())

    def test_single_component(self):
        raw = {k: 0.0 for k in KEYS8}
        raw[KEYS8[0]] = 2.0
        recipe = normalize_recipe(raw)
        assert recipe.composition[KEYS8[0]] == 1.0
        assert sum(recipe.composition.values()) == pytest.approx(1.0, abs=1e-9)

    def test_all_zeros_raises(self):
        with pytest.raises(AllZero):
            normalize_recipe({k: 0.0 for k in KEYS8})

    def test_negative_entry_rejected(self):
        with pytest.raises(ValueError):
            normalize_recipe({"a": 1.0, "b": -0.1})

    @given(st.lists(st.floats(min_value=0.0, max_value=1e6), min_size=2, max_size=8)
           .filter(lambda xs: sum(xs) > 1e-9))
    def test_idempotent(self, values):
        raw = {f"k{i}": v for i, v in enumerate(values)}
        once = normalize_recipe(raw)
        twice = normalize_recipe(once.composition)
        for k in raw:
            assert twice.composition[k] == pytest.approx(once.composition[k], abs=1e-12)

    @given(
        st.lists(st.floats(min_value=0.0, max_value=1e3), min_size=2, max_size=8)
        .filter(lambda xs: sum(xs) > 1e-6),
        st.floats(min_value=1e-3, max_value=1e3),
    )
    def test_scale_invariant(self, values, c):
        raw = {f"k{i}": v for i, v in enumerate(values)}
        scaled = {k: c * v for k, v in raw.items()}
        a = normalize_recipe(raw)
        b = normalize_recipe(scaled)
        for k in raw:
            assert b.composition[k] == pytest.approx(a.composition[k], abs=1e-12)


class TestRecipe:
    def test_rejects_bad_sum(self):
        with pytest.raises(ValueError):
            Recipe(composition={"a": 0.5, "b": 0.4})

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            Recipe(composition={"a": 1.5, "b": -0.5})

    def test_vector_round_trip(self):
        recipe = Recipe(composition={"a": 0.25, "b": 0.75})
        assert list(recipe.to_vector()) == [0.25, 0.75]
        assert Recipe.from_vector(["a", "b"], [0.25, 0.75]) == recipe

    @given(st.lists(st.floats(min_value=1e-6, max_value=1.0), min_size=2, max_size=8))
    def test_quantize_is_stable_through_json(self, values):
        recipe = normalize_recipe({f"k{i}": v for i, v in enumerate(values)})
        q = quantize_recipe(recipe)
        assert sum(q.composition.values()) == pytest.approx(1.0, abs=1e-9)
        wire = json.dumps(q.to_json_dict())
        back = Recipe.from_json_dict(json.loads(wire))
        assert back == q
        assert quantize_recipe(q) == q  # idempotent

    def test_quantize_single_component(self):
        q = quantize_recipe(Recipe(composition={"a": 1.0, "b": 0.0}))
        assert q.composition == {"a": 1.0, "b": 0.0}


class TestRHProgram:
    def test_first_and_last_must_be_baseline(self):
        with pytest.raises(ValueError):
            RHProgram(steps=((20.0, 60.0), (5.0, 60.0)))
        with pytest.raises(ValueError):
            RHProgram(steps=((5.0, 60.0), (20.0, 60.0)))

    def test_single_step_is_trivially_valid(self):
        program = RHProgram(steps=((70.0, 120.0),), sample_dt_s=1.0)
        assert program.n_samples == 120

    def test_zero_duration_steps_allowed(self):
        program = RHProgram(steps=((5.0, 60.0), (95.0, 60.0), (5.0, 60.0), (5.0, 0.0)))
        assert program.n_samples == 180

    def test_sample_count_floors(self):
        program = RHProgram(steps=((5.0, 10.0), (95.0, 13.0), (5.0, 10.0)), sample_dt_s=2.0)
        assert program.n_samples == 16  # floor(33 / 2)

    def test_rh_bounds(self):
        with pytest.raises(ValueError):
            RHProgram(steps=((5.0, 60.0), (105.0, 60.0), (5.0, 60.0)))


class TestSerialization:
    def test_fraction9_nine_significant_digits(self):
        assert fraction9(1 / 3) == 0.333333333
        assert fraction9(0.000123456789123) == 0.000123456789
        assert fraction9(0.9) == 0.9

    def test_substance_record_round_trip(self):
        record = SubstanceRecord(cas="7646-79-9", name="Cobalt(II) chloride",
                                 role=Role.COLORANT, purpose="hygrochromic salt",
                                 relevance=0.9, sources=("a001", "a007"))
        wire = record.to_json_dict()
        assert wire["role"] == "colorant"
        assert SubstanceRecord.from_json_dict(wire) == record

    def test_substance_record_validates_relevance(self):
        with pytest.raises(ValueError):
            SubstanceRecord(cas="7646-79-9", name="x", role=Role.COLORANT,
                            purpose="p", relevance=1.2)

    def test_score_breakdown_round_trip_and_bounds(self):
        b = ScoreBreakdown(amplitude=0.5, response_time_s=23.0, reversibility=0.9,
                           sensitivity=0.004)
        assert b.score is None
        scored = b.with_score(0.75)
        assert ScoreBreakdown.from_json_dict(scored.to_json_dict()) == scored
        with pytest.raises(ValueError):
            ScoreBreakdown(amplitude=math.inf, response_time_s=1.0,
                           reversibility=0.5, sensitivity=0.0)
        with pytest.raises(ValueError):
            b.with_score(1.5)

    def test_role_tie_break_order(self):
        ranks = [Role.COLORANT, Role.ADDITIVE, Role.SOLVENT, Role.REACTOR, Role.ADJUSTER]
        assert [r.rank for r in ranks] == [0, 1, 2, 3, 4]
