import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.special import expit

from biasaudit.errors import PropensityError
from biasaudit.matching import (
    MatchedSample,
    balance_report,
    estimate_propensity,
    export_pairs,
    greedy_match,
    match_contrast,
    smd,
)

from helpers import build_cohort


def confounded_cohort(seed: int, n: int = 1200, effect: float = 1.2):
    """Two-level cohort where covariate x shifts group membership."""
    rng = np.random.default_rng(seed)
    x = rng.normal(0.0, 1.0, n)
    z = rng.uniform(0, 1, n) < expit(effect * x)
    groups = np.where(z, "A", "B")
    return build_cohort(
        labels=[i % 2 for i in range(n)],
        scores=[0.5] * n,
        protected={"g": groups.tolist()},
        covariates={"x": x.tolist()},
    )


match_case = st.integers(2, 40).flatmap(
    lambda n: st.tuples(
        st.lists(st.floats(0.01, 0.99), min_size=n, max_size=n),
        st.lists(st.booleans(), min_size=n, max_size=n),
    )
)


class TestEstimatePropensity:
    def test_unrelated_covariates_give_flat_propensity(self):
        rng = np.random.default_rng(505)
        n = 2000
        z = rng.uniform(0, 1, n) < 0.3
        groups = np.where(z, "A", "B")
        x = rng.normal(0, 1, n)  # independent of membership
        cohort = build_cohort(
            labels=[i % 2 for i in range(n)],
            scores=[0.5] * n,
            protected={"g": groups.tolist()},
            covariates={"x": x.tolist()},
        )
        result = estimate_propensity(cohort, "g", "A", "B", ["x"])
        treated_fraction = result.treated.mean()
        assert np.all(np.abs(result.propensities - treated_fraction) < 0.05)

    def test_deterministic_confounder_orders_propensity(self):
        x = np.linspace(-2, 2, 50)
        z = x > 0
        groups = np.where(z, "A", "B")
        cohort = build_cohort(
            labels=[i % 2 for i in range(50)],
            scores=[0.5] * 50,
            protected={"g": groups.tolist()},
            covariates={"x": x.tolist()},
        )
        result = estimate_propensity(cohort, "g", "A", "B", ["x"], ridge=1.0)
        e_sorted_by_x = result.propensities[np.argsort(x[result.indices])]
        assert np.all(np.diff(e_sorted_by_x) > 0)

    def test_absent_level_rejected(self):
        cohort = build_cohort(
            labels=[0, 1, 0, 1],
            scores=[0.5] * 4,
            protected={"g": ["A", "A", "B", "B"]},
            covariates={"x": [1.0, 2.0, 3.0, 4.0]},
        )
        with pytest.raises(PropensityError, match="at least two records per level"):
            estimate_propensity(cohort, "g", "C", "B", ["x"])

    def test_protected_attribute_as_covariate_rejected(self):
        cohort = confounded_cohort(1, n=40)
        with pytest.raises(PropensityError, match="must exclude protected attributes"):
            estimate_propensity(cohort, "g", "A", "B", ["x", "g"])

    def test_needs_a_covariate(self):
        cohort = confounded_cohort(2, n=40)
        with pytest.raises(PropensityError, match="at least one covariate"):
            estimate_propensity(cohort, "g", "A", "B", [])

    def test_identical_levels_rejected(self):
        cohort = confounded_cohort(3, n=40)
        with pytest.raises(PropensityError, match="identical"):
            estimate_propensity(cohort, "g", "A", "A", ["x"])


class TestGreedyMatch:
    def test_distance_tie_goes_to_lower_control_index(self):
        # logits are exactly {0, -log 3, +log 3}: both controls are equally
        # far from the single treated record, down to the last bit
        props = [0.5, 0.25, 0.75]
        l_low = np.log(0.25) - np.log1p(-0.25)
        l_high = np.log(0.75) - np.log1p(-0.75)
        assert abs(l_low) == abs(l_high)  # the tie is real, not approximate
        sample = greedy_match(props, [True, False, False], caliper_multiplier=None)
        (pair,) = sample.pairs
        assert (pair.treated, pair.control) == (0, 1)
        assert pair.distance == abs(l_low)

    def test_treated_matched_in_descending_propensity_order(self):
        props = [0.9, 0.5, 0.55, 0.88]
        flags = [True, True, False, False]
        sample = greedy_match(props, flags, caliper_multiplier=None)
        assert [(p.treated, p.control) for p in sample.pairs] == [(0, 3), (1, 2)]
        assert sample.unmatched_treated == 0

    def test_caliper_excludes_distant_treated(self):
        props = [0.99, 0.5, 0.51]
        sample = greedy_match(props, [True, False, False], caliper_multiplier=0.2)
        assert sample.pairs == ()
        assert sample.unmatched_treated == 1
        assert sample.caliper is not None

    def test_zero_spread_disables_caliper_with_warning(self):
        with pytest.warns(UserWarning, match="caliper disabled"):
            sample = greedy_match([0.5, 0.5], [True, False], caliper_multiplier=0.2)
        assert sample.caliper is None
        assert len(sample.pairs) == 1
        assert sample.pairs[0].distance == 0.0

    def test_without_replacement_leaves_extra_treated_unmatched(self):
        props = [0.6, 0.55, 0.5]
        sample = greedy_match(props, [True, True, False], caliper_multiplier=None)
        assert len(sample.pairs) == 1
        assert sample.pairs[0].treated == 0  # higher propensity chooses first
        assert sample.unmatched_treated == 1

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ValueError, match="equal-length"):
            greedy_match([0.5, 0.6], [True])

    @given(match_case)
    def test_no_record_reuse(self, case):
        props, flags = case
        sample = greedy_match(props, flags, caliper_multiplier=None)
        used = [p.treated for p in sample.pairs] + [p.control for p in sample.pairs]
        assert len(used) == len(set(used))
        assert len(sample.pairs) + sample.unmatched_treated == sum(flags)

    @given(match_case)
    def test_caliper_soundness(self, case):
        props, flags = case
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")  # zero-spread draws disable the caliper
            sample = greedy_match(props, flags, caliper_multiplier=0.3)
        if sample.caliper is None:
            return
        for p in sample.pairs:
            assert p.distance <= sample.caliper

    @given(match_case)
    def test_deterministic(self, case):
        props, flags = case
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            assert greedy_match(props, flags, 0.25) == greedy_match(props, flags, 0.25)


class TestSmd:
    def test_identical_groups_zero(self):
        values = [1.0, 2.0, 3.0, 1.0, 2.0, 3.0]
        assert smd(values, [0, 1, 2], [3, 4, 5]) == 0.0

    def test_unit_shift_unit_variance(self):
        values = [0.0, 1.0, 2.0, -1.0, 0.0, 1.0]
        assert smd(values, [0, 1, 2], [3, 4, 5]) == 1.0

    def test_constant_everywhere_undefined(self):
        assert smd([5.0] * 6, [0, 1, 2], [3, 4, 5]) is None

    def test_asymmetric_formula(self):
        values = [0.0, 2.0, 10.0, 11.0]
        expected = abs(1.0 - 10.5) / np.sqrt((2.0 + 0.5) / 2)
        assert smd(values, [0, 1], [2, 3]) == pytest.approx(expected, rel=1e-12)

    def test_missing_values_ignored(self):
        values = [0.0, 2.0, np.nan, 10.0, 11.0, np.nan]
        assert smd(values, [0, 1, 2], [3, 4, 5]) == smd(
            [0.0, 2.0, 10.0, 11.0], [0, 1], [2, 3]
        )

    def test_too_few_observed_undefined(self):
        assert smd([1.0, np.nan, 2.0, 3.0], [0, 1], [2, 3]) is None

    def test_symmetric_in_groups(self):
        values = [0.1, 0.9, 0.4, 0.7, 0.2, 0.6]
        assert smd(values, [0, 1, 2], [3, 4, 5]) == smd(values, [3, 4, 5], [0, 1, 2])


class TestMatchContrast:
    def test_smaller_level_is_treated(self):
        cohort = build_cohort(
            labels=[0, 1] * 10,
            scores=[0.5] * 20,
            protected={"g": ["A"] * 6 + ["B"] * 14},
            covariates={"x": list(np.linspace(-1, 1, 20))},
        )
        sample, prop = match_contrast(cohort, "g", "A", "B", ["x"])
        assert sample.treated_level == "A"
        assert prop.treated_level == "A"
        sample2, _ = match_contrast(cohort, "g", "B", "A", ["x"])
        assert sample2.treated_level == "A"

    def test_equal_sizes_tie_toward_first_argument(self):
        cohort = build_cohort(
            labels=[0, 1] * 10,
            scores=[0.5] * 20,
            protected={"g": ["A"] * 10 + ["B"] * 10},
            covariates={"x": list(np.linspace(-1, 1, 20))},
        )
        sample, _ = match_contrast(cohort, "g", "B", "A", ["x"])
        assert sample.treated_level == "B"

    def test_pair_indices_are_cohort_positions(self):
        cohort = confounded_cohort(77, n=300)
        sample, _ = match_contrast(cohort, "g", "A", "B", ["x"])
        values = [rec.protected["g"] for rec in cohort.records]
        for p in sample.pairs:
            assert values[p.treated] == sample.treated_level
            assert values[p.control] == sample.control_level

    def test_subset_restricts_matching(self):
        cohort = confounded_cohort(78, n=300)
        sample, _ = match_contrast(cohort, "g", "A", "B", ["x"], subset=range(150))
        for p in sample.pairs:
            assert p.treated < 150 and p.control < 150


class TestBalanceReport:
    def test_matching_repairs_confounded_balance(self):
        cohort = confounded_cohort(424)
        sample, _ = match_contrast(cohort, "g", "A", "B", ["x"])
        bal = balance_report(cohort, sample, ["x"])
        (row,) = bal.covariates
        assert row.smd_before > 0.2  # the confounding is material
        assert row.smd_after < row.smd_before

    def test_unconfounded_balance_stays_good(self):
        rng = np.random.default_rng(427)
        n = 1200
        z = rng.uniform(0, 1, n) < 0.4
        x = rng.normal(0, 1, n)
        cohort = build_cohort(
            labels=[i % 2 for i in range(n)],
            scores=[0.5] * n,
            protected={"g": np.where(z, "A", "B").tolist()},
            covariates={"x": x.tolist()},
        )
        sample, _ = match_contrast(cohort, "g", "A", "B", ["x"])
        bal = balance_report(cohort, sample, ["x"])
        (row,) = bal.covariates
        assert row.smd_before < 0.1
        assert row.smd_after < 0.1

    def test_min_n_threshold(self):
        cohort = confounded_cohort(426, n=80)
        sample, _ = match_contrast(cohort, "g", "A", "B", ["x"], caliper_multiplier=None)
        bal = balance_report(cohort, sample, ["x"], min_matched_n=100)
        assert bal.matched_n == 2 * len(sample.pairs)
        assert bal.matched_n < 100
        assert not bal.passes_min_n
        bal_ok = balance_report(cohort, sample, ["x"], min_matched_n=10)
        assert bal_ok.passes_min_n

    def test_categorical_covariates_expand_per_level(self):
        n = 60
        rng = np.random.default_rng(9)
        cohort = build_cohort(
            labels=[i % 2 for i in range(n)],
            scores=[0.5] * n,
            protected={"g": (["A"] * 30 + ["B"] * 30)},
            covariates={
                "x": rng.normal(0, 1, n).tolist(),
                "unit": rng.choice(["icu", "ward"], n).tolist(),
            },
            covariate_kinds={"unit": "categorical"},
        )
        sample, _ = match_contrast(cohort, "g", "A", "B", ["x"])
        bal = balance_report(cohort, sample, ["x", "unit"])
        names = [c.name for c in bal.covariates]
        assert names[0] == "x"
        assert "unit=icu" in names and "unit=ward" in names

    def test_unknown_covariate_rejected(self):
        cohort = confounded_cohort(11, n=60)
        sample, _ = match_contrast(cohort, "g", "A", "B", ["x"])
        with pytest.raises(PropensityError, match="unknown covariate"):
            balance_report(cohort, sample, ["ghost"])

    def test_unlabelled_sample_rejected(self):
        cohort = confounded_cohort(12, n=60)
        bare = MatchedSample(pairs=(), unmatched_treated=0, caliper=None)
        with pytest.raises(ValueError, match="match_contrast"):
            balance_report(cohort, bare, ["x"])


class TestExportPairs:
    def test_writes_ids_and_distances(self, tmp_path):
        cohort = confounded_cohort(13, n=120)
        sample, _ = match_contrast(cohort, "g", "A", "B", ["x"])
        path = tmp_path / "pairs.csv"
        export_pairs(cohort, sample, path)
        lines = path.read_text().splitlines()
        assert lines[0] == "treated_id,control_id,distance"
        assert len(lines) == 1 + len(sample.pairs)
        first = lines[1].split(",")
        assert first[0] == cohort.records[sample.pairs[0].treated].id
        assert float(first[2]) == sample.pairs[0].distance
