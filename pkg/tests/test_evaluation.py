import math

import numpy as np
import pytest

from stainkit.errors import (
    DegenerateCohort,
    DegenerateCovariance,
    DegenerateVariance,
    IncompleteConditions,
    InvalidSpec,
    SingleClass,
    TooFewPoints,
)
from stainkit.evaluation import (
    CohortSpec,
    ConditionEffect,
    PredictionTable,
    auc,
    bootstrap_model,
    cohort_stats,
    correlate,
    ellipse_summary,
    model_result,
    synth_cohort,
)
from stainkit.rng import substream
from stainkit.simulation import CONDITIONS, SIMULATED_CONDITIONS

from conftest import pairwise_auc


def table_from_aucs(cond_to_inversions, n_pos=10, n_neg=10, model_id="m0"):
    """Build a one-model table whose condition AUCs are 1 - inv/(P*N) exactly."""
    from stainkit.evaluation import _ladder_scores

    rows = []
    for cond in CONDITIONS:
        inv = cond_to_inversions[cond]
        scores = _ladder_scores(n_pos, n_neg, 1.0 - inv / (n_pos * n_neg))
        for idx in range(n_pos + n_neg):
            label = 1 if idx < n_pos else 0
            rows.append((model_id, f"s{idx:03d}", label, cond, scores[idx]))
    return PredictionTable(rows)


class TestAuc:
    def test_perfect_separation(self):
        assert auc([0, 0, 1, 1], [0.1, 0.2, 0.8, 0.9]) == 1.0

    def test_all_ties(self):
        assert auc([0, 1, 0, 1], [0.5, 0.5, 0.5, 0.5]) == 0.5

    def test_three_of_four_pairs(self):
        # pairs: (0.9>0.8), (0.9>0.3), (0.4<0.8), (0.4>0.3) -> 3/4
        assert auc([1, 0, 1, 0], [0.9, 0.8, 0.4, 0.3]) == 0.75

    def test_single_class_rejected(self):
        with pytest.raises(SingleClass):
            auc([1, 1, 1], [0.1, 0.2, 0.3])

    def test_matches_pairwise_oracle_with_ties(self):
        rng = substream(30, "aucoracle")
        for _ in range(100):
            n = int(rng.integers(4, 40))
            labels = np.zeros(n, dtype=int)
            labels[: int(rng.integers(1, n))] = 1
            rng.shuffle(labels)
            if labels.sum() in (0, n):
                continue
            scores = rng.choice([0.0, 0.25, 0.5, 0.75, 1.0], n)
            assert auc(labels, scores) == pairwise_auc(labels, scores)

    def test_monotone_transform_invariance(self):
        rng = substream(31, "aucmono")
        labels = np.array([0, 1] * 10)
        scores = rng.normal(0, 1, 20)
        base = auc(labels, scores)
        assert auc(labels, 3.0 * scores + 7.0) == base
        assert auc(labels, np.exp(scores)) == base

    def test_complement_under_negation(self):
        rng = substream(32, "aucneg")
        labels = np.array([0] * 7 + [1] * 5)
        scores = rng.permutation(np.linspace(0, 1, 12))  # tie-free
        assert auc(labels, scores) + auc(labels, -scores) == pytest.approx(1.0, abs=1e-15)


class TestModelResult:
    def test_identical_conditions_zero_robustness(self):
        table = table_from_aucs({c: 10 for c in CONDITIONS})
        res = model_result(table.model("m0"))
        assert res.robustness == 0.0
        assert res.best_condition == "reference"
        assert all(res.delta_auc[c] == 0.0 for c in SIMULATED_CONDITIONS)

    def test_minmax_range(self):
        # AUCs {0.88, 0.90, 0.87, 0.91, 0.89} -> robustness 0.04
        inv = {
            "reference": 12,
            "low_intensity": 10,
            "high_intensity": 13,
            "low_similarity": 9,
            "high_similarity": 11,
        }
        res = model_result(table_from_aucs(inv).model("m0"))
        assert res.auc_by_condition["reference"] == pytest.approx(0.88, abs=1e-12)
        assert res.robustness == pytest.approx(0.04, abs=1e-12)
        assert res.best_condition == "low_similarity"
        assert res.delta_auc["low_similarity"] == pytest.approx(0.03, abs=1e-12)

    def test_missing_condition_rejected(self):
        rows = [
            ("m0", f"s{i}", i % 2, cond, float(i))
            for cond in CONDITIONS[:4]
            for i in range(6)
        ]
        table = PredictionTable(rows)
        with pytest.raises(IncompleteConditions):
            model_result(table.model("m0"))

    def test_best_condition_invariant_to_common_shift(self):
        inv = {
            "reference": 12,
            "low_intensity": 10,
            "high_intensity": 13,
            "low_similarity": 9,
            "high_similarity": 11,
        }
        table = table_from_aucs(inv)
        shifted_rows = [
            (m, s, l, c, score + 5.0) for (m, s, l, c, score) in table.to_rows()
        ]
        res_a = model_result(table.model("m0"))
        res_b = model_result(PredictionTable(shifted_rows).model("m0"))
        assert res_a.best_condition == res_b.best_condition
        assert res_a.robustness == res_b.robustness


class TestPredictionTable:
    def test_duplicate_row_rejected(self):
        rows = [("m", "s", 1, "reference", 0.5), ("m", "s", 1, "reference", 0.6)]
        with pytest.raises(ValueError):
            PredictionTable(rows)

    def test_inconsistent_label_rejected(self):
        rows = [("m", "s", 1, "reference", 0.5), ("m", "s", 0, "low_intensity", 0.6)]
        with pytest.raises(ValueError):
            PredictionTable(rows)

    def test_unknown_condition_rejected(self):
        with pytest.raises(ValueError):
            PredictionTable([("m", "s", 1, "mystery", 0.5)])

    def test_inconsistent_slide_coverage_rejected(self):
        rows = [
            ("m", "s1", 1, "reference", 0.5),
            ("m", "s2", 0, "reference", 0.4),
            ("m", "s1", 1, "low_intensity", 0.5),
        ]
        table = PredictionTable(rows)
        with pytest.raises(ValueError):
            table.model("m")

    def test_csv_round_trip(self, tmp_path):
        spec = CohortSpec(n_slides=8, n_pos=4, n_models=2, base_auc=0.85)
        table = synth_cohort(spec, seed=5)
        path = tmp_path / "preds.csv"
        table.to_csv(path)
        back = PredictionTable.from_csv(path)
        assert list(back.to_rows()) == list(table.to_rows())


class TestBootstrap:
    def test_identical_scores_zero_robustness_ci(self):
        table = table_from_aucs({c: 8 for c in CONDITIONS})
        boot = bootstrap_model(table.model("m0"), n_iter=200, seed=1)
        assert np.all(boot.robustness == 0.0)
        assert boot.robustness_ci == (0.0, 0.0)

    def test_bit_identical_reruns(self):
        spec = CohortSpec(
            n_slides=20,
            n_pos=8,
            base_auc=0.85,
            conditions={c: ConditionEffect(noise_sd=0.05) for c in SIMULATED_CONDITIONS},
        )
        preds = synth_cohort(spec, seed=2).model("model000")
        a = bootstrap_model(preds, n_iter=1000, seed=7)
        b = bootstrap_model(preds, n_iter=1000, seed=7)
        np.testing.assert_array_equal(a.reference_auc, b.reference_auc)
        np.testing.assert_array_equal(a.robustness, b.robustness)
        assert a.reference_auc_ci == b.reference_auc_ci
        assert a.redraws == b.redraws

    def test_mean_near_point_estimate(self):
        spec = CohortSpec(n_slides=20, n_pos=10, base_auc=0.8)
        table = synth_cohort(spec, seed=3)
        preds = table.model("model000")
        point = model_result(preds).reference_auc
        boot = bootstrap_model(preds, n_iter=500, seed=4)
        assert abs(float(boot.reference_auc.mean()) - point) <= 0.05

    def test_small_cohort_rejected(self):
        table = table_from_aucs({c: 2 for c in CONDITIONS}, n_pos=4, n_neg=4)
        with pytest.raises(DegenerateCohort):
            bootstrap_model(table.model("m0"), n_iter=10, seed=0)

    def test_order_independent_iterations(self):
        # iteration substreams depend only on (seed, index): a shorter run is
        # a prefix of a longer one
        spec = CohortSpec(n_slides=16, n_pos=8, base_auc=0.9)
        preds = synth_cohort(spec, seed=6).model("model000")
        short = bootstrap_model(preds, n_iter=50, seed=9)
        long = bootstrap_model(preds, n_iter=200, seed=9)
        np.testing.assert_array_equal(short.reference_auc, long.reference_auc[:50])


class TestCorrelate:
    def test_fisher_ci_anchor_n103(self):
        # exact r = 0 by symmetry: y = (x - mean)^2 with x symmetric
        x = np.arange(103, dtype=np.float64)
        y = (x - x.mean()) ** 2
        res = correlate(x, y)
        assert res.r == pytest.approx(0.0, abs=1e-15)
        assert res.ci[0] == pytest.approx(-0.194, abs=1e-3)
        assert res.ci[1] == pytest.approx(+0.194, abs=1e-3)
        assert res.n == 103

    def test_perfect_correlation_degenerate_ci(self):
        x = np.arange(10, dtype=np.float64)
        res = correlate(x, x)
        assert res.r == 1.0
        assert res.ci == (1.0, 1.0)
        assert res.degenerate

    def test_constant_input_rejected(self):
        with pytest.raises(DegenerateVariance):
            correlate([1.0, 2.0, 3.0, 4.0], [5.0, 5.0, 5.0, 5.0])

    def test_small_n_returns_r_without_ci(self):
        res = correlate([1.0, 2.0, 3.0], [3.0, 1.0, 2.0])
        assert res.ci is None
        assert res.n == 3

    def test_min_n_ci_threshold_configurable(self):
        x = np.arange(5, dtype=np.float64)
        y = np.array([1.0, 3.0, 2.0, 5.0, 4.0])
        assert correlate(x, y, min_n_ci=6).ci is None
        assert correlate(x, y, min_n_ci=4).ci is not None

    def test_too_few_points(self):
        with pytest.raises(TooFewPoints):
            correlate([1.0], [2.0])


class TestEllipse:
    def test_isotropic_unit_variance_circle(self):
        a = math.sqrt(1.5)  # sample variance of (+-a, 0), (0, +-a) is 1
        pts = [(a, 0.0), (-a, 0.0), (0.0, a), (0.0, -a)]
        res = ellipse_summary(pts)
        assert res.center == (0.0, 0.0)
        assert res.semi_axes[0] == pytest.approx(math.sqrt(5.991), abs=1e-9)
        assert res.semi_axes[1] == pytest.approx(math.sqrt(5.991), abs=1e-9)
        assert res.semi_axes[0] == pytest.approx(2.448, abs=1e-3)

    def test_identical_points_degenerate(self):
        with pytest.raises(DegenerateCovariance):
            ellipse_summary([(1.0, 2.0)] * 5)

    def test_collinear_points_degenerate(self):
        pts = [(t, 2.0 * t) for t in np.linspace(0, 1, 10)]
        with pytest.raises(DegenerateCovariance):
            ellipse_summary(pts)

    def test_recovers_known_covariance(self):
        # sample-covariance oracle: seeded Gaussian cloud, known sigma
        rng = substream(33, "ellipse")
        cov = np.array([[0.04, 0.015], [0.015, 0.01]])
        pts = rng.multivariate_normal([0.8, 0.05], cov, size=1000)
        res = ellipse_summary(pts)
        want = np.sqrt(np.linalg.eigvalsh(cov) * 5.991)  # ascending
        assert res.semi_axes[0] == pytest.approx(want[1], rel=0.10)
        assert res.semi_axes[1] == pytest.approx(want[0], rel=0.10)

    def test_too_few_points(self):
        with pytest.raises(TooFewPoints):
            ellipse_summary([(0.0, 0.0), (1.0, 1.0)])


class TestSynthCohort:
    def test_zero_shift_zero_robustness(self):
        spec = CohortSpec(n_slides=14, n_pos=6, n_models=3, base_auc=0.82)
        table = synth_cohort(spec, seed=10)
        for model_id in table.models:
            res = model_result(table.model(model_id))
            assert res.robustness == 0.0

    def test_margin_swap_exact_delta(self):
        # dyadic n_pos * n_neg keeps the closed form exact in floats
        k = 3
        spec = CohortSpec(
            n_slides=16,
            n_pos=8,
            base_auc=1.0,
            conditions={"low_intensity": ConditionEffect(margin_swaps=k)},
        )
        table = synth_cohort(spec, seed=11)
        res = model_result(table.model("model000"))
        assert res.delta_auc["low_intensity"] == -k / 64.0
        assert res.delta_auc["high_intensity"] == 0.0
        # the oracle agrees pair by pair
        preds = table.model("model000")
        assert res.auc_by_condition["low_intensity"] == pairwise_auc(
            preds.labels, preds.scores["low_intensity"]
        )

    def test_base_auc_hits_target_exactly(self):
        for target in (1.0, 0.9, 0.75, 0.5):
            spec = CohortSpec(n_slides=20, n_pos=10, base_auc=target)
            res = model_result(synth_cohort(spec, seed=12).model("model000"))
            want = 1.0 - round((1.0 - target) * 100) / 100.0
            assert res.reference_auc == pytest.approx(want, abs=1e-12)

    def test_deterministic(self):
        spec = CohortSpec(
            n_slides=12,
            n_pos=5,
            n_models=2,
            conditions={"high_intensity": ConditionEffect(noise_sd=0.1)},
        )
        a = list(synth_cohort(spec, seed=13).to_rows())
        b = list(synth_cohort(spec, seed=13).to_rows())
        assert a == b

    def test_auc_step_spreads_models(self):
        spec = CohortSpec(n_slides=20, n_pos=10, n_models=3, base_auc=0.95, auc_step=0.05)
        table = synth_cohort(spec, seed=14)
        refs = [model_result(table.model(m)).reference_auc for m in table.models]
        assert refs[0] > refs[1] > refs[2]

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"n_slides": 5, "n_pos": 0},
            {"n_slides": 5, "n_pos": 5},
            {"n_slides": 10, "n_pos": 4, "base_auc": 1.2},
            {"n_slides": 10, "n_pos": 4, "n_models": 0},
            {"n_slides": 10, "n_pos": 4, "conditions": {"reference": ConditionEffect()}},
            {
                "n_slides": 10,
                "n_pos": 4,
                "conditions": {"low_intensity": ConditionEffect(margin_swaps=5)},
            },
            {
                "n_slides": 10,
                "n_pos": 4,
                "base_auc": 0.9,
                "conditions": {"low_intensity": ConditionEffect(margin_swaps=2)},
            },
        ],
    )
    def test_invalid_specs(self, kwargs):
        with pytest.raises(InvalidSpec):
            synth_cohort(CohortSpec(**kwargs), seed=0)


class TestCohortStats:
    def make_results(self, inversion_sets):
        results = []
        for i, inv in enumerate(inversion_sets):
            table = table_from_aucs(inv, model_id=f"m{i}")
            results.append(model_result(table.model(f"m{i}")))
        return results

    def test_best_counts_all_reference(self):
        inv = {
            "reference": 5,
            "low_intensity": 8,
            "high_intensity": 9,
            "low_similarity": 7,
            "high_similarity": 6,
        }
        report = cohort_stats(self.make_results([inv] * 3), boot_seed=0, n_boot=100)
        assert report.conditions["reference"].best_model_count == 3
        for cond in SIMULATED_CONDITIONS:
            assert report.conditions[cond].best_model_count == 0

    def test_tie_multicounting(self):
        inv = {c: 5 for c in CONDITIONS}
        report = cohort_stats(self.make_results([inv] * 2), boot_seed=0, n_boot=100)
        total = sum(report.conditions[c].best_model_count for c in CONDITIONS)
        assert total == 2 * 5  # every condition ties at the max for both models

    def test_median_and_worst_case(self):
        # deltas for low_intensity across models: -0.01, -0.005, +0.002
        # (25x40 cohort, so an inversion step is exactly 1/1000 of AUC)
        results = []
        for i, extra in enumerate((10, 5, -2)):
            inv = {
                "reference": 20,
                "low_intensity": 20 + extra,
                "high_intensity": 20,
                "low_similarity": 20,
                "high_similarity": 20,
            }
            table = table_from_aucs(inv, n_pos=25, n_neg=40, model_id=f"m{i}")
            results.append(model_result(table.model(f"m{i}")))
        report = cohort_stats(results, boot_seed=1, n_boot=200)
        s = report.conditions["low_intensity"]
        assert s.median_delta_auc == pytest.approx(-0.005, abs=1e-12)
        assert s.worst_case_decrease == pytest.approx(-0.010, abs=1e-12)
        assert s.delta_ci[0] <= s.median_delta_auc <= s.delta_ci[1]

    def test_flags_thresholds(self):
        # reference AUC 0.92 with range 0.02: high-performing and robust
        inv_good = {
            "reference": 8,
            "low_intensity": 9,
            "high_intensity": 10,
            "low_similarity": 8,
            "high_similarity": 8,
        }
        inv_bad = {
            "reference": 15,
            "low_intensity": 20,
            "high_intensity": 9,
            "low_similarity": 15,
            "high_similarity": 15,
        }
        results = self.make_results([inv_good, inv_bad])
        report = cohort_stats(results, boot_seed=2, n_boot=100)
        assert report.flags["m0"].high_performing  # 0.92 > 0.90
        assert report.flags["m0"].highly_robust  # 0.02 < 0.03
        assert not report.flags["m1"].high_performing  # 0.85
        assert not report.flags["m1"].highly_robust  # 0.11

    def test_worst_case_bounded_by_median(self):
        rng = substream(34, "cohort")
        sets = []
        for _ in range(6):
            sets.append(
                {c: int(rng.integers(5, 40)) for c in CONDITIONS}
            )
        report = cohort_stats(self.make_results(sets), boot_seed=3, n_boot=100)
        for cond in SIMULATED_CONDITIONS:
            s = report.conditions[cond]
            assert s.worst_case_decrease <= s.median_delta_auc

    def test_correlation_included_and_bootstraps(self):
        spec = CohortSpec(
            n_slides=24,
            n_pos=12,
            n_models=5,
            base_auc=0.95,
            auc_step=0.02,
            conditions={c: ConditionEffect(noise_sd=0.03) for c in SIMULATED_CONDITIONS},
        )
        table = synth_cohort(spec, seed=15)
        results = []
        boots = {}
        for model_id in table.models:
            preds = table.model(model_id)
            results.append(model_result(preds))
            boots[model_id] = bootstrap_model(preds, n_iter=200, seed=16)
        report = cohort_stats(results, boot_seed=16, n_boot=200, bootstraps=boots)
        assert report.performance_robustness is not None
        assert report.performance_robustness.n == 5
        assert set(report.bootstrap) == set(table.models)
        for summary in report.bootstrap.values():
            assert 0.0 <= summary.mean_point[0] <= 1.0
            assert summary.ellipse is None or summary.ellipse.semi_axes[0] > 0

    def test_degenerate_correlation_noted_not_fatal(self):
        inv = {c: 5 for c in CONDITIONS}
        report = cohort_stats(self.make_results([inv] * 3), boot_seed=4, n_boot=50)
        assert report.performance_robustness is None
        assert any("correlation" in n for n in report.notes)
