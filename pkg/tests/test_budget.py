from __future__ import annotations

import math

import pytest

from omnifilter.annotation import LabelFormat
from omnifilter.budget import (BUILTIN_STATS, TRAIN_SIZES, DatasetStats,
                               MixturePolicy, cost_per_image, cost_table,
                               enumerate_policies, policy_cost)

# Published per-image costs (seconds), row order:
# tags_u, tags_k, points_u, points_k, boxes_ec, boxes_u, fully
PUBLISHED_COSTS = {
    "bees": (None, 6.1, 6.4, 6.4, 50.0, 249.9, 249.9),
    "crowdhuman": (None, 19.4, 20.4, 20.4, 158.5, 792.4, 792.4),
    "voc": (20.0, 21.0, 2.2, 22.9, 16.8, 84.0, 102.6),
    "coco": (80.0, 84.2, 6.9, 88.7, 53.9, 269.5, 346.0),
    "objects365": (365.0, 375.8, 14.2, 381.7, 110.6, 553.0, 913.0),
}
COST_COLUMNS = (LabelFormat.TAGS_U, LabelFormat.TAGS_K, LabelFormat.POINTS_U,
                LabelFormat.POINTS_K, LabelFormat.BOXES_EC, LabelFormat.BOXES_U,
                LabelFormat.FULLY)


class TestDatasetStats:
    def test_builtin_profiles(self):
        assert set(BUILTIN_STATS) == set(PUBLISHED_COSTS)
        coco = BUILTIN_STATS["coco"]
        assert (coco.num_classes, coco.avg_classes_per_image,
                coco.avg_instances_per_image) == (80, 3.5, 7.7)
        assert BUILTIN_STATS["bees"].single_class
        assert not BUILTIN_STATS["voc"].single_class

    def test_train_sizes(self):
        assert TRAIN_SIZES == {"voc": 22136, "coco": 118287, "objects365": 93455,
                               "bees": 3596, "crowdhuman": 15000}

    def test_validation(self):
        with pytest.raises(ValueError):
            DatasetStats("x", 0, 1.0, 1.0)
        with pytest.raises(ValueError):
            DatasetStats("x", 5, 6.0, 7.0)  # C_avg > C
        with pytest.raises(ValueError):
            DatasetStats("x", 5, 2.0, 1.0)  # I_avg < C_avg


class TestCostPerImage:
    @pytest.mark.parametrize("name", sorted(PUBLISHED_COSTS))
    def test_published_table_reproduced(self, name):
        stats = BUILTIN_STATS[name]
        for fmt, want in zip(COST_COLUMNS, PUBLISHED_COSTS[name]):
            if want is None:
                with pytest.raises(ValueError):
                    cost_per_image(stats, fmt)
            else:
                assert cost_per_image(stats, fmt) == pytest.approx(want, abs=0.05), \
                    f"{name}/{fmt.value}"

    def test_spotchecks(self):
        assert cost_per_image(BUILTIN_STATS["coco"], LabelFormat.POINTS_K) == \
            pytest.approx(88.68, abs=1e-9)
        assert cost_per_image(BUILTIN_STATS["objects365"], LabelFormat.FULLY) == \
            pytest.approx(913.0, abs=1e-9)
        assert cost_per_image(BUILTIN_STATS["bees"], LabelFormat.TAGS_K) == \
            pytest.approx(0.95 * 0.9 * 7.14, abs=1e-12)

    def test_none_costs_nothing(self):
        for stats in BUILTIN_STATS.values():
            assert cost_per_image(stats, LabelFormat.NONE) == 0.0

    def test_single_class_equivalences(self):
        for name in ("bees", "crowdhuman"):
            stats = BUILTIN_STATS[name]
            assert cost_per_image(stats, LabelFormat.POINTS_K) == \
                cost_per_image(stats, LabelFormat.POINTS_U)
            assert cost_per_image(stats, LabelFormat.FULLY) == \
                cost_per_image(stats, LabelFormat.BOXES_U)

    def test_cost_table_marks_undefined(self):
        table = cost_table(BUILTIN_STATS["bees"])
        assert table[LabelFormat.TAGS_U] is None
        assert table[LabelFormat.NONE] == 0.0
        assert len(table) == 8

    def test_accepts_format_strings(self):
        assert cost_per_image(BUILTIN_STATS["voc"], "boxes_u") == pytest.approx(84.0)


class TestMixturePolicy:
    def test_fraction_sum_enforced(self):
        with pytest.raises(ValueError, match="sum to 1"):
            MixturePolicy(fractions={LabelFormat.FULLY: 0.5}, dataset_size=10)

    def test_fraction_range(self):
        with pytest.raises(ValueError):
            MixturePolicy(fractions={LabelFormat.FULLY: 1.5, LabelFormat.NONE: -0.5},
                          dataset_size=10)

    def test_size_positive(self):
        with pytest.raises(ValueError):
            MixturePolicy(fractions={LabelFormat.NONE: 1.0}, dataset_size=0)

    def test_string_keys_coerced(self):
        p = MixturePolicy(fractions={"fully": 0.25, "none": 0.75}, dataset_size=4)
        assert p.fraction(LabelFormat.FULLY) == 0.25
        assert p.fraction("tags_k") == 0.0


class TestPolicyCost:
    def test_worked_example(self):
        # 5% fully / 80% counted tags / 15% quick boxes on the bee dataset
        policy = MixturePolicy(fractions={LabelFormat.FULLY: 0.05,
                                          LabelFormat.TAGS_K: 0.80,
                                          LabelFormat.BOXES_EC: 0.15},
                               dataset_size=3596)
        cost = policy_cost(policy, BUILTIN_STATS["bees"])
        assert cost == pytest.approx(24.8481, abs=1e-3)
        assert round(cost, 2) == 24.85

    def test_all_none_free(self):
        policy = MixturePolicy(fractions={LabelFormat.NONE: 1.0}, dataset_size=10**6)
        assert policy_cost(policy, BUILTIN_STATS["coco"]) == 0.0

    def test_linear_in_dataset_size(self):
        fr = {LabelFormat.FULLY: 0.5, LabelFormat.NONE: 0.5}
        small = policy_cost(MixturePolicy(fractions=fr, dataset_size=100),
                            BUILTIN_STATS["voc"])
        big = policy_cost(MixturePolicy(fractions=fr, dataset_size=200),
                          BUILTIN_STATS["voc"])
        assert big == pytest.approx(2 * small, rel=1e-12)

    def test_linear_in_fractions(self):
        half = policy_cost(MixturePolicy(fractions={LabelFormat.BOXES_U: 0.5,
                                                    LabelFormat.NONE: 0.5},
                                         dataset_size=1000), BUILTIN_STATS["coco"])
        full = policy_cost(MixturePolicy(fractions={LabelFormat.BOXES_U: 1.0},
                                         dataset_size=1000), BUILTIN_STATS["coco"])
        assert full == pytest.approx(2 * half, rel=1e-12)


class TestEnumeratePolicies:
    FORMATS = (LabelFormat.FULLY, LabelFormat.TAGS_K, LabelFormat.BOXES_EC)

    def test_zero_budget_only_unlabeled(self):
        out = enumerate_policies(BUILTIN_STATS["bees"], 0.0, self.FORMATS,
                                 step=0.25, dataset_size=3596)
        assert len(out) == 1
        assert out[0].fraction(LabelFormat.NONE) == 1.0

    def test_big_budget_includes_all_fully(self):
        full_cost = 3596 * 249.9 / 3600
        out = enumerate_policies(BUILTIN_STATS["bees"], full_cost + 1, self.FORMATS,
                                 step=0.25, dataset_size=3596)
        assert any(p.fraction(LabelFormat.FULLY) == 1.0 for p in out)
        # sorted with the most fully-supervised policy first
        assert out[0].fraction(LabelFormat.FULLY) == 1.0

    def test_worked_example_policy_present_at_25_hours(self):
        out = enumerate_policies(BUILTIN_STATS["bees"], 25.0, self.FORMATS,
                                 step=0.01, dataset_size=3596)
        target = {LabelFormat.FULLY: 0.05, LabelFormat.TAGS_K: 0.80,
                  LabelFormat.BOXES_EC: 0.15}
        assert any(
            all(abs(p.fraction(f) - v) < 1e-9 for f, v in target.items())
            for p in out)

    def test_all_policies_affordable(self):
        stats = BUILTIN_STATS["voc"]
        out = enumerate_policies(stats, 50.0, self.FORMATS, step=0.1,
                                 dataset_size=1000)
        for p in out:
            assert policy_cost(p, stats) <= 50.0 * 1.01 + 1e-9
            assert math.fsum(p.fractions.values()) == pytest.approx(1.0, abs=1e-9)

    def test_step_must_divide_one(self):
        with pytest.raises(ValueError, match="divide 1"):
            enumerate_policies(BUILTIN_STATS["voc"], 10.0, self.FORMATS,
                               step=0.3, dataset_size=100)

    def test_grid_guard(self):
        with pytest.raises(ValueError, match="guard"):
            enumerate_policies(BUILTIN_STATS["voc"], 10.0, self.FORMATS,
                               step=0.001, dataset_size=100)

    def test_empty_formats_rejected(self):
        with pytest.raises(ValueError, match="format"):
            enumerate_policies(BUILTIN_STATS["voc"], 10.0, (), step=0.5,
                               dataset_size=100)
