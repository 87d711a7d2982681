"""
Tests for information gain, the EMA weight table and class-balanced sampling
"""

import csv
import itertools

import numpy as np
import pytest

from models.sampling import NEVER_SELECTED, WeightTable
from services.gain_sampler import (
    dump_weight_table,
    ema_update,
    information_gain,
    plan_balanced_batch,
    sample_without_replacement,
    summarize_weights,
    weights_to_probs,
)
from utils.errors import ValidationError


class TestInformationGain:
    def test_uniform_row_is_zero(self):
        assert information_gain(np.log(np.full((1, 4), 0.25)), [2])[0] == pytest.approx(0.0)

    def test_confident_correct_is_negative(self):
        gain = information_gain(np.log([[0.7, 0.2, 0.1]]), [0])
        assert gain[0] == pytest.approx(np.log(0.2) - np.log(0.7))
        assert gain[0] == pytest.approx(-1.2528, abs=1e-4)

    def test_misclassified_is_positive(self):
        gain = information_gain(np.log([[0.1, 0.6, 0.3]]), [0])
        assert gain[0] == pytest.approx(1.7918, abs=1e-4)

    def test_sign_tracks_misclassification(self, rng):
        logits = rng.standard_normal((200, 5)) * 3
        log_probs = logits - np.log(np.exp(logits).sum(axis=1, keepdims=True))
        y = rng.integers(0, 5, size=200)
        gains = information_gain(log_probs, y)
        np.testing.assert_array_equal(gains > 0, log_probs.argmax(axis=1) != y)

    def test_matches_direct_evaluation(self, rng):
        logits = rng.standard_normal((1000, 6)) * 4
        log_probs = logits - np.log(np.exp(logits).sum(axis=1, keepdims=True))
        y = rng.integers(0, 6, size=1000)
        expected = [max(row[k] for k in range(6) if k != label) - row[label] for row, label in zip(log_probs, y)]
        np.testing.assert_allclose(information_gain(log_probs, y), expected, rtol=0, atol=1e-12)

    def test_label_out_of_range(self):
        with pytest.raises(ValidationError):
            information_gain(np.log([[0.5, 0.5]]), [2])


class TestEmaUpdate:
    def test_half_alpha(self):
        table = WeightTable.initial(3, alpha=0.5)
        updated = ema_update(table, [1], [0.0], t=1)
        np.testing.assert_array_equal(updated.weights, [1.0, 0.5, 1.0])
        np.testing.assert_array_equal(updated.last_selected_iter, [NEVER_SELECTED, 1, NEVER_SELECTED])

    def test_alpha_one_freezes(self):
        table = WeightTable.initial(4, alpha=1.0)
        updated = ema_update(table, [0, 3], [5.0, -7.0], t=2)
        np.testing.assert_array_equal(updated.weights, table.weights)

    def test_alpha_zero_copies_gains(self):
        table = WeightTable.initial(4, alpha=0.0)
        updated = ema_update(table, [2, 0], [0.3, -1.1], t=1)
        assert updated.weights[2] == 0.3
        assert updated.weights[0] == -1.1

    def test_unselected_bit_identical(self, rng):
        table = ema_update(WeightTable.initial(10, 0.5), np.arange(10), rng.standard_normal(10), t=1)
        updated = ema_update(table, [4, 7], [2.0, 3.0], t=2)
        untouched = np.setdiff1d(np.arange(10), [4, 7])
        assert updated.weights[untouched].tobytes() == table.weights[untouched].tobytes()

    def test_duplicate_index(self):
        with pytest.raises(ValidationError, match="more than once"):
            ema_update(WeightTable.initial(3, 0.5), [1, 1], [0.1, 0.2], t=1)

    def test_length_mismatch(self):
        with pytest.raises(ValidationError):
            ema_update(WeightTable.initial(3, 0.5), [0, 1], [0.1], t=1)

    def test_alpha_domain(self):
        with pytest.raises(ValidationError):
            WeightTable.initial(3, alpha=1.5)


class TestWeightsToProbs:
    def test_closed_form(self):
        np.testing.assert_allclose(weights_to_probs([0.0, np.log(3.0)]), [0.25, 0.75])

    def test_equal_weights_uniform(self):
        np.testing.assert_allclose(weights_to_probs(np.ones(5)), 0.2)

    def test_high_temperature_uniform(self):
        np.testing.assert_allclose(weights_to_probs([0.0, 1.0, -2.0, 3.0], temperature=1e6), 0.25, atol=1e-6)

    def test_shift_invariant(self, rng):
        w = rng.standard_normal(8)
        np.testing.assert_allclose(weights_to_probs(w + 17.5), weights_to_probs(w), atol=1e-12)

    def test_temperature_must_be_positive(self):
        with pytest.raises(ValidationError):
            weights_to_probs([0.0, 1.0], temperature=0.0)


class TestSampleWithoutReplacement:
    def test_full_draw_is_permutation(self):
        drawn = sample_without_replacement(np.full(6, 1 / 6), 6, seed=3)
        assert sorted(drawn.tolist()) == list(range(6))

    def test_certain_index(self):
        assert sample_without_replacement([0.0, 1.0, 0.0], 1, seed=0).tolist() == [1]

    def test_deterministic_given_seed(self):
        probs = weights_to_probs(np.arange(10.0))
        np.testing.assert_array_equal(sample_without_replacement(probs, 4, 9), sample_without_replacement(probs, 4, 9))

    def test_k_exceeds_n(self):
        with pytest.raises(ValidationError):
            sample_without_replacement([0.5, 0.5], 3, seed=0)

    def test_never_duplicates(self, rng):
        for _ in range(10_000):
            n = int(rng.integers(1, 12))
            k = int(rng.integers(0, n + 1))
            drawn = sample_without_replacement(rng.dirichlet(np.ones(n)), k, rng)
            assert len(set(drawn.tolist())) == k

    @pytest.mark.slow
    def test_matches_successive_draws(self):
        probs = np.array([0.4, 0.3, 0.2, 0.1])
        rng = np.random.default_rng(2024)
        trials = 200_000
        counts = {}
        for _ in range(trials):
            pair = tuple(sample_without_replacement(probs, 2, rng).tolist())
            counts[pair] = counts.get(pair, 0) + 1
        for a, b in itertools.permutations(range(4), 2):
            exact = probs[a] * probs[b] / (1.0 - probs[a])
            assert counts.get((a, b), 0) / trials == pytest.approx(exact, abs=0.01)
        assert counts[(0, 1)] / trials == pytest.approx(0.2, abs=0.01)


class TestPlanBalancedBatch:
    @staticmethod
    def labels(per_class, k=10):
        return np.repeat(np.arange(k), per_class)

    def test_one_per_class(self):
        y = self.labels(10)
        plan = plan_balanced_batch(WeightTable.initial(y.size, 0.5), y, 10, 10, seed=1)
        np.testing.assert_array_equal(np.bincount(y[plan.indices], minlength=10), 1)

    def test_remainder_by_mass_then_index(self):
        y = self.labels(10)
        plan = plan_balanced_batch(WeightTable.initial(y.size, 0.5), y, 12, 10, seed=1)
        counts = np.bincount(y[plan.indices], minlength=10)
        assert sorted(counts.tolist()) == [1] * 8 + [2] * 2
        assert counts[0] == 2 and counts[1] == 2

    def test_remainder_goes_to_heaviest_class(self):
        y = self.labels(10)
        table = ema_update(WeightTable.initial(y.size, 0.0), np.flatnonzero(y == 7), np.full(10, 4.0), t=1)
        plan = plan_balanced_batch(table, y, 11, 10, seed=1)
        assert plan.per_class_quota[7] == 2

    def test_mnist_sized_classes(self):
        y = self.labels(600)
        plan = plan_balanced_batch(WeightTable.initial(y.size, 0.5), y, 128, 10, seed=5)
        counts = np.bincount(y[plan.indices], minlength=10)
        assert set(counts.tolist()) <= {12, 13}
        assert counts.sum() == 128

    def test_small_class_shortfall_redistributed(self):
        y = np.array([0] * 20 + [1] * 2 + [2] * 20)
        plan = plan_balanced_batch(WeightTable.initial(y.size, 0.5), y, 12, 3, seed=0)
        assert plan.per_class_quota[1] == 2
        assert plan.size == 12
        assert sum(plan.per_class_quota.values()) == 12

    def test_empty_class_is_named(self):
        y = np.array([0, 0, 2, 2])
        with pytest.raises(ValidationError, match="class 1"):
            plan_balanced_batch(WeightTable.initial(4, 0.5), y, 3, 3, seed=0)

    def test_shortfall_keeps_spare_classes_level(self):
        y = np.array([0] * 20 + [1] * 1 + [2] * 20)
        plan = plan_balanced_batch(WeightTable.initial(y.size, 0.5), y, 13, 3, seed=0)
        assert plan.per_class_quota == {0: 6, 1: 1, 2: 6}

    def test_fuzz_floor_remainder_contract(self, rng):
        for _ in range(1000):
            k = int(rng.integers(2, 6))
            y = np.concatenate([np.arange(k), rng.integers(0, k, size=int(rng.integers(0, 40)))])
            sizes = np.bincount(y, minlength=k)
            table = ema_update(WeightTable.initial(y.size, 0.5), np.arange(y.size), rng.standard_normal(y.size), t=1)
            batch = int(rng.integers(1, y.size + 1))
            plan = plan_balanced_batch(table, y, batch, k, seed=rng)
            assert plan.size == batch
            assert len(set(plan.indices.tolist())) == batch
            counts = np.bincount(y[plan.indices], minlength=k)
            assert counts.tolist() == [plan.per_class_quota[c] for c in range(k)]
            assert np.all(counts >= np.minimum(sizes, batch // k))
            spare = counts < sizes
            if spare.any():
                assert counts.max() - counts[spare].min() <= 1


class TestWeightDump:
    def test_csv_columns(self, tmp_path):
        table = ema_update(WeightTable.initial(3, 0.5), [2], [1.0], t=4)
        path = dump_weight_table(table, tmp_path / "weights.csv")
        with open(path, newline="") as f:
            rows = list(csv.DictReader(f))
        assert list(rows[0]) == ["index", "weight", "last_selected_iter"]
        assert rows[2]["last_selected_iter"] == "4"
        assert float(rows[2]["weight"]) == 1.0
        assert summarize_weights(table)["coverage"] == pytest.approx(1 / 3)
