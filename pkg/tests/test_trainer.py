"""
Tests for the vanilla AT and CAT training loops and the neighbor-similarity
diagnostic
"""

import numpy as np
import pytest

from config import settings
from models.attack import AttackConfig
from models.layer import mlp_layers
from models.run import BlobsSource
from models.training import TrainConfig
from services.data_io import build_experiment_data
from services.network import init_network, loss_and_grads, sgd_step
from services.trainer import (
    cosine_similarity_rows,
    neighbor_cosine_similarity,
    run_training,
    train_cat,
    train_vanilla_at,
)
from utils.errors import ValidationError
from utils.run_outputs import budget_to_threshold

FAST_ATTACK = AttackConfig(epsilon=0.1, step_size=0.025, num_steps=3, num_restarts=1)


def config(**overrides) -> TrainConfig:
    base = dict(iterations=4, batch_size=16, sampling_number=8, eval_every=2, lr=0.1, attack=FAST_ATTACK, seed=3)
    base.update(overrides)
    return TrainConfig(**base)


@pytest.fixture
def net():
    return init_network(mlp_layers(2, [8], 2), seed=2)


@pytest.fixture
def no_wall_time(monkeypatch):
    monkeypatch.setattr(settings, "RECORD_WALL_TIME", False)


class TestVanillaAt:
    def test_zero_iterations(self, net, blob_data):
        trained, records = train_vanilla_at(net, blob_data, config(scheme="vanilla_at", iterations=0))
        assert trained is net
        assert records == []

    def test_crafting_budget(self, net, blob_data):
        _, records = train_vanilla_at(net, blob_data, config(scheme="vanilla_at"))
        assert [r.iteration for r in records] == [2, 4]
        assert [r.cumulative_crafted for r in records] == [32, 64]

    def test_class_balanced_batches(self, net, blob_data):
        _, records = train_vanilla_at(net, blob_data, config(scheme="vanilla_at", class_balanced=True))
        assert records[-1].cumulative_crafted == 64

    def test_wrong_scheme(self, net, blob_data):
        with pytest.raises(ValidationError):
            train_vanilla_at(net, blob_data, config(scheme="cat"))

    def test_batch_larger_than_data(self, net, blob_data):
        with pytest.raises(ValidationError):
            train_vanilla_at(net, blob_data, config(scheme="vanilla_at", batch_size=10_000))

    @pytest.mark.slow
    def test_learns_robust_blobs(self):
        data = build_experiment_data(BlobsSource(n=600, k=2, d=2, spread=0.05), 0.2, seed=0)
        net = init_network(mlp_layers(2, [16], 2), seed=0)
        attack = AttackConfig(epsilon=0.1, step_size=0.025, num_steps=10, num_restarts=1)
        cfg = TrainConfig(
            scheme="vanilla_at", iterations=300, batch_size=64, lr=0.5, eval_every=50, attack=attack, seed=0
        )
        _, records = train_vanilla_at(net, data, cfg)
        assert records[-1].robust_acc > 0.9


class TestCat:
    def test_zero_iterations(self, net, blob_data):
        trained, records, table = train_cat(net, blob_data, config(iterations=0))
        assert trained is net
        assert records == []
        np.testing.assert_array_equal(table.weights, 1.0)

    def test_crafting_budget(self, net, blob_data):
        _, records, _ = train_cat(net, blob_data, config())
        assert [r.cumulative_crafted for r in records] == [16, 32]

    def test_alpha_one_freezes_weights(self, net, blob_data):
        cfg = config(alpha=1.0, sampling_number=blob_data.train.n)
        _, _, table = train_cat(net, blob_data, cfg)
        np.testing.assert_array_equal(table.weights, 1.0)
        assert table.selected_mask().all()
        np.testing.assert_array_equal(table.last_selected_iter, cfg.iterations)

    def test_weights_move_for_selected_only(self, net, blob_data):
        _, _, table = train_cat(net, blob_data, config(iterations=1, sampling_number=10))
        changed = table.weights != 1.0
        assert np.all(table.selected_mask()[changed])
        assert table.selected_mask().sum() == 10

    def test_post_update_gains(self, net, blob_data):
        _, records, table = train_cat(net, blob_data, config(gain_source="post_update"))
        assert len(records) == 2
        assert table.selected_mask().any()

    def test_reproducible(self, net, blob_data, no_wall_time):
        first = train_cat(net, blob_data, config())
        second = train_cat(net, blob_data, config())
        assert first[1] == second[1]
        for name in first[0].params:
            np.testing.assert_array_equal(first[0].params[name], second[0].params[name])
        np.testing.assert_array_equal(first[2].weights, second[2].weights)
        np.testing.assert_array_equal(first[2].last_selected_iter, second[2].last_selected_iter)

    @pytest.mark.slow
    def test_reduces_to_class_balanced_vanilla_at(self, no_wall_time):
        data = build_experiment_data(BlobsSource(n=400, k=2, d=2, spread=0.05), 0.25, seed=1)
        net = init_network(mlp_layers(2, [8], 2), seed=1)
        shared = dict(iterations=200, batch_size=32, sampling_number=32, lr=0.5, eval_every=10, attack=FAST_ATTACK, seed=1)
        at = run_training(net, data, TrainConfig(scheme="vanilla_at", class_balanced=True, **shared))
        cat = run_training(net, data, TrainConfig(scheme="cat", alpha=0.0, temperature=1e9, **shared))
        at_mean = np.mean([r.robust_acc for r in at.records])
        cat_mean = np.mean([r.robust_acc for r in cat.records])
        assert abs(at_mean - cat_mean) < 0.03

    @pytest.mark.slow
    def test_keeps_pace_with_vanilla_at_at_equal_budget(self, no_wall_time):
        data = build_experiment_data(BlobsSource(n=2000, k=2, d=2, spread=0.05), 0.2, seed=0)
        net = init_network(mlp_layers(2, [16], 2), seed=0)
        attack = AttackConfig(epsilon=0.1, step_size=0.025, num_steps=10, num_restarts=1)
        shared = dict(iterations=300, batch_size=64, sampling_number=64, lr=0.5, eval_every=20, attack=attack, seed=0)
        at = run_training(net, data, TrainConfig(scheme="vanilla_at", **shared))
        cat = run_training(net, data, TrainConfig(scheme="cat", **shared))
        assert [r.cumulative_crafted for r in cat.records] == [r.cumulative_crafted for r in at.records]
        for at_record, cat_record in zip(at.records, cat.records):
            assert cat_record.robust_acc >= at_record.robust_acc - 0.02
        at_hit = budget_to_threshold(at.records, "robust_acc", 0.8)
        cat_hit = budget_to_threshold(cat.records, "robust_acc", 0.8)
        assert cat_hit is not None
        assert at_hit is None or cat_hit.cumulative_crafted <= at_hit.cumulative_crafted


class TestRunTraining:
    def test_dispatch(self, net, blob_data):
        assert run_training(net, blob_data, config(scheme="vanilla_at")).weights is None
        assert run_training(net, blob_data, config(scheme="cat")).weights is not None

    def test_iteration_hook(self, net, blob_data):
        seen = []
        run_training(net, blob_data, config(), on_iteration=lambda t, current: seen.append(t))
        assert seen == [1, 2, 3, 4]


class TestNeighborSimilarity:
    def test_identical_networks(self, small_mlp, weak_attack, rng):
        x, y = rng.random((10, 4)), rng.integers(0, 3, size=10)
        assert neighbor_cosine_similarity(small_mlp, small_mlp, x, y, weak_attack) == pytest.approx(1.0, abs=1e-9)

    def test_orthogonal_rows(self):
        sims = cosine_similarity_rows(np.array([[1.0, 0.0], [0.0, 1.0]]), np.array([[0.0, 1.0], [0.0, 1.0]]))
        np.testing.assert_allclose(sims, [0.0, 1.0])

    def test_random_pair_below_neighbor_checkpoints(self, rng):
        x = rng.random((60, 6))
        y = np.tile(np.arange(10), 6)
        attack = AttackConfig(epsilon=0.05, step_size=0.0125, num_steps=3, num_restarts=1)
        layers = mlp_layers(6, [16], 10)
        net_t = init_network(layers, seed=1)
        _, grads = loss_and_grads(net_t, x, y)
        net_t1 = sgd_step(net_t, grads, 0.05)
        stranger = init_network(layers, seed=2)
        neighbor = neighbor_cosine_similarity(net_t, net_t1, x, y, attack)
        random_pair = neighbor_cosine_similarity(net_t, stranger, x, y, attack)
        assert -1.0 <= random_pair < neighbor <= 1.0

    def test_needs_same_architecture(self, small_mlp, weak_attack):
        other = init_network(mlp_layers(4, [5], 3), seed=0)
        with pytest.raises(ValidationError):
            neighbor_cosine_similarity(small_mlp, other, np.zeros((1, 4)), [0], weak_attack)
