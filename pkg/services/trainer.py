"""
Adversarial training loops.

vanilla AT: sample a batch (uniform without replacement, or class-balanced),
craft adversarial examples for all of it, take one SGD step.
CAT: plan a class-balanced batch from the EMA gain weights, craft, step,
then fold the crafted examples' information gains back into the weights.

Cost is tracked as the cumulative number of crafted examples, which is what
the vanilla-vs-CAT comparisons are measured in.
"""

import logging
import time
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple

import numpy as np
from tqdm import tqdm

from config import settings
from models.attack import AttackConfig
from models.dataset import Dataset, ExperimentData
from models.network import Network
from models.sampling import WeightTable
from models.training import MetricsRecord, TrainConfig
from services.gain_sampler import ema_update, information_gain, plan_balanced_batch
from services.network import loss_and_grads, sgd_step
from services.pgd_attack import craft, evaluate_robustness
from utils.errors import TrainingError, ValidationError
from utils.rng import draw_seed, substream

logger = logging.getLogger(__name__)

IterationHook = Callable[[int, Network], None]


@dataclass
class TrainingOutcome:
    network: Network
    records: List[MetricsRecord]
    weights: Optional[WeightTable] = None


@dataclass
class _RunTracker:
    """Crafting budget, training wall clock and the periodic evaluations"""

    cfg: TrainConfig
    eval_set: Dataset
    on_iteration: Optional[IterationHook] = None
    crafted: int = 0
    records: List[MetricsRecord] = field(default_factory=list)
    train_seconds: float = 0.0
    _tick: float = 0.0

    def start_iteration(self) -> None:
        self._tick = time.perf_counter()

    def finish_iteration(self, t: int, net: Network, crafted: int) -> None:
        self.train_seconds += time.perf_counter() - self._tick
        self.crafted += crafted
        if self.on_iteration is not None:
            self.on_iteration(t, net)
        if t % self.cfg.eval_every == 0:
            self.evaluate(t, net)

    def evaluate(self, t: int, net: Network) -> MetricsRecord:
        report = evaluate_robustness(net, self.eval_set.x, self.eval_set.y, self.cfg.evaluation_attack)
        record = MetricsRecord(
            iteration=t,
            natural_acc=report.natural_acc,
            robust_acc=report.robust_acc,
            cumulative_crafted=self.crafted,
            wall_seconds=self.train_seconds if settings.RECORD_WALL_TIME else 0.0,
        )
        self.records.append(record)
        logger.info(
            f"📊 [{self.cfg.scheme}] iter {t}: natural {record.natural_acc:.4f}, "
            f"robust {record.robust_acc:.4f}, crafted {record.cumulative_crafted}"
        )
        return record


def _progress(cfg: TrainConfig):
    return tqdm(
        range(1, cfg.iterations + 1),
        desc=cfg.scheme,
        disable=not settings.SHOW_PROGRESS,
        leave=False,
    )


def _check_batch_size(size: int, data: Dataset, what: str) -> None:
    if size > data.n:
        raise ValidationError(f"{what} {size} exceeds the {data.n} training examples")


def _adversarial_step(net: Network, x: np.ndarray, y: np.ndarray, attack_cfg: AttackConfig, lr: float):
    result = craft(net, x, y, attack_cfg)
    x_adv = x + result.delta
    _, grads = loss_and_grads(net, x_adv, y, need_input_grad=False, need_param_grad=True)
    return sgd_step(net, grads, lr), result, x_adv


def train_vanilla_at(
    net: Network,
    data: ExperimentData,
    cfg: TrainConfig,
    on_iteration: Optional[IterationHook] = None,
    eval_limit: Optional[int] = None,
) -> Tuple[Network, List[MetricsRecord]]:
    if cfg.scheme != "vanilla_at":
        raise ValidationError(f"train_vanilla_at got scheme '{cfg.scheme}'")
    train = data.train
    _check_batch_size(cfg.batch_size, train, "batch size")
    tracker = _RunTracker(cfg, data.eval_subset(eval_limit or settings.EVAL_LIMIT), on_iteration)
    if cfg.iterations == 0:
        return net, []

    sampling_rng = substream(cfg.seed, "sampling")
    attack_rng = substream(cfg.seed, "attack")
    uniform = WeightTable.initial(train.n, alpha=1.0)

    logger.info(f"🚀 Vanilla AT: {cfg.iterations} iterations, batch {cfg.batch_size}, class_balanced={cfg.class_balanced}")
    for t in _progress(cfg):
        tracker.start_iteration()
        if cfg.class_balanced:
            indices = plan_balanced_batch(uniform, train.y, cfg.batch_size, train.num_classes, 1.0, sampling_rng).indices
        else:
            indices = sampling_rng.choice(train.n, size=cfg.batch_size, replace=False)
        x, y = train.x[indices], train.y[indices]
        net, result, _ = _adversarial_step(net, x, y, cfg.attack.reseeded(draw_seed(attack_rng)), cfg.lr)
        tracker.finish_iteration(t, net, result.crafted_count)

    logger.info(f"✅ Vanilla AT finished: {tracker.crafted} examples crafted")
    return net, tracker.records


def _check_weight_update(before: WeightTable, after: WeightTable, selected: np.ndarray, gains: np.ndarray, t: int) -> None:
    untouched = np.ones(before.size, dtype=bool)
    untouched[selected] = False
    if not np.array_equal(before.weights[untouched], after.weights[untouched]):
        raise TrainingError(f"iteration {t}: an unselected weight changed")
    expected = before.alpha * before.weights[selected] + (1.0 - before.alpha) * gains
    if not np.array_equal(after.weights[selected], expected):
        raise TrainingError(f"iteration {t}: selected weights do not follow the EMA rule")


def train_cat(
    net: Network,
    data: ExperimentData,
    cfg: TrainConfig,
    on_iteration: Optional[IterationHook] = None,
    eval_limit: Optional[int] = None,
) -> Tuple[Network, List[MetricsRecord], WeightTable]:
    if cfg.scheme != "cat":
        raise ValidationError(f"train_cat got scheme '{cfg.scheme}'")
    train = data.train
    _check_batch_size(cfg.sampling_number, train, "sampling number")
    tracker = _RunTracker(cfg, data.eval_subset(eval_limit or settings.EVAL_LIMIT), on_iteration)
    table = WeightTable.initial(train.n, cfg.alpha)
    if cfg.iterations == 0:
        return net, [], table

    sampling_rng = substream(cfg.seed, "sampling")
    attack_rng = substream(cfg.seed, "attack")

    logger.info(
        f"🚀 CAT: {cfg.iterations} iterations, sampling number {cfg.sampling_number}, "
        f"alpha {cfg.alpha}, temperature {cfg.temperature}, gains from {cfg.gain_source}"
    )
    for t in _progress(cfg):
        tracker.start_iteration()
        plan = plan_balanced_batch(table, train.y, cfg.sampling_number, train.num_classes, cfg.temperature, sampling_rng)
        x, y = train.x[plan.indices], train.y[plan.indices]
        net, result, x_adv = _adversarial_step(net, x, y, cfg.attack.reseeded(draw_seed(attack_rng)), cfg.lr)

        if cfg.gain_source == "crafted":
            log_probs = result.adv_log_probs
        else:
            log_probs = loss_and_grads(net, x_adv, y, need_input_grad=False, need_param_grad=False)[0].log_probs
        gains = information_gain(log_probs, y)
        updated = ema_update(table, plan.indices, gains, t)
        if settings.CHECK_WEIGHT_INVARIANTS:
            _check_weight_update(table, updated, plan.indices, gains, t)
        table = updated
        tracker.finish_iteration(t, net, result.crafted_count)

    logger.info(f"✅ CAT finished: {tracker.crafted} examples crafted, {int(table.selected_mask().sum())}/{table.size} examples ever drawn")
    return net, tracker.records, table


def run_training(
    net: Network,
    data: ExperimentData,
    cfg: TrainConfig,
    on_iteration: Optional[IterationHook] = None,
    eval_limit: Optional[int] = None,
) -> TrainingOutcome:
    """Dispatch on cfg.scheme"""
    if cfg.scheme == "cat":
        network, records, table = train_cat(net, data, cfg, on_iteration, eval_limit)
        return TrainingOutcome(network, records, table)
    network, records = train_vanilla_at(net, data, cfg, on_iteration, eval_limit)
    return TrainingOutcome(network, records)


def cosine_similarity_rows(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Row-wise cosine similarity, clipped to [-1, 1]"""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape:
        raise ValidationError(f"cannot compare predictions of shapes {p.shape} and {q.shape}")
    norms = np.linalg.norm(p, axis=1) * np.linalg.norm(q, axis=1)
    dots = np.einsum("ij,ij->i", p, q)
    with np.errstate(invalid="ignore", divide="ignore"):
        sims = np.where(norms > 0, dots / norms, 0.0)
    return np.clip(sims, -1.0, 1.0)


def neighbor_cosine_similarity(net_t: Network, net_t1: Network, x, y, attack_cfg: AttackConfig) -> float:
    """
    Craft adversarial examples of the same inputs against two networks and
    return the mean cosine similarity of their predicted distributions.
    """
    if not net_t.same_architecture(net_t1):
        raise ValidationError("neighbor similarity needs two networks of the same architecture")
    p = np.exp(craft(net_t, x, y, attack_cfg).adv_log_probs)
    q = np.exp(craft(net_t1, x, y, attack_cfg).adv_log_probs)
    return float(cosine_similarity_rows(p, q).mean())
