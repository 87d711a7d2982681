"""
Case-aware batch construction.

Information gain is the log-likelihood margin of the adversarial prediction:
the best wrong class minus the true class (positive means misclassified).
Each example keeps an exponential moving average of its gains over the
iterations it was drawn in, and batches are sampled without replacement from
a softmax over those weights, with batch slots split evenly across classes.
"""

import csv
import logging
from pathlib import Path
from typing import Dict, List, Union

import numpy as np
import numpy.typing as npt
from scipy import special

from models.sampling import BatchPlan, WeightTable
from utils.errors import DimensionError, ValidationError
from utils.rng import SeedLike, as_generator

logger = logging.getLogger(__name__)


def information_gain(log_probs, y) -> npt.NDArray[np.float64]:
    """w[i] = max_{k≠y_i} log_probs[i, k] − log_probs[i, y_i]"""
    log_probs = np.asarray(log_probs, dtype=np.float64)
    y = np.asarray(y)
    if log_probs.ndim != 2 or log_probs.shape[1] < 2:
        raise DimensionError("information gain needs a B×K log-probability matrix with K >= 2", log_probs.shape, ())
    if y.shape != (log_probs.shape[0],):
        raise DimensionError("labels do not match the log-probabilities", y.shape, (log_probs.shape[0],))
    bad = np.flatnonzero((y < 0) | (y >= log_probs.shape[1]))
    if bad.size:
        raise ValidationError(f"label {int(y[bad[0]])} at index {int(bad[0])} is outside [0, {log_probs.shape[1]})")

    rows = np.arange(y.shape[0])
    true_class = log_probs[rows, y]
    others = log_probs.copy()
    others[rows, y] = -np.inf
    return others.max(axis=1) - true_class


def ema_update(table: WeightTable, selected, gains, t: int) -> WeightTable:
    """w_i ← α·w_i + (1−α)·gain_i for the selected indices; all others untouched"""
    selected = np.asarray(selected, dtype=np.int64)
    gains = np.asarray(gains, dtype=np.float64)
    if selected.shape != gains.shape or selected.ndim != 1:
        raise ValidationError(f"{selected.size} selected indices but {gains.size} gains")
    if selected.size and (selected.min() < 0 or selected.max() >= table.size):
        raise ValidationError(f"selected index outside [0, {table.size})")
    unique, counts = np.unique(selected, return_counts=True)
    if np.any(counts > 1):
        raise ValidationError(f"index {int(unique[counts > 1][0])} selected more than once")
    if not np.all(np.isfinite(gains)):
        raise ValidationError("gains must be finite")

    weights = table.weights.copy()
    weights[selected] = table.alpha * weights[selected] + (1.0 - table.alpha) * gains
    last_selected = table.last_selected_iter.copy()
    last_selected[selected] = t
    return WeightTable(weights=weights, alpha=table.alpha, last_selected_iter=last_selected)


def weights_to_probs(weights, temperature: float = 1.0) -> npt.NDArray[np.float64]:
    """Softmax of w/τ (shift-invariant, strictly increasing in w)"""
    if not temperature > 0:
        raise ValidationError(f"temperature must be > 0, got {temperature}")
    weights = np.asarray(weights, dtype=np.float64)
    return special.softmax(weights / temperature)


def sample_without_replacement(probs, k: int, seed: SeedLike) -> npt.NDArray[np.int64]:
    """
    k distinct indices, distributed as k successive draws proportional to the
    remaining probability mass. Uses exponential keys: key_i = −ln(u_i)/p_i,
    keep the k smallest. Zero-probability entries are only taken once every
    positive entry is exhausted.
    """
    probs = np.asarray(probs, dtype=np.float64)
    n = probs.shape[0]
    if k < 0 or k > n:
        raise ValidationError(f"cannot draw {k} distinct indices from {n}")
    if np.any(probs < 0) or not np.all(np.isfinite(probs)):
        raise ValidationError("probabilities must be finite and non-negative")

    rng = as_generator(seed)
    u = rng.random(n)
    with np.errstate(divide="ignore"):
        keys = np.where(probs > 0, -np.log1p(-u) / probs, np.inf)
    return np.argsort(keys, kind="stable")[:k].astype(np.int64)


def _allocate_quotas(
    batch_size: int, class_sizes: npt.NDArray[np.int64], class_mass: npt.NDArray[np.float64]
) -> Dict[int, int]:
    """
    floor(B/K) per class; the remainder goes to the classes with the largest
    weight mass (ties by class index). Slots a small class cannot fill are
    handed out the same way, lowest count first, so counts of classes with
    members to spare never differ by more than one.
    """
    num_classes = class_sizes.shape[0]
    order = sorted(range(num_classes), key=lambda c: (-class_mass[c], c))
    counts = np.zeros(num_classes, dtype=np.int64)
    remaining = batch_size
    while remaining > 0:
        spare = [c for c in order if counts[c] < class_sizes[c]]
        if not spare:
            raise ValidationError(f"batch size {batch_size} exceeds the {int(class_sizes.sum())} available examples")
        level = min(counts[c] for c in spare)
        lowest = [c for c in spare if counts[c] == level]
        for c in lowest[:remaining]:
            counts[c] += 1
        remaining -= min(len(lowest), remaining)
    return {c: int(counts[c]) for c in range(num_classes)}


def plan_balanced_batch(
    table: WeightTable,
    labels,
    batch_size: int,
    num_classes: int,
    temperature: float = 1.0,
    seed: SeedLike = 0,
) -> BatchPlan:
    labels = np.asarray(labels, dtype=np.int64)
    if labels.shape != (table.size,):
        raise DimensionError("labels do not match the weight table", labels.shape, (table.size,))
    if batch_size <= 0 or batch_size > table.size:
        raise ValidationError(f"batch size {batch_size} must lie in [1, {table.size}]")
    if batch_size < num_classes:
        logger.warning(f"⚠️ Batch size {batch_size} is below the class count {num_classes}; some classes get no slot")

    members: List[npt.NDArray[np.int64]] = [np.flatnonzero(labels == c) for c in range(num_classes)]
    sizes = np.array([m.size for m in members], dtype=np.int64)
    empty = np.flatnonzero(sizes == 0)
    if empty.size:
        raise ValidationError(f"class {int(empty[0])} has no examples")

    probs = weights_to_probs(table.weights, temperature)
    mass = np.array([probs[m].sum() for m in members])
    quotas = _allocate_quotas(batch_size, sizes, mass)

    rng = as_generator(seed)
    picked = []
    for c in range(num_classes):
        if quotas[c] == 0:
            continue
        class_probs = weights_to_probs(table.weights[members[c]], temperature)
        picked.append(members[c][sample_without_replacement(class_probs, quotas[c], rng)])
    indices = np.concatenate(picked).astype(np.int64)
    return BatchPlan(indices=indices, per_class_quota=quotas)


def dump_weight_table(table: WeightTable, path: Union[str, Path]) -> Path:
    """CSV with columns index,weight,last_selected_iter"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["index", "weight", "last_selected_iter"])
        for i, (weight, last) in enumerate(zip(table.weights, table.last_selected_iter)):
            writer.writerow([i, repr(float(weight)), int(last)])
    logger.info(f"💾 Wrote weight table ({table.size} rows) to {path}")
    return path


def summarize_weights(table: WeightTable) -> Dict[str, float]:
    selected = table.selected_mask()
    return {
        "mean_weight": float(table.weights.mean()),
        "max_weight": float(table.weights.max()),
        "min_weight": float(table.weights.min()),
        "coverage": float(selected.mean()),
    }
