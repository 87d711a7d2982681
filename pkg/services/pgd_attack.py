"""
ℓ∞ PGD with restarts.

Restart 0 starts from δ = 0, later restarts from U[-ε, ε]. Every iterate,
including the starting point, is a candidate, and each example keeps its
highest-loss candidate (earliest on ties). Because δ = 0 is always a
candidate, the adversarial loss never falls below the clean loss.
"""

import logging
from dataclasses import dataclass

import numpy as np

from models.attack import AttackConfig, AttackResult
from models.network import Network
from services.network import accuracy, loss_and_grads, predict
from utils.errors import AttackError, ValidationError
from utils.tensor_core import Tensor, elementwise, freeze

logger = logging.getLogger(__name__)

SEED_MASK = 0xFFFFFFFFFFFFFFFF


def project_linf(delta: Tensor, epsilon: float) -> Tensor:
    """Clamp every entry of δ into [-ε, ε]"""
    if epsilon < 0:
        raise ValidationError(f"epsilon must be >= 0, got {epsilon}")
    return elementwise("clamp", delta, lo=-epsilon, hi=epsilon)


def _clip_to_domain(x: np.ndarray, delta: np.ndarray, cfg: AttackConfig) -> np.ndarray:
    """Keep x+δ inside [clip_lo, clip_hi]; δ is only recomputed where clipping bit"""
    shifted = x + delta
    clipped = np.clip(shifted, cfg.clip_lo, cfg.clip_hi)
    return np.where(clipped != shifted, clipped - x, delta)


def random_start(shape, cfg: AttackConfig, restart: int) -> np.ndarray:
    """
    Uniform start inside the ε-ball. Each row draws from its own stream keyed
    by (seed, row, restart), so results do not depend on batch scheduling.
    """
    batch, dim = shape
    rows = [
        np.random.default_rng([cfg.seed & SEED_MASK, row, restart]).uniform(-cfg.epsilon, cfg.epsilon, size=dim)
        for row in range(batch)
    ]
    return np.stack(rows) if rows else np.zeros(shape)


def craft(net: Network, x: Tensor, y, cfg: AttackConfig) -> AttackResult:
    x = np.asarray(x, dtype=np.float64)
    batch = x.shape[0]
    if x.size and (x.min() < cfg.clip_lo or x.max() > cfg.clip_hi):
        # outside the window, clipping and the ε-ball cannot both hold
        raise ValidationError(
            f"inputs span [{x.min():.6g}, {x.max():.6g}], outside the clip window [{cfg.clip_lo}, {cfg.clip_hi}]"
        )
    clean, _ = loss_and_grads(net, x, y, need_input_grad=False, need_param_grad=False)

    best_loss = np.array(clean.per_example_loss)
    best_log_probs = np.array(clean.log_probs)
    best_delta = np.zeros_like(x)

    if cfg.epsilon == 0:
        return AttackResult(
            delta=freeze(best_delta),
            adv_log_probs=freeze(best_log_probs),
            adv_loss=freeze(best_loss),
            crafted_count=batch,
        )

    for restart in range(cfg.num_restarts):
        delta = np.zeros_like(x) if restart == 0 else random_start(x.shape, cfg, restart)
        delta = _clip_to_domain(x, delta, cfg)

        for step in range(cfg.num_steps + 1):
            need_grad = step < cfg.num_steps
            report, grads = loss_and_grads(net, x + delta, y, need_input_grad=need_grad, need_param_grad=False)

            improved = report.per_example_loss > best_loss
            if improved.any():
                best_loss[improved] = report.per_example_loss[improved]
                best_log_probs[improved] = report.log_probs[improved]
                best_delta[improved] = delta[improved]

            if not need_grad:
                break

            # loss_and_grads differentiates the batch mean; rescale to per-example gradients
            g = grads.by_input * batch
            if not np.all(np.isfinite(g)):
                raise AttackError(step=step + 1, restart=restart)
            direction = np.sign(g) if cfg.variant == "sign_step" else g
            delta = project_linf(delta + cfg.step_size * direction, cfg.epsilon)
            delta = _clip_to_domain(x, delta, cfg)

    return AttackResult(
        delta=freeze(best_delta),
        adv_log_probs=freeze(best_log_probs),
        adv_loss=freeze(best_loss),
        crafted_count=batch,
    )


def robust_accuracy(net: Network, x: Tensor, y, cfg: AttackConfig) -> float:
    result = craft(net, x, y, cfg)
    return accuracy(net, np.asarray(x) + result.delta, y)


@dataclass(frozen=True)
class RobustnessReport:
    natural_acc: float
    robust_acc: float
    attack_success_rate: float
    crafted_count: int


def evaluate_robustness(net: Network, x: Tensor, y, cfg: AttackConfig) -> RobustnessReport:
    """
    Natural and robust accuracy from one craft call, plus the attack success
    rate: the share of naturally-correct examples the attack flips.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    result = craft(net, x, y, cfg)
    natural_ok = predict(net, x) == y
    robust_ok = predict(net, x + result.delta) == y
    flipped = natural_ok & ~robust_ok
    return RobustnessReport(
        natural_acc=float(natural_ok.mean()) if y.size else 0.0,
        robust_acc=float(robust_ok.mean()) if y.size else 0.0,
        attack_success_rate=float(flipped.sum() / natural_ok.sum()) if natural_ok.any() else 0.0,
        crafted_count=result.crafted_count,
    )
