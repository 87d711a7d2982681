from .network import init_network, forward, loss_and_grads, sgd_step, accuracy
from .pgd_attack import project_linf, craft, robust_accuracy
from .gain_sampler import information_gain, ema_update, weights_to_probs, sample_without_replacement, plan_balanced_batch

__all__ = [
    "init_network", "forward", "loss_and_grads", "sgd_step", "accuracy",
    "project_linf", "craft", "robust_accuracy", "information_gain",
    "ema_update", "weights_to_probs", "sample_without_replacement",
    "plan_balanced_batch"
]
