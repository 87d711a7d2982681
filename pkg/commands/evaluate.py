"""
eval: load a checkpoint and measure it on the evaluation split.
"""

import json
import logging
from pathlib import Path

from models.run import RunSpec
from services.checkpoint import load_network
from services.pgd_attack import evaluate_robustness
from commands.common import add_run_arguments, load_data, prepare_output_dir
from utils.errors import UsageError, ValidationError

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser("eval", help="evaluate a saved checkpoint")
    add_run_arguments(parser)
    parser.add_argument("--checkpoint", type=Path, help="checkpoint written by train")
    parser.set_defaults(handler=run_eval)


def run_eval(spec: RunSpec) -> int:
    if spec.checkpoint is None:
        raise UsageError("eval needs --checkpoint")
    net = load_network(spec.checkpoint)
    data = load_data(spec)
    probe = data.eval_subset(spec.eval_limit)
    if net.input_dim != probe.dim or net.num_classes != probe.num_classes:
        raise ValidationError(
            f"checkpoint expects {net.input_dim} features and {net.num_classes} classes, "
            f"dataset has {probe.dim} and {probe.num_classes}"
        )

    attack_cfg = spec.train.evaluation_attack
    logger.info(f"🔍 Evaluating {spec.checkpoint} on {probe.n} examples (epsilon {attack_cfg.epsilon}, {attack_cfg.num_steps} steps × {attack_cfg.num_restarts} restarts)")
    report = evaluate_robustness(net, probe.x, probe.y, attack_cfg)

    out = prepare_output_dir(spec)
    result = {
        "checkpoint": str(spec.checkpoint),
        "n": probe.n,
        "natural_acc": report.natural_acc,
        "robust_acc": report.robust_acc,
        "attack_success_rate": report.attack_success_rate,
    }
    (out / "eval.json").write_text(json.dumps(result, indent=2, sort_keys=True))
    logger.info(
        f"✅ natural {report.natural_acc:.4f}, robust {report.robust_acc:.4f}, "
        f"attack success rate {report.attack_success_rate:.4f}"
    )
    return 0
