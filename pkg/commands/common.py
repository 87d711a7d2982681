"""
Shared CLI plumbing: flags, config-file merging and run setup.

Precedence: built-in defaults < JSON config file (--config) < flags. Every
flag defaults to None so an unset flag never overrides the config file.
"""

import argparse
import json
import logging
from pathlib import Path
from typing import Any, Dict, Optional

import numpy as np

from config import settings
from models.dataset import Dataset, ExperimentData
from models.layer import mlp_layers, small_cnn_layers
from models.network import Network
from models.run import RunSpec
from services.data_io import build_experiment_data
from services.network import init_network
from utils.errors import UsageError
from utils.rng import draw_seed, substream

logger = logging.getLogger(__name__)

BLOBS_DEFAULT_LR = 0.01

# flag dest -> dotted path inside the RunSpec dict
FLAG_PATHS = {
    "output_dir": "output_dir",
    "architecture": "architecture",
    "hidden": "hidden",
    "eval_fraction": "eval_fraction",
    "eval_limit": "eval_limit",
    "seed": "train.seed",
    "scheme": "train.scheme",
    "iters": "train.iterations",
    "batch_size": "train.batch_size",
    "sampling_number": "train.sampling_number",
    "alpha": "train.alpha",
    "temperature": "train.temperature",
    "lr": "train.lr",
    "eval_every": "train.eval_every",
    "class_balanced": "train.class_balanced",
    "gain_source": "train.gain_source",
    "epsilon": "train.attack.epsilon",
    "step_size": "train.attack.step_size",
    "num_steps": "train.attack.num_steps",
    "num_restarts": "train.attack.num_restarts",
    "clip_lo": "train.attack.clip_lo",
    "clip_hi": "train.attack.clip_hi",
    "variant": "train.attack.variant",
    "n": "dataset.n",
    "k": "dataset.k",
    "d": "dataset.d",
    "spread": "dataset.spread",
    "mnist_images": "dataset.images",
    "mnist_labels": "dataset.labels",
    "mnist_eval_images": "dataset.eval_images",
    "mnist_eval_labels": "dataset.eval_labels",
    "mnist_limit": "dataset.limit",
    "sampling_numbers": "sampling_numbers",
    "thresholds": "thresholds",
    "with_baseline": "with_baseline",
    "parallel": "parallel",
    "num_checkpoints": "num_checkpoints",
    "checkpoint": "checkpoint",
}
EVAL_ATTACK_FLAGS = {"eval_num_steps": "num_steps", "eval_num_restarts": "num_restarts", "eval_epsilon": "epsilon"}


def add_run_arguments(parser: argparse.ArgumentParser) -> None:
    """Dataset, model, training and attack flags shared by every command"""
    parser.add_argument("--config", type=Path, help="JSON file with any subset of the run spec")
    parser.add_argument("--output-dir", type=Path)
    parser.add_argument("--seed", type=int)

    data = parser.add_argument_group("dataset")
    data.add_argument("--dataset", choices=["mnist", "blobs"])
    data.add_argument("--mnist-images", type=Path)
    data.add_argument("--mnist-labels", type=Path)
    data.add_argument("--mnist-eval-images", type=Path)
    data.add_argument("--mnist-eval-labels", type=Path)
    data.add_argument("--mnist-limit", type=int, help="train on a seeded subset of this size")
    data.add_argument("--n", type=int, help="blob count")
    data.add_argument("--k", type=int, help="blob classes")
    data.add_argument("--d", type=int, help="blob dimension")
    data.add_argument("--spread", type=float, help="blob standard deviation")
    data.add_argument("--eval-fraction", type=float)
    data.add_argument("--eval-limit", type=int)

    model = parser.add_argument_group("model")
    model.add_argument("--architecture", choices=["mlp", "cnn"])
    model.add_argument("--hidden", type=int, nargs="*")

    train = parser.add_argument_group("training")
    train.add_argument("--scheme", choices=["vanilla_at", "cat"])
    train.add_argument("--iters", type=int)
    train.add_argument("--batch-size", type=int)
    train.add_argument("--sampling-number", type=int)
    train.add_argument("--alpha", type=float)
    train.add_argument("--temperature", type=float)
    train.add_argument("--lr", type=float)
    train.add_argument("--eval-every", type=int)
    train.add_argument("--class-balanced", action="store_const", const=True)
    train.add_argument("--gain-source", choices=["crafted", "post_update"])

    attack = parser.add_argument_group("attack")
    attack.add_argument("--epsilon", type=float)
    attack.add_argument("--step-size", type=float, help="defaults to epsilon/4")
    attack.add_argument("--num-steps", type=int)
    attack.add_argument("--num-restarts", type=int)
    attack.add_argument("--clip-lo", type=float)
    attack.add_argument("--clip-hi", type=float)
    attack.add_argument("--variant", choices=["sign_step", "raw_gradient"])
    attack.add_argument("--eval-num-steps", type=int, help="evaluation attack steps (default: training attack)")
    attack.add_argument("--eval-num-restarts", type=int)
    attack.add_argument("--eval-epsilon", type=float)


def _set_path(target: Dict[str, Any], dotted: str, value: Any) -> None:
    keys = dotted.split(".")
    for key in keys[:-1]:
        target = target.setdefault(key, {})
    target[keys[-1]] = value


def _load_config_file(path: Optional[Path]) -> Dict[str, Any]:
    if path is None:
        return {}
    if not path.exists():
        raise UsageError(f"config file not found: {path}")
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise UsageError(f"config file {path} is not valid JSON: {e}")
    if not isinstance(raw, dict):
        raise UsageError(f"config file {path} must hold a JSON object")
    return raw


def build_run_spec(args: argparse.Namespace, command: str) -> RunSpec:
    spec: Dict[str, Any] = _load_config_file(getattr(args, "config", None))
    spec["command"] = command
    spec.setdefault("output_dir", settings.OUTPUT_DIR)
    spec.setdefault("eval_limit", settings.EVAL_LIMIT)
    spec.setdefault("thresholds", list(settings.DEFAULT_THRESHOLDS))

    dataset = spec.setdefault("dataset", {})
    if getattr(args, "dataset", None):
        if dataset.get("kind") not in (None, args.dataset):
            spec["dataset"] = dataset = {}
        dataset["kind"] = args.dataset
    dataset.setdefault("kind", "blobs")
    if dataset["kind"] == "mnist":
        dataset.setdefault("images", settings.MNIST_TRAIN_IMAGES)
        dataset.setdefault("labels", settings.MNIST_TRAIN_LABELS)
        if settings.MNIST_TEST_IMAGES and settings.MNIST_TEST_LABELS:
            dataset.setdefault("eval_images", settings.MNIST_TEST_IMAGES)
            dataset.setdefault("eval_labels", settings.MNIST_TEST_LABELS)

    for dest, dotted in FLAG_PATHS.items():
        value = getattr(args, dest, None)
        if value is None:
            continue
        if dotted.startswith("dataset.") and (dest.startswith("mnist_") != (dataset["kind"] == "mnist")):
            raise UsageError(f"--{dest.replace('_', '-')} does not apply to the {dataset['kind']} dataset")
        _set_path(spec, dotted, value)

    if dataset["kind"] == "mnist":
        for key in ("images", "labels"):
            if not dataset.get(key):
                raise UsageError(f"MNIST needs --mnist-{key} (or CAT_MNIST_TRAIN_{key.upper()})")

    train = spec.setdefault("train", {})
    attack = train.setdefault("attack", {})
    if "step_size" not in attack and attack.get("epsilon", 0.3) > 0:
        attack["step_size"] = attack.get("epsilon", 0.3) / 4
    # training reseeds the attack every iteration; the fixed seed drives evaluation restarts
    attack.setdefault("seed", draw_seed(substream(train.get("seed", 0), "evaluation")))
    if "lr" not in train and dataset["kind"] == "blobs":
        train["lr"] = BLOBS_DEFAULT_LR

    eval_overrides = {field: getattr(args, dest) for dest, field in EVAL_ATTACK_FLAGS.items() if getattr(args, dest, None) is not None}
    if eval_overrides:
        eval_attack = {**attack, **train.get("eval_attack", {}), **eval_overrides}
        if "epsilon" in eval_overrides and eval_overrides["epsilon"] > 0 and "step_size" not in train.get("eval_attack", {}):
            eval_attack["step_size"] = eval_overrides["epsilon"] / 4
        train["eval_attack"] = eval_attack

    run_spec = RunSpec.model_validate(spec)
    missing = run_spec.missing_paths()
    if missing:
        raise UsageError(f"path does not exist: {missing[0]}")
    return run_spec


def load_data(spec: RunSpec) -> ExperimentData:
    return build_experiment_data(spec.dataset, spec.eval_fraction, spec.train.seed)


def build_network(spec: RunSpec, train: Dataset, rng: Optional[np.random.Generator] = None) -> Network:
    """Initial network for a run, seeded from `rng` or else the run's init stream"""
    seed = draw_seed(rng if rng is not None else substream(spec.train.seed, "init"))
    if spec.architecture == "cnn":
        if len(train.input_shape) != 3:
            raise UsageError(f"the cnn architecture needs image-shaped inputs, dataset has shape {train.input_shape}")
        channels, height, width = train.input_shape
        return init_network(small_cnn_layers(channels, height, width, train.num_classes), seed, train.input_shape)
    return init_network(mlp_layers(train.dim, spec.hidden_widths(), train.num_classes), seed)


def prepare_output_dir(spec: RunSpec, *parts: str) -> Path:
    out = Path(spec.output_dir, *parts)
    out.mkdir(parents=True, exist_ok=True)
    return out


def final_metrics(records) -> Optional[Dict[str, Any]]:
    return records[-1].model_dump() if records else None
