"""
fig1: how similar are the predictions on adversarial examples crafted at
neighboring training iterations?

Snapshots are taken at t = j * interval, j = 0..num_checkpoints-1 (j = 0 is
the initial network). Each neighboring pair gets the mean cosine similarity
of its adversarial predictions on a fixed probe set, next to a baseline pair
formed with a randomly drawn checkpoint at least two snapshots away (or,
when no such checkpoint exists, an independently initialized network).
"""

import logging
from typing import Dict, List

import numpy as np

from models.network import Network
from models.run import RunSpec
from services.trainer import neighbor_cosine_similarity, run_training
from commands.common import add_run_arguments, build_network, load_data, prepare_output_dir
from utils.errors import UsageError
from utils.rng import substream
from utils.run_outputs import write_manifest, write_metrics_csv, write_rows_csv

logger = logging.getLogger(__name__)

FIG1_COLUMNS = ["iteration_a", "iteration_b", "neighbor_similarity", "random_pair_similarity"]


def register(subparsers) -> None:
    parser = subparsers.add_parser("fig1", help="neighbor-iteration prediction similarity")
    add_run_arguments(parser)
    parser.add_argument("--num-checkpoints", type=int, help="snapshots to compare (>= 2)")
    parser.set_defaults(handler=run_fig1)


def checkpoint_iterations(iterations: int, num_checkpoints: int) -> List[int]:
    if num_checkpoints < 2:
        raise UsageError(f"fig1 needs at least 2 checkpoints, got {num_checkpoints}")
    if iterations < num_checkpoints - 1:
        raise UsageError(f"{num_checkpoints} checkpoints need at least {num_checkpoints - 1} iterations, got {iterations}")
    interval = max(1, iterations // (num_checkpoints - 1))
    return [j * interval for j in range(num_checkpoints)]


def run_fig1(spec: RunSpec) -> int:
    wanted = checkpoint_iterations(spec.train.iterations, spec.num_checkpoints)
    out = prepare_output_dir(spec)
    data = load_data(spec)
    net = build_network(spec, data.train)

    snapshots: Dict[int, Network] = {0: net}

    def keep_snapshot(t: int, current: Network) -> None:
        if t in wanted:
            snapshots[t] = current

    logger.info(f"🚀 Neighbor-similarity diagnostic: snapshots at iterations {wanted}")
    outcome = run_training(net, data, spec.train, on_iteration=keep_snapshot, eval_limit=spec.eval_limit)
    write_metrics_csv(outcome.records, out / "metrics.csv")

    probe = data.eval_subset(spec.eval_limit)
    attack_cfg = spec.train.attack
    rng = substream(spec.train.seed, "baseline")
    # partner draws and the stranger network share one baseline stream
    stranger = build_network(spec, data.train, rng=rng)

    rows = []
    for j, (a, b) in enumerate(zip(wanted, wanted[1:])):
        far = [t for i, t in enumerate(wanted) if abs(i - j) >= 2]
        partner = snapshots[int(rng.choice(far))] if far else stranger
        rows.append(
            {
                "iteration_a": a,
                "iteration_b": b,
                "neighbor_similarity": neighbor_cosine_similarity(snapshots[a], snapshots[b], probe.x, probe.y, attack_cfg),
                "random_pair_similarity": neighbor_cosine_similarity(snapshots[a], partner, probe.x, probe.y, attack_cfg),
            }
        )
        logger.info(
            f"📊 iterations {a}→{b}: neighbor {rows[-1]['neighbor_similarity']:.4f}, "
            f"random pair {rows[-1]['random_pair_similarity']:.4f}"
        )

    write_rows_csv(rows, FIG1_COLUMNS, out / "fig1.csv")
    neighbor_mean = float(np.mean([r["neighbor_similarity"] for r in rows]))
    random_mean = float(np.mean([r["random_pair_similarity"] for r in rows]))
    write_manifest(
        spec,
        out / "manifest.json",
        {"checkpoints": wanted, "neighbor_mean": neighbor_mean, "random_pair_mean": random_mean},
    )
    logger.info(f"✅ Mean similarity: neighbor {neighbor_mean:.4f} vs random pair {random_mean:.4f}")
    return 0
