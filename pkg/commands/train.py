"""
train: one seeded AT or CAT run.
Writes metrics.csv, manifest.json, checkpoint.catn and, for CAT, weights.csv.
"""

import logging

from models.run import RunSpec
from services.checkpoint import save_network
from services.gain_sampler import dump_weight_table, summarize_weights
from services.trainer import run_training
from commands.common import add_run_arguments, build_network, final_metrics, load_data, prepare_output_dir
from utils.run_outputs import threshold_rows, write_manifest, write_metrics_csv

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser("train", help="run one adversarial-training scheme")
    add_run_arguments(parser)
    parser.set_defaults(handler=run_train)


def run_train(spec: RunSpec) -> int:
    out = prepare_output_dir(spec)
    data = load_data(spec)
    net = build_network(spec, data.train)
    logger.info(f"🚀 Training {spec.train.scheme} on {data.train.n} examples → {out}")

    outcome = run_training(net, data, spec.train, eval_limit=spec.eval_limit)

    write_metrics_csv(outcome.records, out / "metrics.csv")
    save_network(outcome.network, out / "checkpoint.catn")
    results = {
        "final": final_metrics(outcome.records),
        "thresholds": threshold_rows(spec.train.scheme, outcome.records, spec.thresholds),
    }
    if outcome.weights is not None:
        dump_weight_table(outcome.weights, out / "weights.csv")
        results["weights"] = summarize_weights(outcome.weights)
    write_manifest(spec, out / "manifest.json", results)
    logger.info(f"✅ Run complete: {out}")
    return 0
