"""
sweep: CAT over several sampling numbers (optionally with a vanilla-AT
baseline), summarized as the crafting budget needed to reach each robust
accuracy threshold.
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from typing import Dict, List, Tuple

from models.run import RunSpec
from models.training import MetricsRecord
from services.trainer import run_training
from commands.common import add_run_arguments, build_network, load_data, prepare_output_dir
from utils.errors import UsageError
from utils.run_outputs import (
    SUMMARY_COLUMNS,
    budget_to_threshold,
    peak_sampling_numbers,
    sweep_summary_rows,
    write_manifest,
    write_metrics_csv,
    write_rows_csv,
)

logger = logging.getLogger(__name__)

BASELINE_COLUMNS = ["scheme", "batch_size", "threshold", "crafted_budget"]


def register(subparsers) -> None:
    parser = subparsers.add_parser("sweep", help="CAT across sampling numbers")
    add_run_arguments(parser)
    parser.add_argument("--sampling-numbers", type=int, nargs="+")
    parser.add_argument("--thresholds", type=float, nargs="+", help="robust-accuracy targets")
    parser.add_argument("--with-baseline", action="store_const", const=True, help="add a vanilla-AT run")
    parser.add_argument("--parallel", action="store_const", const=True, help="one process per run")
    parser.set_defaults(handler=run_sweep)


def _run_one(spec_json: str, scheme: str, sampling_number: int) -> Tuple[str, int, List[MetricsRecord]]:
    """One sweep member; rebuilds its data from the spec so it can run in a worker process"""
    spec = RunSpec.model_validate_json(spec_json)
    cfg = spec.train.model_copy(update={"scheme": scheme, "sampling_number": sampling_number})
    data = load_data(spec)
    net = build_network(spec, data.train)
    outcome = run_training(net, data, cfg, eval_limit=spec.eval_limit)
    return scheme, sampling_number, outcome.records


def run_sweep(spec: RunSpec) -> int:
    if not spec.sampling_numbers:
        raise UsageError("sweep needs at least one sampling number")
    out = prepare_output_dir(spec)
    spec_json = spec.model_dump_json()

    jobs = [("cat", sn) for sn in spec.sampling_numbers]
    if spec.with_baseline:
        jobs.append(("vanilla_at", spec.train.sampling_number))
    logger.info(f"🚀 Sweep over sampling numbers {spec.sampling_numbers} ({'parallel' if spec.parallel else 'sequential'})")

    if spec.parallel:
        with ProcessPoolExecutor() as pool:
            finished = list(pool.map(_run_one, [spec_json] * len(jobs), *zip(*jobs)))
    else:
        finished = [_run_one(spec_json, scheme, sn) for scheme, sn in jobs]

    runs: Dict[int, List[MetricsRecord]] = {}
    baseline: List[MetricsRecord] = []
    for scheme, sampling_number, records in finished:
        if scheme == "cat":
            runs[sampling_number] = records
            write_metrics_csv(records, out / f"metrics_sn{sampling_number}.csv")
        else:
            baseline = records
            write_metrics_csv(records, out / "metrics_at.csv")

    rows = sweep_summary_rows(runs, spec.thresholds)
    write_rows_csv(rows, SUMMARY_COLUMNS, out / "summary.csv")
    peaks = peak_sampling_numbers(rows)
    for threshold, peak in peaks.items():
        logger.info(f"📊 Robust accuracy {threshold}: lowest budget at sampling number {peak if peak else 'NA (never reached)'}")

    results = {"peaks": peaks}
    if spec.with_baseline:
        baseline_rows = []
        for threshold in spec.thresholds:
            hit = budget_to_threshold(baseline, "robust_acc", threshold)
            baseline_rows.append(
                {
                    "scheme": "vanilla_at",
                    "batch_size": spec.train.batch_size,
                    "threshold": threshold,
                    "crafted_budget": hit.cumulative_crafted if hit else None,
                }
            )
        write_rows_csv(baseline_rows, BASELINE_COLUMNS, out / "summary_baseline.csv")
        results["baseline"] = baseline_rows

    write_manifest(spec, out / "manifest.json", results)
    logger.info(f"✅ Sweep complete: {len(runs)} CAT runs in {out}")
    return 0
