"""
compare: seed-paired vanilla AT and CAT runs.

Both runs share the data split and the initial network; the crafting budget
each needs to reach every threshold is tabulated side by side.
"""

import logging
from typing import Dict, List, Optional

from models.run import RunSpec
from services.trainer import run_training
from commands.common import add_run_arguments, build_network, final_metrics, load_data, prepare_output_dir
from utils.run_outputs import THRESHOLD_COLUMNS, threshold_rows, write_manifest, write_metrics_csv, write_rows_csv

logger = logging.getLogger(__name__)

SCHEMES = ("vanilla_at", "cat")


def register(subparsers) -> None:
    parser = subparsers.add_parser("compare", help="paired vanilla AT vs CAT")
    add_run_arguments(parser)
    parser.add_argument("--thresholds", type=float, nargs="+", help="accuracy targets")
    parser.set_defaults(handler=run_compare)


def budget_ratios(rows: List[Dict]) -> Dict[str, Optional[float]]:
    """CAT budget / AT budget per (metric, threshold); None when either never got there"""
    budgets = {(r["scheme"], r["metric"], r["threshold"]): r["crafted_budget"] for r in rows}
    ratios = {}
    for (scheme, metric, threshold), at_budget in budgets.items():
        if scheme != "vanilla_at":
            continue
        cat_budget = budgets.get(("cat", metric, threshold))
        key = f"{metric}@{threshold}"
        ratios[key] = cat_budget / at_budget if at_budget and cat_budget is not None else None
    return ratios


def run_compare(spec: RunSpec) -> int:
    out = prepare_output_dir(spec)
    data = load_data(spec)
    net = build_network(spec, data.train)

    rows = []
    finals = {}
    for scheme in SCHEMES:
        cfg = spec.train.model_copy(update={"scheme": scheme})
        outcome = run_training(net, data, cfg, eval_limit=spec.eval_limit)
        write_metrics_csv(outcome.records, out / f"metrics_{scheme}.csv")
        rows.extend(threshold_rows(scheme, outcome.records, spec.thresholds))
        finals[scheme] = final_metrics(outcome.records)

    write_rows_csv(rows, THRESHOLD_COLUMNS, out / "thresholds.csv")
    ratios = budget_ratios(rows)
    for key, ratio in ratios.items():
        logger.info(f"📊 {key}: CAT/AT crafting budget {'NA' if ratio is None else f'{ratio:.3f}'}")
    write_manifest(spec, out / "manifest.json", {"final": finals, "budget_ratio": ratios})
    logger.info(f"✅ Comparison complete: {out}")
    return 0
