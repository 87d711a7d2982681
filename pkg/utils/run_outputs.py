"""
Run artifacts: metrics CSV, summary CSVs and the JSON run manifest.
"""

import csv
import hashlib
import json
import logging
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Union

from models.run import RunSpec
from models.training import MetricsRecord
from utils.errors import FormatError, ValidationError

logger = logging.getLogger(__name__)

METRICS_COLUMNS = ["iteration", "natural_acc", "robust_acc", "cumulative_crafted", "wall_seconds"]
SUMMARY_COLUMNS = ["sampling_number", "threshold", "crafted_budget"]
THRESHOLD_COLUMNS = ["scheme", "metric", "threshold", "crafted_budget", "wall_seconds"]
NOT_REACHED = "NA"
METRICS = ("natural_acc", "robust_acc")

PathLike = Union[str, Path]


def check_records(records: Sequence[MetricsRecord]) -> None:
    """cumulative_crafted must never decrease"""
    for prev, cur in zip(records, records[1:]):
        if cur.cumulative_crafted < prev.cumulative_crafted:
            raise ValidationError(
                f"cumulative_crafted drops from {prev.cumulative_crafted} to {cur.cumulative_crafted} at iteration {cur.iteration}"
            )


def write_metrics_csv(records: Sequence[MetricsRecord], path: PathLike) -> Path:
    check_records(records)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(METRICS_COLUMNS)
        for r in records:
            writer.writerow([r.iteration, repr(r.natural_acc), repr(r.robust_acc), r.cumulative_crafted, repr(r.wall_seconds)])
    logger.info(f"💾 Wrote {len(records)} metrics rows to {path}")
    return path


def read_metrics_csv(path: PathLike) -> List[MetricsRecord]:
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames != METRICS_COLUMNS:
            raise FormatError(f"{path}: expected columns {METRICS_COLUMNS}, found {reader.fieldnames}")
        records = [MetricsRecord(**row) for row in reader]
    check_records(records)
    return records


def budget_to_threshold(records: Iterable[MetricsRecord], metric: str, threshold: float) -> Optional[MetricsRecord]:
    """First evaluation at which `metric` reaches `threshold`, or None"""
    if metric not in METRICS:
        raise ValidationError(f"unknown metric '{metric}'. Valid metrics: {', '.join(METRICS)}")
    for record in records:
        if getattr(record, metric) >= threshold:
            return record
    return None


def _cell(value) -> str:
    return NOT_REACHED if value is None else str(value)


def sweep_summary_rows(
    runs: Dict[int, Sequence[MetricsRecord]], thresholds: Sequence[float], metric: str = "robust_acc"
) -> List[Dict[str, Any]]:
    rows = []
    for threshold in thresholds:
        for sampling_number in sorted(runs):
            hit = budget_to_threshold(runs[sampling_number], metric, threshold)
            rows.append(
                {
                    "sampling_number": sampling_number,
                    "threshold": threshold,
                    "crafted_budget": hit.cumulative_crafted if hit else None,
                }
            )
    return rows


def peak_sampling_numbers(rows: Sequence[Dict[str, Any]]) -> Dict[str, Optional[int]]:
    """Per threshold, the sampling number that reached it with the smallest budget"""
    peaks: Dict[str, Optional[int]] = {}
    for threshold in sorted({row["threshold"] for row in rows}):
        reached = [row for row in rows if row["threshold"] == threshold and row["crafted_budget"] is not None]
        best = min(reached, key=lambda row: (row["crafted_budget"], row["sampling_number"]), default=None)
        peaks[str(threshold)] = best["sampling_number"] if best else None
    return peaks


def threshold_rows(scheme: str, records: Sequence[MetricsRecord], thresholds: Sequence[float]) -> List[Dict[str, Any]]:
    rows = []
    for metric in METRICS:
        for threshold in thresholds:
            hit = budget_to_threshold(records, metric, threshold)
            rows.append(
                {
                    "scheme": scheme,
                    "metric": metric,
                    "threshold": threshold,
                    "crafted_budget": hit.cumulative_crafted if hit else None,
                    "wall_seconds": hit.wall_seconds if hit else None,
                }
            )
    return rows


def write_rows_csv(rows: Sequence[Dict[str, Any]], columns: Sequence[str], path: PathLike) -> Path:
    """Write dict rows; None cells become NA"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_cell(row.get(column)) for column in columns])
    logger.info(f"💾 Wrote {len(rows)} rows to {path}")
    return path


def read_rows_csv(path: PathLike) -> List[Dict[str, str]]:
    with open(path, newline="") as f:
        return list(csv.DictReader(f))


def run_id(spec: RunSpec) -> str:
    """Short content hash of the canonical spec, git-style"""
    canonical = json.dumps(spec.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
    return hashlib.sha1(canonical.encode("utf-8")).hexdigest()[:12]


def write_manifest(spec: RunSpec, path: PathLike, extra: Optional[Dict[str, Any]] = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    manifest = {
        "run_id": run_id(spec),
        "seed": spec.train.seed,
        "created_at": datetime.now(timezone.utc).isoformat(),
        "spec": spec.model_dump(mode="json"),
    }
    if extra:
        manifest["results"] = extra
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True))
    logger.info(f"💾 Wrote manifest {manifest['run_id']} to {path}")
    return path


def read_manifest(path: PathLike) -> RunSpec:
    manifest = json.loads(Path(path).read_text())
    if "spec" not in manifest:
        raise FormatError(f"{path} has no 'spec' entry")
    return RunSpec.model_validate(manifest["spec"])
