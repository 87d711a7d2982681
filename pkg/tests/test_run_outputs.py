import pytest

from models.run import RunSpec
from models.training import MetricsRecord
from utils.errors import FormatError, ValidationError
from utils.run_outputs import (
    budget_to_threshold,
    peak_sampling_numbers,
    read_manifest,
    read_metrics_csv,
    run_id,
    sweep_summary_rows,
    threshold_rows,
    write_manifest,
    write_metrics_csv,
)


def record(iteration, natural, robust, crafted):
    return MetricsRecord(
        iteration=iteration, natural_acc=natural, robust_acc=robust, cumulative_crafted=crafted, wall_seconds=0.5 * iteration
    )


RECORDS = [record(10, 0.5, 0.3, 100), record(20, 0.8, 0.6, 200), record(30, 0.9, 0.75, 300)]


class TestMetricsCsv:
    def test_round_trip(self, tmp_path):
        path = write_metrics_csv(RECORDS, tmp_path / "metrics.csv")
        assert read_metrics_csv(path) == RECORDS
        assert path.read_text().splitlines()[0] == "iteration,natural_acc,robust_acc,cumulative_crafted,wall_seconds"

    def test_budget_must_not_drop(self, tmp_path):
        with pytest.raises(ValidationError):
            write_metrics_csv([RECORDS[1], RECORDS[0]], tmp_path / "metrics.csv")

    def test_wrong_header(self, tmp_path):
        path = tmp_path / "other.csv"
        path.write_text("a,b\n1,2\n")
        with pytest.raises(FormatError):
            read_metrics_csv(path)


class TestThresholds:
    def test_first_record_reaching_target(self):
        assert budget_to_threshold(RECORDS, "robust_acc", 0.6).cumulative_crafted == 200
        assert budget_to_threshold(RECORDS, "natural_acc", 0.9).iteration == 30
        assert budget_to_threshold(RECORDS, "robust_acc", 0.9) is None

    def test_unknown_metric(self):
        with pytest.raises(ValidationError):
            budget_to_threshold(RECORDS, "loss", 0.5)

    def test_threshold_rows_cover_both_metrics(self):
        rows = threshold_rows("cat", RECORDS, [0.7])
        assert [(r["metric"], r["crafted_budget"], r["wall_seconds"]) for r in rows] == [
            ("natural_acc", 200, 10.0),
            ("robust_acc", 300, 15.0),
        ]

    def test_nonmonotone_sweep_reported(self):
        runs = {64: [record(10, 0.9, 0.7, 640)], 128: [record(10, 0.9, 0.7, 1280)], 256: [record(10, 0.9, 0.5, 2560)]}
        rows = sweep_summary_rows(runs, [0.6])
        assert [r["crafted_budget"] for r in rows] == [640, 1280, None]
        assert peak_sampling_numbers(rows) == {"0.6": 64}


class TestManifest:
    def test_round_trip(self, tmp_path):
        spec = RunSpec(command="sweep", sampling_numbers=[32, 64])
        path = write_manifest(spec, tmp_path / "manifest.json", {"peaks": {}})
        assert read_manifest(path) == spec

    def test_run_id_is_content_hash(self):
        assert run_id(RunSpec()) == run_id(RunSpec())
        assert run_id(RunSpec()) != run_id(RunSpec(eval_limit=10))
