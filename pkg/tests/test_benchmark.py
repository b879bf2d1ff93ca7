import csv

import numpy as np
import pytest

import causa.benchmark as bench
from causa.benchmark import (
    SweepSpec,
    run_cell,
    run_sweep,
    summarize,
    write_results_csv,
    write_summary_csv,
)
from causa.estimators import EstimatorConfig

GAUSSIAN = EstimatorConfig()


def _small_sweep(**kw) -> SweepSpec:
    args = dict(system="s1", var_range=(3, 3), repeats=1, n_samples=300)
    args.update(kw)
    return SweepSpec(**args)


class TestRunCell:
    def test_happy_path(self):
        row = run_cell("s1", 3, 0, "fpcmci", 300, 0.05, GAUSSIAN)
        assert row.error is None
        assert row.report is not None
        assert row.report.runtime_ms > 0
        assert row.mode == "fpcmci"

    def test_exception_recorded_not_raised(self, monkeypatch):
        def boom(*a, **k):
            raise RuntimeError("synthetic failure")

        monkeypatch.setattr(bench, "discover", boom)
        row = run_cell("s1", 3, 0, "fpcmci", 300, 0.05, GAUSSIAN)
        assert row.report is None
        assert "synthetic failure" in row.error

    def test_record_of_failed_row_has_blank_metrics(self, monkeypatch):
        monkeypatch.setattr(bench, "discover", lambda *a, **k: 1 / 0)
        rec = run_cell("s1", 3, 0, "pcmci", 300, 0.05, GAUSSIAN).as_record()
        assert rec["shd"] == "" and rec["f1"] == ""
        assert rec["error"].startswith("ZeroDivisionError")


class TestRunSweep:
    def test_row_count_and_order(self):
        rows = run_sweep(_small_sweep(var_range=(3, 4), repeats=2))
        assert len(rows) == 8  # 2 sizes x 2 seeds x 2 modes
        assert [(r.n_vars, r.seed, r.mode) for r in rows[:4]] == [
            (3, 0, "fpcmci"),
            (3, 0, "pcmci"),
            (3, 1, "fpcmci"),
            (3, 1, "pcmci"),
        ]

    def test_minimal_sweep_two_rows(self):
        rows = run_sweep(_small_sweep())
        assert len(rows) == 2
        assert {r.mode for r in rows} == {"fpcmci", "pcmci"}

    def test_deterministic_modulo_runtime(self):
        a = run_sweep(_small_sweep(repeats=2))
        b = run_sweep(_small_sweep(repeats=2))
        for ra, rb in zip(a, b):
            assert (ra.report.shd, ra.report.f1) == (rb.report.shd, rb.report.f1)


class TestSummarize:
    def test_matches_hand_aggregation(self):
        rows = run_sweep(_small_sweep(repeats=3))
        summary = summarize(rows)
        assert [s["mode"] for s in summary] == ["fpcmci", "pcmci"]
        for rec in summary:
            sel = [r.report for r in rows if r.mode == rec["mode"]]
            assert rec["runs"] == 3
            assert rec["shd_mean"] == pytest.approx(np.mean([r.shd for r in sel]))
            assert rec["f1_sd"] == pytest.approx(np.std([r.f1 for r in sel], ddof=1))

    def test_failed_rows_excluded(self, monkeypatch):
        monkeypatch.setattr(bench, "discover", lambda *a, **k: 1 / 0)
        rows = run_sweep(_small_sweep())
        assert summarize(rows) == []


class TestCsvWriters:
    def test_results_csv(self, tmp_path):
        rows = run_sweep(_small_sweep())
        path = tmp_path / "results.csv"
        write_results_csv(rows, path)
        with open(path, newline="") as fh:
            records = list(csv.DictReader(fh))
        assert len(records) == 2
        assert list(records[0]) == bench.RESULT_FIELDS
        assert records[0]["system"] == "s1"
        assert records[0]["mode"] == "fpcmci"
        assert float(records[0]["runtime_ms"]) > 0

    def test_summary_csv(self, tmp_path):
        summary = summarize(run_sweep(_small_sweep(repeats=2)))
        path = tmp_path / "summary.csv"
        write_summary_csv(summary, path)
        with open(path, newline="") as fh:
            records = list(csv.DictReader(fh))
        assert len(records) == 2
        assert {r["mode"] for r in records} == {"fpcmci", "pcmci"}
