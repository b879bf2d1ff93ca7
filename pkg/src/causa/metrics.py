"""Graph-recovery scoring and normalized prediction-error metrics."""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

from causa.core import CausalGraph


@dataclass(frozen=True)
class EvaluationReport:
    shd: int
    f1: float
    precision: float
    recall: float
    tp: int
    fp: int
    fn: int
    runtime_ms: float | None = None

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def score_graph(
    estimated: CausalGraph, truth: CausalGraph, runtime_ms: float | None = None
) -> EvaluationReport:
    """Strict structural comparison on (source, lag, target) triples.

    SHD counts insertions plus deletions; lags orient every edge, so there is
    no orientation term. A true edge whose endpoints were filtered out of the
    estimate still counts as a deletion.
    """
    est = estimated.triples
    tru = truth.triples
    tp = len(est & tru)
    fp = len(est - tru)
    fn = len(tru - est)
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = (
        2.0 * precision * recall / (precision + recall)
        if precision + recall > 0
        else 0.0
    )
    return EvaluationReport(
        shd=fp + fn,
        f1=f1,
        precision=precision,
        recall=recall,
        tp=tp,
        fp=fp,
        fn=fn,
        runtime_ms=runtime_ms,
    )


def _check_vectors(actual, predicted) -> tuple[np.ndarray, np.ndarray, float]:
    y = np.asarray(actual, dtype=float)
    yhat = np.asarray(predicted, dtype=float)
    if y.shape != yhat.shape or y.ndim != 1 or y.size < 2:
        raise ValueError("actual and predicted must be equal-length vectors, n >= 2")
    sigma = float(np.std(y))  # population standard deviation
    if sigma == 0.0:
        raise ValueError("actual values have zero variance")
    return y, yhat, sigma


def nmae(actual, predicted) -> float:
    """Mean absolute error normalized by the population std of the actual values."""
    y, yhat, sigma = _check_vectors(actual, predicted)
    return float(np.mean(np.abs(y - yhat)) / sigma)


def nrmse(actual, predicted) -> float:
    """Root-mean-square error normalized by the population std of the actual values."""
    y, yhat, sigma = _check_vectors(actual, predicted)
    return float(np.sqrt(np.mean((y - yhat) ** 2)) / sigma)


def aggregate(reports) -> tuple[dict[str, float], dict[str, float]]:
    """Per-field mean and sample standard deviation over a list of reports.

    Fields that are None in any report (runtime) are skipped. A single
    report aggregates to itself with zero deviation.
    """
    reports = list(reports)
    if not reports:
        raise ValueError("cannot aggregate an empty list of reports")
    means: dict[str, float] = {}
    sds: dict[str, float] = {}
    for f in fields(EvaluationReport):
        vals = [getattr(r, f.name) for r in reports]
        if any(v is None for v in vals):
            continue
        arr = np.asarray(vals, dtype=float)
        means[f.name] = float(arr.mean())
        sds[f.name] = float(arr.std(ddof=1)) if len(arr) > 1 else 0.0
    return means, sds
