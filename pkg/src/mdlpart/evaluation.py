"""Scoring inferred partitions against ground truth, plus the pooled baselines."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Dataset, InferenceReport, Partition, StructureError
from .regression import FitOptions, fit, fit_null, rmse


@dataclass(frozen=True)
class Confusion:
    tp: int
    fp: int
    fn: int


def confusion(truth, predicted: Partition) -> Confusion:
    """Individual-level counts; a cluster matches only on an identical member set.

    ``truth`` may be a :class:`~mdlpart.simgen.GroundTruth` or a :class:`Partition`.
    """
    truth_part = getattr(truth, "partition", truth)
    if truth_part.tree is not predicted.tree and (
            truth_part.tree.fingerprint() != predicted.tree.fingerprint()):
        raise StructureError("truth and prediction are over different trees")
    t = {truth_part.tree[c].digest(): truth_part.tree[c].size for c in truth_part}
    p = {predicted.tree[c].digest(): predicted.tree[c].size for c in predicted}
    return confusion_from_sizes(t, p)


def confusion_from_sizes(truth: dict[str, int], predicted: dict[str, int]) -> Confusion:
    """Same counts from ``{member digest: size}`` maps (used for serialized results)."""
    tp = sum(size for key, size in truth.items() if key in predicted)
    fn = sum(size for key, size in truth.items() if key not in predicted)
    fp = sum(size for key, size in predicted.items() if key not in truth)
    return Confusion(tp, fp, fn)


def prf1(c: Confusion) -> tuple[float, float, float]:
    precision = c.tp / (c.tp + c.fp) if c.tp + c.fp else 0.0
    recall = c.tp / (c.tp + c.fn) if c.tp + c.fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


def partition_predictions(report: InferenceReport, dataset: Dataset) -> np.ndarray:
    tree = report.tree
    if tree.n != dataset.n:
        raise StructureError(f"report covers {tree.n} individuals, dataset has {dataset.n}")
    yhat = np.full(dataset.n, np.nan)
    for cid in report.partition:
        if cid not in report.optimal_models:
            raise StructureError(f"no optimal model for selected cluster {cid!r}")
        idx = tree[cid].members
        yhat[idx] = report.optimal_models[cid].predict(dataset.features[idx])
    if np.isnan(yhat).any():
        raise StructureError("selected clusters leave individuals without a prediction")
    return yhat


def partition_rmse(report: InferenceReport, dataset: Dataset) -> float:
    """RMSE over all individuals, each predicted by its selected cluster's optimal model."""
    return rmse(dataset.target, partition_predictions(report, dataset))


def pooled_rmse(dataset: Dataset, options: FitOptions | None = None) -> float:
    """RMSE of one model fitted to the whole population."""
    model = fit(dataset.features, dataset.target, options or FitOptions())
    return rmse(dataset.target, model.predict(dataset.features))


def null_rmse(dataset: Dataset) -> float:
    model = fit_null(dataset.target)
    return rmse(dataset.target, model.predict(dataset.features))
