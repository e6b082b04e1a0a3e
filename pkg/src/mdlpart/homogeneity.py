"""Cross-validated homogeneity score of a cluster.

A cluster's folds are its child clusters when it has at least two of them,
otherwise a seeded random k-fold split. Each fold is predicted by a model
fitted on the rest of the cluster, and the score is the mean squared
Pearson correlation between true and predicted targets.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass

import numpy as np

from .core import Cluster, Dataset, HierarchyTree
from .regression import EXPONENTIAL, NULL, FitOptions, InsufficientRows, fit_ols, transform_exponential

SUBCLUSTERS = "subclusters"
KFOLD = "kfold"


@dataclass(frozen=True)
class FoldPlan:
    folds: tuple[np.ndarray, ...]
    source: str
    seed: int | None = None
    degenerate: bool = False

    def __len__(self) -> int:
        return len(self.folds)


@dataclass(frozen=True)
class EtaResult:
    value: float
    fold_scores: tuple[float, ...]
    degenerate: bool = False


def _merge_small(folds: list[np.ndarray]) -> list[np.ndarray]:
    """Fold any fold of fewer than 2 members into its smaller neighbour."""
    folds = [np.asarray(f, dtype=np.int64) for f in folds if len(f)]
    while len(folds) > 1:
        small = [i for i, f in enumerate(folds) if f.size < 2]
        if not small:
            break
        i = small[0]
        neighbours = [j for j in (i - 1, i + 1) if 0 <= j < len(folds)]
        j = min(neighbours, key=lambda j: (folds[j].size, j))
        lo, hi = min(i, j), max(i, j)
        folds[lo] = np.sort(np.concatenate([folds[lo], folds[hi]]))
        del folds[hi]
    return folds


def cluster_seed(seed: int, cluster_id: str) -> list[int]:
    return [int(seed) & 0xFFFFFFFF, zlib.crc32(cluster_id.encode("utf-8"))]


def build_folds(cluster: Cluster, tree: HierarchyTree | None = None, k: int = 10,
                seed: int = 0) -> FoldPlan:
    if cluster.size < 2:
        return FoldPlan((cluster.members,), KFOLD, seed, degenerate=True)
    if tree is not None and len(cluster.children) >= 2:
        folds = _merge_small([tree[ch].members for ch in cluster.children])
        return FoldPlan(tuple(folds), SUBCLUSTERS, None, degenerate=len(folds) < 2)
    rng = np.random.default_rng(cluster_seed(seed, cluster.id))
    perm = rng.permutation(cluster.members)
    folds = _merge_small([np.sort(f) for f in np.array_split(perm, min(k, cluster.size))])
    return FoldPlan(tuple(folds), KFOLD, seed, degenerate=len(folds) < 2)


def pearson_corr(a, b) -> float:
    """Sample Pearson correlation; 0 when either side has (numerically) zero spread."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("pearson_corr needs two 1-D vectors of equal length")
    if a.size < 2:
        raise ValueError("pearson_corr needs at least 2 points")
    da = a - a.mean()
    db = b - b.mean()
    # spread below rounding level of the values counts as constant
    if _flat(a, da) or _flat(b, db):
        return 0.0
    r = float(np.dot(da, db) / np.sqrt(np.dot(da, da) * np.dot(db, db)))
    return min(1.0, max(-1.0, r))


def _flat(v: np.ndarray, centred: np.ndarray) -> bool:
    scale = max(1.0, float(np.max(np.abs(v))))
    return float(np.max(np.abs(centred))) <= 1e-12 * scale


def eta_details(cluster: Cluster, dataset: Dataset, tree: HierarchyTree | None = None,
                fit_options: FitOptions | None = None, seed: int = 0, k: int = 10,
                design: np.ndarray | None = None) -> EtaResult:
    """Homogeneity score with per-fold squared correlations.

    ``design`` may carry the already-transformed feature matrix for the
    exponential kind (so it is not recomputed per cluster).
    """
    options = fit_options or FitOptions()
    plan = build_folds(cluster, tree, k=k, seed=seed)
    if plan.degenerate:
        return EtaResult(0.0, (), degenerate=True)
    if design is None:
        design = dataset.features
        if options.kind == EXPONENTIAL:
            design = transform_exponential(design)
    y = dataset.target
    scores = []
    for fold in plan.folds:
        rest = np.setdiff1d(cluster.members, fold, assume_unique=True)
        # a constant (mean) predictor has zero correlation by convention
        if fold.size < 2 or options.kind == NULL:
            scores.append(0.0)
            continue
        try:
            model = fit_ols(design[rest], y[rest], options)
        except InsufficientRows:
            scores.append(0.0)
            continue
        pred = model.coefficients[0] + design[fold] @ model.coefficients[1:]
        scores.append(pearson_corr(y[fold], pred) ** 2)
    value = float(np.mean(scores))
    return EtaResult(min(1.0, max(0.0, value)), tuple(scores))


def eta(cluster: Cluster, dataset: Dataset, tree: HierarchyTree | None = None,
        fit_options: FitOptions | None = None, seed: int = 0, k: int = 10) -> float:
    return eta_details(cluster, dataset, tree, fit_options, seed, k).value
