"""Partition search over a multi-resolution cluster set.

``find_maximal_homogeneous_partition`` walks the hierarchy top-down and keeps
a cluster when one model for the whole cluster is a shorter code than one
model per child *and* the cluster is homogeneous enough under cross
validation. ``greedy_partition`` is the RMSE-ordered baseline. Both resolve
each selected cluster to its fitted model or the mean model, whichever is the
shorter code.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product
from typing import Iterator, Mapping

import numpy as np

from .core import Cluster, Dataset, HierarchyTree, InferenceReport, Partition, restrict
from .encoding import bits_vector, cluster_irr_from_bits, model_irr
from .homogeneity import eta_details
from .regression import (EXPONENTIAL, NULL, FitOptions, InsufficientRows, RegressionModel,
                         fit_null, fit_ols, transform_exponential)

DEFAULT_PARTITION_CAP = 10**6


@dataclass(frozen=True)
class SearchConfig:
    gamma: float = 0.05
    fit_options: FitOptions = field(default_factory=FitOptions)
    seed: int = 0
    compute_eta_everywhere: bool = False
    folds: int = 10

    def __post_init__(self):
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError(f"gamma must lie in [0, 1], got {self.gamma}")


class ClusterModels:
    """Fits and code lengths for every cluster of a tree, each computed once."""

    def __init__(self, dataset: Dataset, tree: HierarchyTree, config: SearchConfig):
        tree.check(dataset.n)
        self.dataset = dataset
        self.tree = tree
        self.config = config
        self.options = config.fit_options
        self.design = dataset.features
        if self.options.kind == EXPONENTIAL:
            self.design = transform_exponential(dataset.features)
        self.models: dict[str, RegressionModel] = {}
        self.nulls: dict[str, RegressionModel] = {}
        self.residual_bits: dict[str, int] = {}
        self.null_residual_bits: dict[str, int] = {}
        self.sq_error: dict[str, float] = {}
        self._model_irr: dict[str, float] = {}
        self._cluster_irr: dict[str, float] = {}
        self._eta: dict[str, float] = {}
        self.degenerate: set[str] = set()
        for c in tree:
            self._fit(c)

    def _fit(self, c: Cluster) -> None:
        idx = c.members
        y = self.dataset.target[idx]
        null = fit_null(y, c.id)
        model = null
        if self.options.kind != NULL:
            try:
                m = fit_ols(self.design[idx], y, self.options, c.id)
                model = RegressionModel(self.options.kind, m.coefficients, c.id, m.n_rows)
            except InsufficientRows:
                pass
        if model.kind == NULL:
            resid = y - null.coefficients[0]
        else:
            resid = y - (model.coefficients[0] + self.design[idx] @ model.coefficients[1:])
        self.models[c.id] = model
        self.nulls[c.id] = null
        self.residual_bits[c.id] = bits_vector(resid)
        self.null_residual_bits[c.id] = bits_vector(y - null.coefficients[0])
        self.sq_error[c.id] = float(np.dot(resid, resid))

    def rmse(self, cid: str) -> float:
        return math.sqrt(self.sq_error[cid] / self.tree[cid].size)

    def model_irr(self, cid: str) -> float:
        """Reduction ratio of the cluster's fitted model over its mean model."""
        if cid not in self._model_irr:
            r1, r2 = self.null_residual_bits[cid], self.residual_bits[cid]
            b1, b2 = self.nulls[cid].param_bits, self.models[cid].param_bits
            self._model_irr[cid] = (r1 - r2 + b1 - b2) / (r1 + b1)
        return self._model_irr[cid]

    def cluster_irr(self, cid: str) -> float:
        """Reduction ratio of the parent's single model over its children's models."""
        if cid not in self._cluster_irr:
            c = self.tree[cid]
            r_children = sum(self.residual_bits[ch] for ch in c.children)
            self._cluster_irr[cid] = cluster_irr_from_bits(
                r_children, self.residual_bits[cid], len(c.children), self.models[cid].param_bits)
        return self._cluster_irr[cid]

    def eta(self, cid: str) -> float:
        if cid not in self._eta:
            res = eta_details(self.tree[cid], self.dataset, self.tree, self.options,
                              seed=self.config.seed, k=self.config.folds, design=self.design)
            self._eta[cid] = res.value
            if res.degenerate:
                self.degenerate.add(cid)
        return self._eta[cid]

    def optimal_model(self, cid: str) -> RegressionModel:
        return self.models[cid] if self.model_irr(cid) > 0 else self.nulls[cid]

    def report(self, algorithm: str, selected: list[str], gamma: float) -> InferenceReport:
        for cid in selected:
            self.eta(cid)
        if self.config.compute_eta_everywhere:
            for cid in self.tree.ids:
                self.eta(cid)
        for cid in self.tree.ids:
            self.model_irr(cid)
        partition = Partition(self.tree, selected)
        order = {cid: i for i, cid in enumerate(self.tree.ids)}

        def ordered(d: Mapping[str, float]) -> dict[str, float]:
            return {k: d[k] for k in sorted(d, key=order.__getitem__)}

        return InferenceReport(
            algorithm=algorithm,
            partition=partition,
            models=dict(self.models),
            optimal_models={cid: self.optimal_model(cid) for cid in partition},
            eta=ordered(self._eta),
            model_irr=ordered(self._model_irr),
            cluster_irr=ordered(self._cluster_irr),
            gamma_used=gamma,
            gamma_prime=min(self._eta[cid] for cid in selected),
            kind=self.options.kind,
            seed=self.config.seed,
            extras={"degenerate_eta": sorted(self.degenerate, key=order.__getitem__)},
        )


def find_maximal_homogeneous_partition(dataset: Dataset, tree: HierarchyTree,
                                       config: SearchConfig | None = None) -> InferenceReport:
    """Top-down search for the maximal homogeneous partition.

    A cluster with children is kept when its cluster reduction ratio is
    positive and its homogeneity is at least ``config.gamma``; a cluster
    without children is kept by default. Nothing under a kept cluster is
    visited again.
    """
    config = config or SearchConfig()
    cm = ClusterModels(dataset, tree, config)
    selected: list[str] = []
    covered: set[str] = set()  # kept clusters and everything below them
    for layer in tree.layer_index:
        for cid in layer:
            cm.model_irr(cid)
            c = tree[cid]
            if cid in covered or (c.parent is not None and c.parent in covered):
                covered.add(cid)
                continue
            if c.children:
                # short-circuit: the reduction ratio is cheap, homogeneity is not
                if cm.cluster_irr(cid) > 0 and cm.eta(cid) >= config.gamma:
                    selected.append(cid)
                    covered.add(cid)
            else:
                selected.append(cid)
                covered.add(cid)
    return cm.report("mdl", selected, config.gamma)


def greedy_partition(dataset: Dataset, tree: HierarchyTree,
                     config: SearchConfig | None = None) -> InferenceReport:
    """Keep clusters in ascending order of in-sample RMSE.

    A cluster is skipped when a kept cluster contains it or overlaps it; any
    individual still uncovered afterwards is assigned its last-layer cluster.
    """
    config = config or SearchConfig()
    cm = ClusterModels(dataset, tree, config)
    order = sorted(tree.ids, key=lambda cid: (cm.rmse(cid), tree.position(cid)))
    kept = np.zeros(dataset.n, dtype=bool)
    selected: list[str] = []
    chosen: set[str] = set()
    for cid in order:
        if any(a in chosen for a in tree.ancestors(cid)):
            continue
        members = tree[cid].members
        if kept[members].any():
            continue
        selected.append(cid)
        chosen.add(cid)
        kept[members] = True
    if not kept.all():
        for i in np.flatnonzero(~kept):
            if not kept[i]:
                cid = tree.cluster_of(int(i), tree.n_layers)
                selected.append(cid)
                kept[tree[cid].members] = True
    return cm.report("greedy", selected, config.gamma)


def select_optimal_model(cluster: Cluster, models: Mapping[str, RegressionModel],
                         dataset: Dataset) -> RegressionModel:
    """The cluster's fitted model if it beats the mean model on code length, else the mean."""
    rows = restrict(dataset, cluster)
    null = fit_null(rows[1], cluster.id)
    fitted = models[cluster.id]
    return fitted if model_irr(rows, null, fitted) > 0 else null


class PartitionCapExceeded(RuntimeError):
    def __init__(self, estimate: int, cap: int):
        self.estimate = estimate
        self.cap = cap
        super().__init__(f"tree has {estimate} partitions, above the cap of {cap}")


def count_mrc_partitions(tree: HierarchyTree) -> int:
    """Number of antichains that cover every individual exactly once."""
    counts: dict[str, int] = {}
    for layer in reversed(tree.layer_index):
        for cid in layer:
            c = tree[cid]
            counts[cid] = 1 + math.prod(counts[ch] for ch in c.children) if c.children else 1
    return math.prod(counts[c.id] for c in tree.roots())


def enumerate_mrc_partitions(tree: HierarchyTree,
                             cap: int = DEFAULT_PARTITION_CAP) -> Iterator[Partition]:
    """Every partition of the population into tree clusters, each exactly once.

    Raises :class:`PartitionCapExceeded` up front when the count exceeds ``cap``.
    """
    estimate = count_mrc_partitions(tree)
    if estimate > cap:
        raise PartitionCapExceeded(estimate, cap)

    def options(cid: str) -> Iterator[tuple[str, ...]]:
        yield (cid,)
        children = tree[cid].children
        if children:
            for combo in product(*(list(options(ch)) for ch in children)):
                yield tuple(x for part in combo for x in part)

    def generate() -> Iterator[Partition]:
        for combo in product(*(list(options(r.id)) for r in tree.roots())):
            yield Partition(tree, (x for part in combo for x in part))

    return generate()
