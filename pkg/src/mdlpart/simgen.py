"""Synthetic multi-resolution regression benchmarks with a known maximal homogeneous partition.

Tree shapes:

* ``type1``-``type3``: root -> 2 nodes -> 4 leaves each (8 leaves). The true
  partition is the root, the two layer-2 nodes, or the eight leaves.
* ``type4``: root -> A, B, C -> 4 nodes each -> 2 leaves each (24 leaves).
  The true partition is A, B's four layer-3 nodes and C's eight leaves
  (13 clusters over three layers).
* ``exponential`` / ``polynomial``: the type-4 tree with ``c1 * exp(x_j) + c2``
  or ``c1 * x_j**degree + c2`` as the generating functions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import Dataset, HierarchyTree, Partition

TYPES = ("type1", "type2", "type3", "type4", "exponential", "polynomial")
LINEAR_TYPES = TYPES[:4]


@dataclass(frozen=True)
class SimSpec:
    dataset_type: str = "type1"
    d: int = 20
    leaf_size: int | None = None  # None -> 10,000 for linear types, 100 otherwise
    noise_sd: float = 0.0
    poly_degree: int = 3
    seed: int = 0
    coefficient_range: tuple[float, float] = (1.0, 5.0)
    intercept_range: tuple[float, float] = (-5.0, 5.0)

    def __post_init__(self):
        if self.dataset_type not in TYPES:
            raise ValueError(f"unknown dataset type {self.dataset_type!r}; expected one of {TYPES}")
        if self.d < 1:
            raise ValueError("d must be >= 1")
        if self.leaf_size is not None and self.leaf_size < 1:
            raise ValueError("leaf_size must be >= 1")
        if self.noise_sd < 0:
            raise ValueError("noise_sd must be >= 0")
        lo, hi = self.coefficient_range
        if not 0 < lo <= hi:
            raise ValueError("coefficient_range must satisfy 0 < low <= high")

    @property
    def rows_per_leaf(self) -> int:
        if self.leaf_size is not None:
            return self.leaf_size
        return 10_000 if self.dataset_type in LINEAR_TYPES else 100

    @property
    def function_kind(self) -> str:
        return {"exponential": "exponential", "polynomial": "polynomial"}.get(
            self.dataset_type, "linear")


@dataclass(frozen=True)
class Generator:
    feature: int  # 0-based column index
    c1: float
    c2: float
    kind: str = "linear"
    degree: int = 1

    def __call__(self, X: np.ndarray) -> np.ndarray:
        x = X[:, self.feature]
        if self.kind == "exponential":
            return self.c1 * np.exp(x) + self.c2
        if self.kind == "polynomial":
            return self.c1 * x ** self.degree + self.c2
        return self.c1 * x + self.c2


@dataclass
class GroundTruth:
    partition: Partition
    generators: dict[str, Generator] = field(default_factory=dict)
    spec: SimSpec | None = None


def tree_labels(dataset_type: str, leaf_size: int) -> tuple[list[tuple[str, ...]], list[str]]:
    """Per-individual label paths and the ids of the true partition's clusters."""
    if dataset_type in ("type1", "type2", "type3"):
        leaves = [("0", a, b) for a in "01" for b in "0123"]
        truth = {"type1": ["0"],
                 "type2": ["0/0", "0/1"],
                 "type3": ["/".join(leaf) for leaf in leaves]}[dataset_type]
    else:
        leaves = [("0", a, b, c) for a in "012" for b in "0123" for c in "01"]
        truth = (["0/0"]
                 + [f"0/1/{b}" for b in "0123"]
                 + [f"0/2/{b}/{c}" for b in "0123" for c in "01"])
    labels = [leaf for leaf in leaves for _ in range(leaf_size)]
    return labels, truth


def assign_coefficients(spec: SimSpec, rng: np.random.Generator, truth_ids: list[str],
                        tree: HierarchyTree) -> dict[str, Generator]:
    """Draw ``(feature, c1, c2)`` for each true cluster.

    Slopes are drawn from ``±coefficient_range`` and intercepts from
    ``intercept_range``. True clusters sharing a parent get distinct active
    features while ``d`` allows it; otherwise they are redrawn until their
    ``(feature, c1)`` pairs differ, with slopes at least 1 apart on a shared
    feature.
    """
    lo, hi = spec.coefficient_range
    ilo, ihi = spec.intercept_range
    kind = spec.function_kind
    degree = spec.poly_degree if kind == "polynomial" else 1
    groups: dict[str | None, list[str]] = {}
    for cid in truth_ids:
        groups.setdefault(tree[cid].parent, []).append(cid)
    out: dict[str, Generator] = {}
    for parent in groups:
        siblings = groups[parent]
        distinct_features = len(siblings) <= spec.d
        drawn: list[Generator] = []
        for cid in siblings:
            while True:
                g = Generator(
                    feature=int(rng.integers(spec.d)),
                    c1=float(rng.choice([-1.0, 1.0]) * rng.uniform(lo, hi)),
                    c2=float(rng.uniform(ilo, ihi)),
                    kind=kind, degree=degree)
                if distinct_features:
                    clash = any(g.feature == o.feature for o in drawn)
                else:
                    clash = any(g.feature == o.feature and abs(g.c1 - o.c1) < 1.0 for o in drawn)
                if not clash:
                    break
            drawn.append(g)
            out[cid] = g
    return out


def _truncated_noise(rng: np.random.Generator, sd: float, size: int) -> np.ndarray:
    if sd == 0:
        return np.zeros(size)
    e = rng.normal(0.0, sd, size)
    bad = np.abs(e) > 4 * sd
    while bad.any():
        e[bad] = rng.normal(0.0, sd, int(bad.sum()))
        bad = np.abs(e) > 4 * sd
    return e


def generate(spec: SimSpec) -> tuple[Dataset, HierarchyTree, GroundTruth]:
    rng = np.random.default_rng(spec.seed)
    shape = "type4" if spec.dataset_type in ("exponential", "polynomial") else spec.dataset_type
    labels, truth_ids = tree_labels(shape, spec.rows_per_leaf)
    tree = HierarchyTree.from_labels(labels)
    n = len(labels)
    generators = assign_coefficients(spec, rng, truth_ids, tree)
    X = rng.standard_normal((n, spec.d))
    y = np.empty(n)
    for cid in truth_ids:
        idx = tree[cid].members
        y[idx] = generators[cid](X[idx])
    y += _truncated_noise(rng, spec.noise_sd, n)
    dataset = Dataset(X, y, column_names=tuple(f"x{j + 1}" for j in range(spec.d)),
                      ids=tuple(str(i) for i in range(n)))
    truth = GroundTruth(Partition(tree, truth_ids), generators, spec)
    return dataset, tree, truth
