"""Two-part MDL code lengths and the information-reduction ratios built on them.

Every quantity is an integer number of bits. A real number ``y`` costs
``ceil(log2|y|) + 1`` bits when ``|y| >= 1`` and a single bit otherwise.
"""

from __future__ import annotations

import math
from typing import TYPE_CHECKING, Mapping, Sequence

import numpy as np

from .core import Dataset, HierarchyTree, Partition, StructureError, restrict

if TYPE_CHECKING:
    from .regression import RegressionModel


def bits_real(y: float) -> int:
    """Bit length of one real number; exact at powers of two."""
    y = float(y)
    if not math.isfinite(y):
        raise ValueError(f"cannot encode non-finite value {y!r}")
    a = abs(y)
    if a < 1.0:
        return 1
    m, e = math.frexp(a)  # a = m * 2**e, 0.5 <= m < 1
    return (e - 1 if m == 0.5 else e) + 1


def bits_array(v) -> np.ndarray:
    """Elementwise :func:`bits_real` as an int64 array."""
    a = np.abs(np.asarray(v, dtype=float))
    if not np.all(np.isfinite(a)):
        raise ValueError("cannot encode non-finite values")
    m, e = np.frexp(a)
    ceil_log2 = np.where(m == 0.5, e - 1, e).astype(np.int64)
    return np.where(a >= 1.0, ceil_log2 + 1, 1).astype(np.int64)


def bits_vector(v) -> int:
    """Total bits of every entry of a vector or matrix (0 when empty)."""
    v = np.asarray(v, dtype=float)
    if v.size == 0:
        return 0
    return int(bits_array(v).sum())


def model_bits(model: RegressionModel) -> int:
    # null_mean stores [ybar], so the same sum covers both kinds
    return bits_vector(model.coefficients)


def residual_bits(rows: tuple[np.ndarray, np.ndarray], model: RegressionModel) -> int:
    """Bits for the residuals ``y - h(x)`` on the given rows.

    The ``sum bits(x_i)`` term is left out: it is identical for every model
    evaluated on the same rows.
    """
    X, y = rows
    return bits_vector(np.asarray(y) - model.predict(X))


def partition_code_length(partition: Partition, models: Mapping[str, RegressionModel],
                          dataset: Dataset, include_x: bool = False) -> int:
    total = 0
    for cid in partition:
        if cid not in models:
            raise StructureError(f"no model for partition cluster {cid!r}")
        m = models[cid]
        total += model_bits(m) + residual_bits(restrict(dataset, partition.tree[cid]), m)
    if include_x:
        total += bits_vector(dataset.features)
    return total


def model_irr(rows, model_1: RegressionModel, model_2: RegressionModel) -> float:
    """Model information reduction ratio of ``model_2`` relative to ``model_1``.

    Positive when ``model_2`` encodes the rows more compactly; at most 1.
    """
    r1, r2 = residual_bits(rows, model_1), residual_bits(rows, model_2)
    b1, b2 = model_bits(model_1), model_bits(model_2)
    return _ratio(r1 - r2 + b1 - b2, r1 + b1)


def cluster_irr(children: Sequence[str], parent: str, tree: HierarchyTree,
                models: Mapping[str, RegressionModel], dataset: Dataset,
                c_h: int | None = None) -> float:
    """Cluster information reduction ratio of one parent model against child models.

    Each side is scored with its own fitted models; every model is charged the
    same ``c_h`` bits, by default the parent's model cost. Positive when the
    single parent model is the shorter code.
    """
    union = np.concatenate([tree[c].members for c in children]) if children else np.empty(0, int)
    if union.size != tree[parent].size or not np.array_equal(np.sort(union), tree[parent].members):
        raise StructureError(f"children do not exactly cover cluster {parent!r}")
    if c_h is None:
        c_h = model_bits(models[parent])
    r_children = sum(residual_bits(restrict(dataset, tree[c]), models[c]) for c in children)
    r_parent = residual_bits(restrict(dataset, tree[parent]), models[parent])
    return cluster_irr_from_bits(r_children, r_parent, len(children), c_h)


def cluster_irr_from_bits(r_children: int, r_parent: int, n_children: int, c_h: int) -> float:
    return _ratio(r_children - r_parent + c_h * (n_children - 1), r_children + c_h * n_children)


def _ratio(num: int, den: int) -> float:
    if den <= 0:
        raise ZeroDivisionError("code length denominator must be positive")
    return num / den
