import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from mdlpart import HierarchyTree  # noqa: E402


def three_layer_labels(leaf_size=1):
    """root -> 2 -> 4 leaves each: 8 leaves of ``leaf_size`` rows."""
    return [("0", a, b) for a in "01" for b in "0123" for _ in range(leaf_size)]


def binary_labels(leaf_size=1):
    """root -> 2 -> 2 leaves each (1 + 2 + 4 clusters)."""
    return [("0", a, b) for a in "01" for b in "01" for _ in range(leaf_size)]


def random_labels(rng, n, n_layers, max_branch=3):
    """Random nested labels: each layer splits its parent's rows into up to ``max_branch`` groups."""
    labels = [["0"] for _ in range(n)]
    groups = [list(range(n))]
    for _ in range(1, n_layers):
        new_groups = []
        for g in groups:
            k = int(rng.integers(1, max_branch + 1))
            k = min(k, len(g))
            cuts = np.sort(rng.choice(np.arange(1, len(g)), size=k - 1, replace=False)) if k > 1 else []
            perm = list(rng.permutation(g))
            for j, part in enumerate(np.split(np.array(perm), cuts)):
                for i in part:
                    labels[i].append(str(j))
                new_groups.append(list(part))
        groups = new_groups
    return labels


@pytest.fixture
def tree8():
    return HierarchyTree.from_labels(three_layer_labels())


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
