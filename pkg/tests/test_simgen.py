import numpy as np
import pytest

from mdlpart import SimSpec, fit_ols, generate, validate_tree
from mdlpart.simgen import TYPES, _truncated_noise


@pytest.mark.parametrize("dataset_type, layers, truth_size", [
    ("type1", [1, 2, 8], 1), ("type2", [1, 2, 8], 2), ("type3", [1, 2, 8], 8),
    ("type4", [1, 3, 12, 24], 13), ("exponential", [1, 3, 12, 24], 13),
    ("polynomial", [1, 3, 12, 24], 13)])
def test_tree_shapes(dataset_type, layers, truth_size):
    ds, tree, truth = generate(SimSpec(dataset_type, d=4, leaf_size=5, seed=0))
    assert [len(layer) for layer in tree.layer_index] == layers
    assert ds.n == tree.n == 5 * layers[-1]
    assert len(truth.partition.cluster_ids) == truth_size
    assert validate_tree(tree, ds.n) == []
    assert ds.column_names == ("x1", "x2", "x3", "x4")


def test_type2_desk_instance_recovers_coefficients():
    ds, tree, truth = generate(SimSpec("type2", d=5, leaf_size=200, seed=3))
    assert ds.n == 1600
    for cid, g in truth.generators.items():
        idx = tree[cid].members
        m = fit_ols(ds.features[idx], ds.target[idx])
        expected = np.zeros(6)
        expected[0], expected[1 + g.feature] = g.c2, g.c1
        np.testing.assert_allclose(m.coefficients, expected, atol=1e-9)


def test_type4_truth_layers():
    _, tree, truth = generate(SimSpec("type4", d=3, leaf_size=2))
    layers = sorted(tree[c].layer for c in truth.partition)
    assert layers == [2] + [3] * 4 + [4] * 8


@pytest.mark.parametrize("seed", range(10))
def test_coefficient_ranges_and_sibling_features(seed):
    _, tree, truth = generate(SimSpec("type4", d=20, leaf_size=2, seed=seed))
    for g in truth.generators.values():
        assert 1 <= abs(g.c1) <= 5
        assert -5 <= g.c2 <= 5
    by_parent = {}
    for cid, g in truth.generators.items():
        by_parent.setdefault(tree[cid].parent, []).append(g.feature)
    for feats in by_parent.values():
        assert len(set(feats)) == len(feats)


def test_siblings_share_features_only_when_d_is_small():
    _, tree, truth = generate(SimSpec("type3", d=1, leaf_size=2, seed=2))
    gens = list(truth.generators.values())
    assert {g.feature for g in gens} == {0}
    by_parent = {}
    for cid, g in truth.generators.items():
        by_parent.setdefault(tree[cid].parent, []).append(g.c1)
    for slopes in by_parent.values():
        slopes = sorted(slopes)
        assert all(b - a >= 1 for a, b in zip(slopes, slopes[1:]))


def test_noise_is_truncated():
    rng = np.random.default_rng(0)
    e = _truncated_noise(rng, 2.0, 200_000)
    assert np.max(np.abs(e)) <= 8.0
    assert e.std() == pytest.approx(2.0, rel=0.02)
    assert not _truncated_noise(rng, 0.0, 5).any()


def test_nonlinear_generators():
    ds, tree, truth = generate(SimSpec("exponential", d=3, leaf_size=4, seed=1))
    for cid, g in truth.generators.items():
        idx = tree[cid].members
        x = ds.features[idx, g.feature]
        np.testing.assert_allclose(ds.target[idx], g.c1 * np.exp(x) + g.c2)
    ds, tree, truth = generate(SimSpec("polynomial", d=3, leaf_size=4, seed=1, poly_degree=2))
    for cid, g in truth.generators.items():
        idx = tree[cid].members
        x = ds.features[idx, g.feature]
        np.testing.assert_allclose(ds.target[idx], g.c1 * x ** 2 + g.c2)


def test_default_leaf_sizes():
    assert SimSpec("type1").rows_per_leaf == 10_000
    assert SimSpec("exponential").rows_per_leaf == 100


@pytest.mark.parametrize("kwargs", [dict(dataset_type="type9"), dict(d=0), dict(leaf_size=0),
                                    dict(noise_sd=-1), dict(coefficient_range=(0, 1))])
def test_spec_validation(kwargs):
    with pytest.raises(ValueError):
        SimSpec(**kwargs)


@pytest.mark.parametrize("dataset_type", TYPES)
def test_generation_is_deterministic(dataset_type):
    spec = SimSpec(dataset_type, d=3, leaf_size=3, noise_sd=0.5, seed=9)
    a, b = generate(spec), generate(spec)
    assert a[0].features.tobytes() == b[0].features.tobytes()
    assert a[0].target.tobytes() == b[0].target.tobytes()
    assert a[2].generators == b[2].generators
    other = generate(SimSpec(dataset_type, d=3, leaf_size=3, noise_sd=0.5, seed=10))
    assert other[0].target.tobytes() != a[0].target.tobytes()
