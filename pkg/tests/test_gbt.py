import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dayahead import gbt
from dayahead.features import FeatureMatrix

from oracles import brute_force_split


def matrix(X, y):
    X = np.asarray(X, dtype=float)
    ts = np.arange(len(y)).astype("datetime64[h]")
    return FeatureMatrix(X, y, tuple(f"f{i}" for i in range(X.shape[1])), ts)


def random_node(rng, nan_rate=0.0, integer=False):
    n = int(rng.integers(2, 9))
    F = int(rng.integers(1, 4))
    if integer:
        X = rng.integers(0, 4, size=(n, F)).astype(float)
        g = rng.integers(-3, 4, size=n).astype(float)
    else:
        X = rng.normal(size=(n, F)).round(2)
        g = rng.normal(size=n)
    if nan_rate:
        X[rng.random(X.shape) < nan_rate] = np.nan
    return X, g, np.ones(n)


def assert_same_split(ours, oracle):
    if oracle is None:
        assert ours is None
        return
    assert ours is not None
    f, thr, dl, gain = oracle
    assert (ours.feature, ours.threshold, ours.default_left) == (f, thr, dl)
    assert ours.gain == pytest.approx(gain, rel=1e-9, abs=1e-12)


def test_root_split_matches_enumeration_on_random_nodes():
    rng = np.random.default_rng(7)
    for trial in range(600):
        X, g, h = random_node(rng, integer=trial % 2 == 0)
        lam = float(rng.choice([0.0, 0.1, 1.0]))
        gamma = float(rng.choice([0.0, 0.5]))
        assert_same_split(gbt.best_split(X, g, h, lam, gamma), brute_force_split(X, g, h, lam, gamma))


def test_root_split_matches_enumeration_with_missing_values():
    rng = np.random.default_rng(11)
    for trial in range(400):
        X, g, h = random_node(rng, nan_rate=0.25, integer=trial % 2 == 0)
        h = rng.uniform(0.5, 2.0, size=len(g))
        lam = float(rng.choice([0.0, 0.1, 1.0]))
        gamma = float(rng.choice([0.0, 0.5]))
        mcw = float(rng.choice([0.0, 1.0, 2.0]))
        alpha = float(rng.choice([0.0, 0.3]))
        ours = gbt.best_split(X, g, h, lam, gamma, mcw, alpha)
        assert_same_split(ours, brute_force_split(X, g, h, lam, gamma, mcw, alpha))


def test_ties_go_to_lowest_feature_then_lowest_threshold():
    # both columns separate the rows identically
    X = np.array([[0.0, 5.0], [1.0, 6.0], [2.0, 7.0], [3.0, 8.0]])
    g = np.array([-1.0, -1.0, 1.0, 1.0])
    split = gbt.best_split(X, g, np.ones(4), reg_lambda=0.0)
    assert (split.feature, split.threshold) == (0, 1.5)
    # symmetric gradients: thresholds 0.5 and 2.5 both score 4/3
    X = np.array([[0.0], [1.0], [2.0], [3.0]])
    g = np.array([-1.0, 1.0, 1.0, -1.0])
    split = gbt.best_split(X, g, np.ones(4), reg_lambda=0.0)
    assert split.threshold == 0.5
    assert split.gain == pytest.approx(0.5 * (1 + 1 / 3))


def test_no_split_on_constant_gradient_or_constant_feature():
    X = np.arange(6, dtype=float)[:, None]
    assert gbt.best_split(X, np.full(6, 0.5), np.ones(6)) is None
    X = np.ones((6, 2))
    assert gbt.best_split(X, np.arange(6.0), np.ones(6)) is None


def test_threshold_is_midpoint_and_strict_less_goes_left():
    X = np.array([[1.0], [3.0], [3.0], [10.0]])
    split = gbt.best_split(X, np.array([-1.0, 1.0, 1.0, 1.0]), np.ones(4), reg_lambda=0.0)
    assert split.threshold == 2.0
    tree = gbt.grow_tree(X, np.array([-1.0, 1.0, 1.0, 1.0]), np.ones(4), max_depth=1)
    leaves = tree.apply(np.array([[1.999], [2.0], [2.001]]))
    assert leaves[0] != leaves[1] and leaves[1] == leaves[2]


def test_leaf_weight_closed_form():
    assert gbt.leaf_weight(4.0, 3.0, 1.0) == -1.0
    assert gbt.leaf_weight(-4.0, 3.0, 1.0, reg_alpha=2.0) == 0.5
    assert gbt.leaf_weight(1.5, 3.0, 1.0, reg_alpha=2.0) == 0.0
    with pytest.raises(ValueError):
        gbt.leaf_weight(1.0, 0.0, 0.0)


def test_missing_values_follow_learned_default():
    # rows with NaN behave like the high group, so they should go right with it
    X = np.array([[0.0], [0.1], [5.0], [5.1], [np.nan], [np.nan]])
    g = np.array([-1.0, -1.0, 1.0, 1.0, 1.0, 1.0])
    split = gbt.best_split(X, g, np.ones(6), reg_lambda=0.0)
    assert split.default_left is False
    split = gbt.best_split(X, -g * np.array([1, 1, 1, 1, -1, -1]), np.ones(6), reg_lambda=0.0)
    assert split.default_left is True
    tree = gbt.grow_tree(X, g, np.ones(6), max_depth=1)
    pred = tree.predict(np.array([[np.nan], [9.0]]))
    assert pred[0] == pred[1]


def test_fixed_structure_weights_shrink_as_lambda_grows():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(200, 3))
    g = rng.normal(size=200) + 2 * (X[:, 0] > 0)
    h = np.ones(200)
    tree = gbt.grow_tree(X, g, h, max_depth=3, reg_lambda=0.0)
    leaf_of = tree.apply(X)
    previous = None
    for lam in np.linspace(0.0, 10.0, 21):
        w = np.array([gbt.leaf_weight(g[leaf_of == leaf].sum(), h[leaf_of == leaf].sum(), lam)
                      for leaf in tree.leaves()])
        if previous is not None:
            assert np.all(np.abs(w) <= np.abs(previous))
        previous = w


def test_alpha_above_every_gradient_sum_gives_zero_tree():
    rng = np.random.default_rng(5)
    X = rng.normal(size=(100, 3))
    g = rng.normal(size=100)
    alpha = np.abs(g).sum() + 1.0
    tree = gbt.grow_tree(X, g, np.ones(100), max_depth=4, reg_alpha=alpha)
    assert tree.n_leaves == 1
    assert np.all(tree.predict(X) == 0.0)


def test_fit_training_loss_never_increases():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(500, 4))
    y = np.sin(X[:, 0]) + X[:, 1] ** 2 + 0.1 * rng.normal(size=500)
    params = gbt.GbtHyperParams(n_estimators=100, learning_rate=0.1, max_depth=3, reg_lambda=1.0)
    model = gbt.fit(matrix(X, y), params)
    losses = [np.mean((y - model.predict(X, n_trees=k)) ** 2) for k in range(101)]
    assert all(b <= a + 1e-12 for a, b in zip(losses, losses[1:]))


def test_prediction_is_base_plus_scaled_tree_sum():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(80, 2))
    y = X[:, 0] * 3 + 1
    model = gbt.fit(matrix(X, y), gbt.GbtHyperParams(n_estimators=7, learning_rate=0.3, max_depth=2))
    assert model.base_score == pytest.approx(y.mean())
    manual = model.base_score + 0.3 * sum(t.predict(X) for t in model.trees)
    np.testing.assert_allclose(model.predict(X), manual, rtol=0, atol=1e-12)


def test_zero_depth_tree_predicts_the_mean_shift():
    y = np.array([1.0, 2.0, 3.0, 6.0])
    X = np.arange(4.0)[:, None]
    model = gbt.fit(matrix(X, y), gbt.GbtHyperParams(n_estimators=1, max_depth=0, reg_lambda=0.0))
    np.testing.assert_allclose(model.predict(X), np.full(4, 3.0))


@settings(max_examples=30, deadline=None)
@given(
    depth=st.integers(0, 5),
    mcw=st.sampled_from([0.0, 1.0, 3.0, 10.0]),
    seed=st.integers(0, 10_000),
)
def test_grown_trees_respect_depth_and_child_weight(depth, mcw, seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(60, 3))
    g = rng.normal(size=60)
    tree = gbt.grow_tree(X, g, np.ones(60), max_depth=depth, reg_lambda=1.0, min_child_weight=mcw)
    assert tree.depth <= depth
    covers = tree.cover[tree.leaves()]
    if tree.n_leaves > 1:
        assert covers.min() >= mcw
    assert covers.sum() == 60


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000), lam=st.sampled_from([0.0, 1.0, 5.0]))
def test_leaf_values_equal_closed_form_on_their_rows(seed, lam):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(50, 2))
    g = rng.normal(size=50)
    h = rng.uniform(0.5, 1.5, size=50)
    tree = gbt.grow_tree(X, g, h, max_depth=3, reg_lambda=lam)
    leaf_of = tree.apply(X)
    for leaf in tree.leaves():
        rows = leaf_of == leaf
        expected = gbt.leaf_weight(g[rows].sum(), h[rows].sum(), lam)
        assert tree.value[leaf] == pytest.approx(expected, rel=1e-9, abs=1e-12)


def test_subsampled_fits_are_reproducible_per_seed():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(300, 5))
    y = X @ rng.normal(size=5)
    params = gbt.GbtHyperParams(n_estimators=20, subsample=0.7, colsample_bytree=0.6, seed=42)
    a = gbt.fit(matrix(X, y), params)
    b = gbt.fit(matrix(X, y), params)
    c = gbt.fit(matrix(X, y), params.replace(seed=43))
    assert a.dumps() == b.dumps()
    assert a.dumps() != c.dumps()


def test_early_stopping_keeps_best_round_only():
    rng = np.random.default_rng(4)
    X = rng.normal(size=(400, 2))
    y = X[:, 0] + rng.normal(size=400)
    train, val = matrix(X[:300], y[:300]), matrix(X[300:], y[300:])
    params = gbt.GbtHyperParams(n_estimators=500, learning_rate=0.3, max_depth=6, early_stopping_patience=5)
    model = gbt.fit(train, params, validation=val)
    best = int(np.argmin(model.eval_history)) + 1
    assert model.best_iteration == best
    assert len(model.trees) == best + 5
    np.testing.assert_array_equal(model.predict(X), model.predict(X, n_trees=best))
    with pytest.raises(ValueError):
        gbt.fit(train, params)


def test_model_json_round_trip(tmp_path):
    rng = np.random.default_rng(6)
    X = rng.normal(size=(100, 3))
    X[::7, 1] = np.nan
    y = rng.normal(size=100)
    model = gbt.fit(matrix(X, y), gbt.GbtHyperParams(n_estimators=5, max_depth=3))
    path = tmp_path / "m.json"
    model.save(path)
    again = gbt.GbtModel.load(path)
    assert again.dumps() == model.dumps()
    np.testing.assert_array_equal(again.predict(X), model.predict(X))
    doc = json.loads(path.read_text())
    doc["format"] = "something-else"
    with pytest.raises(ValueError):
        gbt.GbtModel.from_dict(doc)


def test_predict_rejects_wrong_columns():
    X = np.arange(20.0).reshape(10, 2)
    model = gbt.fit(matrix(X, np.arange(10.0)), gbt.GbtHyperParams(n_estimators=2))
    with pytest.raises(ValueError):
        model.predict(np.ones((3, 3)))


def test_hyperparameter_validation():
    with pytest.raises(ValueError):
        gbt.GbtHyperParams(learning_rate=0.0)
    with pytest.raises(ValueError):
        gbt.GbtHyperParams(subsample=1.5)
    with pytest.raises(ValueError):
        gbt.GbtHyperParams(reg_lambda=-1)
    with pytest.raises(ValueError):
        gbt.GbtHyperParams.from_dict({"eta": 0.1})


def test_gradients_for_both_losses():
    g, h = gbt.gradients(np.array([1.0, 2.0]), np.array([3.0, 1.0]))
    np.testing.assert_array_equal(g, [2.0, -1.0])
    np.testing.assert_array_equal(h, [1.0, 1.0])
    g, _ = gbt.gradients(np.array([1.0, 2.0]), np.array([3.0, 1.0]), "absolute")
    np.testing.assert_array_equal(g, [1.0, -1.0])
