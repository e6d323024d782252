import numpy as np
import pytest
from scipy.special import expit

from hybridboost.baselines import (
    ForestConfig,
    GbtConfig,
    MlpConfig,
    fit_gbt,
    fit_mlp,
    fit_random_forest,
)
from hybridboost.baselines.mlp import init_params, loss_and_grad, pack, unpack
from hybridboost.baselines.tree import best_split, grow_tree
from hybridboost.boost import FitConfig, fit_boost, predict_proba
from hybridboost.errors import ConfigError, DivergenceError
from hybridboost.evaluation import auc


def gini_cost(labels):
    n = len(labels)
    if n == 0:
        return 0.0
    p = sum(labels) / n
    return n * 2 * p * (1 - p)


def cart_oracle(X, y, rows):
    """Plain recursive Gini CART grown to purity, as nested tuples."""
    labels = [y[i] for i in rows]
    if len(set(labels)) <= 1:
        return sum(labels) / len(labels)
    best = None
    for f in range(X.shape[1]):
        values = sorted({X[i, f] for i in rows})
        for a, b in zip(values, values[1:]):
            t = (a + b) / 2
            left = [i for i in rows if X[i, f] <= t]
            right = [i for i in rows if X[i, f] > t]
            cost = gini_cost([y[i] for i in left]) + gini_cost([y[i] for i in right])
            if best is None or cost < best[0] - 1e-12:
                best = (cost, f, t, left, right)
    if best is None or best[0] >= gini_cost(labels) - 1e-12:
        return sum(labels) / len(labels)
    _, f, t, left, right = best
    return (f, t, cart_oracle(X, y, left), cart_oracle(X, y, right))


def oracle_predict(node, x):
    while isinstance(node, tuple):
        f, t, left, right = node
        node = left if x[f] <= t else right
    return node


TEN_X = np.array(
    [[1, 0, 3], [2, 1, 1], [3, 0, 2], [4, 1, 5], [5, 0, 4],
     [6, 1, 1], [7, 0, 2], [8, 1, 3], [9, 0, 5], [10, 1, 4]], dtype=float
)
TEN_Y = np.array([0, 0, 1, 0, 1, 1, 1, 0, 1, 1], dtype=float)


def test_cart_matches_oracle_on_ten_rows():
    tree = grow_tree(TEN_X, TEN_Y, "gini")
    oracle = cart_oracle(TEN_X, TEN_Y, list(range(10)))
    assert tree.feature[0] == oracle[0] and tree.threshold[0] == oracle[1]
    grid = np.array([[a, b, c] for a in np.arange(0, 11.5, 0.5) for b in (0, 1) for c in range(0, 7)])
    assert np.array_equal(tree.predict(grid), [oracle_predict(oracle, x) for x in grid])
    assert np.array_equal(tree.predict(TEN_X), TEN_Y)


def test_single_tree_forest_matches_oracle_on_its_bootstrap():
    forest = fit_random_forest(TEN_X, TEN_Y, ForestConfig(ntree=1, mtry=3, seed=4))
    rows = [i for i in range(10) for _ in range(forest.inbag[0, i])]
    oracle = cart_oracle(TEN_X, TEN_Y, rows)
    expected = [float(oracle_predict(oracle, x) > 0.5) for x in TEN_X]
    assert np.array_equal(forest.predict_proba(TEN_X), expected)


def test_split_tie_goes_to_lowest_feature():
    X = np.array([[0, 0], [0, 0], [1, 1], [1, 1]], dtype=float)
    y = np.array([0, 0, 1, 1], dtype=float)
    f, t, _ = best_split(X, y, np.arange(4), [1, 0], "gini")
    assert (f, t) == (0, 0.5)


def test_forest_fits_copied_column():
    rng = np.random.default_rng(0)
    X = rng.integers(0, 2, size=(80, 5)).astype(float)
    y = X[:, 2].copy()
    forest = fit_random_forest(X, y, ForestConfig(ntree=25, mtry=5, seed=1))
    assert np.mean((forest.predict_proba(X) >= 0.5) == y) == 1.0


def test_forest_oob_auc_on_noise():
    aucs = []
    for seed in range(10):
        rng = np.random.default_rng(seed)
        X = rng.integers(0, 2, size=(120, 6)).astype(float)
        y = rng.integers(0, 2, 120).astype(float)
        forest = fit_random_forest(X, y, ForestConfig(ntree=60, mtry=3, seed=seed))
        oob = forest.oob_proba(X)
        ok = ~np.isnan(oob)
        aucs.append(auc(oob[ok], y[ok]))
    assert abs(np.mean(aucs) - 0.5) <= 0.1


def test_forest_config_and_determinism():
    X = np.random.default_rng(2).integers(0, 2, size=(40, 3)).astype(float)
    y = X[:, 0]
    with pytest.raises(ConfigError):
        fit_random_forest(X, y, ForestConfig(mtry=4))
    a = fit_random_forest(X, y, ForestConfig(ntree=10, mtry=2, seed=9)).predict_proba(X)
    b = fit_random_forest(X, y, ForestConfig(ntree=10, mtry=2, seed=9)).predict_proba(X)
    assert np.array_equal(a, b)
    assert np.all((a >= 0) & (a <= 1))


def _logit_data(seed, n=300):
    rng = np.random.default_rng(seed)
    X = rng.integers(0, 2, size=(n, 4)).astype(float)
    y = (rng.random(n) < expit(-0.5 + X @ [1.2, -0.8, 0.4, 0.0])).astype(float)
    return X, y


def test_gbt_zero_shrinkage_is_base_rate():
    X, y = _logit_data(0)
    gbt = fit_gbt(X, y, GbtConfig(trees=5, shrinkage=0.0))
    assert np.allclose(gbt.predict_proba(X), y.mean())


def test_gbt_deviance_is_non_increasing():
    X, y = _logit_data(1)
    path = np.array(fit_gbt(X, y, GbtConfig(trees=60, depth=3)).deviance_path)
    assert np.all(np.diff(path) <= 1e-9)


def test_gbt_stump_matches_boosted_single_learner():
    X, y = _logit_data(2, n=200)
    x = X[:, :1]
    gbt = fit_gbt(x, y, GbtConfig(trees=300, depth=1, shrinkage=0.5))
    boost = fit_boost(x, y, FitConfig(nu=0.5, alpha=1.0, learner_mode="mb"), mstop=500)
    assert np.allclose(gbt.predict_proba(x), predict_proba(boost, x), atol=1e-3)


def test_mlp_gradient_matches_finite_differences():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(8, 3))
    y = rng.integers(0, 2, 8).astype(float)
    params = init_params(3, 4, rng)
    theta = pack(params)
    _, grads = loss_and_grad(params, X, y)
    analytic = pack(grads)
    h = 1e-5
    numeric = np.empty_like(theta)
    for k in range(len(theta)):
        e = np.zeros_like(theta)
        e[k] = h
        lp, _ = loss_and_grad(unpack(theta + e, 3, 4), X, y)
        lm, _ = loss_and_grad(unpack(theta - e, 3, 4), X, y)
        numeric[k] = (lp - lm) / (2 * h)
    assert np.max(np.abs(analytic - numeric)) < 1e-5


def test_mlp_config_and_separable_data():
    with pytest.raises(ConfigError):
        MlpConfig(hidden_units=0)
    with pytest.raises(ConfigError):
        MlpConfig(activation="relu")
    X = np.r_[np.zeros((20, 2)), np.ones((20, 2))] + np.random.default_rng(4).normal(0, 0.1, (40, 2))
    y = np.r_[np.zeros(20), np.ones(20)]
    mlp = fit_mlp(X, y, MlpConfig(epochs=1500))
    p = mlp.predict_proba(X)
    assert np.mean((p >= 0.5) == y) == 1.0
    assert np.all((p >= 0) & (p <= 1))
    assert np.array_equal(p, fit_mlp(X, y, MlpConfig(epochs=1500)).predict_proba(X))


def test_mlp_reports_divergence_with_hint():
    rng = np.random.default_rng(5)
    X = rng.normal(size=(30, 3))
    y = (X[:, 0] > 0).astype(float)
    with np.errstate(all="ignore"), pytest.raises(DivergenceError, match="learning_rate"):
        fit_mlp(X, y, MlpConfig(learning_rate=1e308, epochs=50))
