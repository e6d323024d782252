import numpy as np
import pytest
from scipy.special import expit

from hybridboost.baselearners import BaseLearner, build_learners
from hybridboost.boost import (
    BoostModel,
    FitConfig,
    boost_step,
    cross_validate_mstop,
    deviance,
    fit_boost,
    group_direction,
    init_model,
    make_learners,
    negative_gradient,
    predict_proba,
    variable_importance,
)
from hybridboost.dataset import ColumnMeta, DesignMatrix, GroupMap
from hybridboost.errors import ConfigError, DegenerateOutcomeError, LookupFailure, SchemaError
from hybridboost.glm import fit_logistic


def loss(y, f):
    return np.logaddexp(0.0, f) - y * f


def test_negative_gradient_matches_finite_difference():
    rng = np.random.default_rng(0)
    y = rng.integers(0, 2, 50).astype(float)
    f = rng.normal(size=50)
    h = 1e-5
    numeric = -(loss(y, f + h) - loss(y, f - h)) / (2 * h)
    assert np.allclose(negative_gradient(y, f), numeric, atol=1e-8)


def test_deviance_is_twice_negative_loglik():
    y = np.array([1.0, 0.0, 1.0])
    f = np.array([0.3, -1.0, 2.0])
    p = expit(f)
    ll = np.sum(y * np.log(p) + (1 - y) * np.log(1 - p))
    assert deviance(y, f) == pytest.approx(-2 * ll, rel=1e-12)


def _data(seed=0, n=200, p=6, beta=(1.5, -1.0)):
    rng = np.random.default_rng(seed)
    X = rng.integers(0, 2, size=(n, p)).astype(float)
    eta = -0.2 + X[:, : len(beta)] @ np.array(beta)
    y = (rng.random(n) < expit(eta)).astype(float)
    return X, y


def test_single_predictor_converges_to_mle():
    X, y = _data(1, 200, 1, (1.2,))
    cfg = FitConfig(nu=0.1, learner_mode="mb", alpha=1.0)
    model = fit_boost(X, y, cfg, mstop=10_000)
    mle = fit_logistic(X, y)
    assert model.coef[0] == pytest.approx(mle.coefficients[1], abs=1e-4)
    assert model.intercept - model.term_means[0] * model.coef[0] == pytest.approx(
        mle.coefficients[0], abs=1e-4
    )


def test_deviance_path_is_monotone_and_importance_telescopes():
    X, y = _data(2)
    model = fit_boost(X, y, FitConfig(learner_mode="mb"), mstop=150)
    path = np.array(model.deviance_path)
    assert np.all(np.diff(path) <= 1e-9)
    total = sum(r for _, r, _ in variable_importance(model))
    assert total == pytest.approx(path[0] - path[-1], rel=1e-9)


def test_importance_ranks_true_predictors_first():
    X, y = _data(3, n=400)
    model = fit_boost(X, y, FitConfig(learner_mode="mb", folds=5, mstop_max=300))
    top = [model.learner(lid).columns[0] for lid, _, _ in variable_importance(model)[:2]]
    assert sorted(top) == [0, 1]


def test_boost_step_does_not_mutate_and_picks_lowest_id_on_ties():
    X = np.array([[1, 1], [0, 0], [1, 1], [0, 0]], dtype=float)
    y = np.array([1.0, 0.0, 1.0, 1.0])
    learners = build_learners(X, None, 1.0)
    model = init_model(X, y, learners, FitConfig(learner_mode="mb", alpha=1.0))
    stepped = boost_step(model, learners, X, y, 0.3)
    assert model.mstop_used == 0
    assert stepped.history == [(1, 0)]


def test_coef_path_replays_to_final_coefficients():
    X, y = _data(4)
    model = fit_boost(X, y, FitConfig(), mstop=80, groups={"a": [0, 1, 2], "b": [3, 4, 5]})
    intercept, coef = model.coef_path(model.mstop_used)
    assert np.allclose(coef, model.coef, atol=1e-12)
    assert intercept == pytest.approx(model.intercept, abs=1e-12)
    i0, c0 = model.coef_path(0)
    assert np.all(c0 == 0)


def test_json_round_trip_preserves_predictions():
    X, y = _data(5)
    model = fit_boost(X, y, FitConfig(learner_mode="mb-int", alpha=0.5), mstop=60)
    back = BoostModel.from_json(model.to_json())
    assert np.array_equal(predict_proba(back, X), predict_proba(model, X))


def test_pure_noise_stops_early():
    stops = []
    for seed in range(20):
        rng = np.random.default_rng(100 + seed)
        X = rng.integers(0, 2, size=(150, 8)).astype(float)
        y = rng.integers(0, 2, 150).astype(float)
        cfg = FitConfig(learner_mode="mb", folds=10, mstop_max=300, seed=seed)
        stops.append(cross_validate_mstop(X, y, cfg))
    assert np.median(stops) <= 50


def test_cv_chooses_more_iterations_with_signal():
    X, y = _data(6, n=300)
    assert cross_validate_mstop(X, y, FitConfig(learner_mode="mb", folds=5, mstop_max=300)) > 20


def test_modes_build_expected_learner_kinds():
    X, _ = _data(7)
    g = GroupMap({"a": [0, 1, 2], "b": [3, 4, 5]}, [])
    kinds = lambda m, a: sorted({lr.kind for lr in make_learners(X, FitConfig(learner_mode=m, alpha=a), g)})
    assert kinds("mb", 0.5) == ["individual"]
    assert kinds("sgb", 0.5) == ["group", "individual"]
    assert kinds("sgb", 0.0) == ["group"]
    assert kinds("mb-int", 0.5) == ["individual", "interaction"]
    assert len(make_learners(X, FitConfig(learner_mode="mb-int"), g)) == 6 + 15


def test_config_validation():
    for bad in (dict(nu=0), dict(nu=1.5), dict(alpha=2), dict(folds=1), dict(learner_mode="x")):
        with pytest.raises(ConfigError):
            FitConfig(**bad)


def test_constant_outcome_is_rejected():
    X, _ = _data(8)
    with pytest.raises(DegenerateOutcomeError):
        fit_boost(X, np.ones(len(X)), FitConfig(), mstop=5)


def test_prediction_checks_columns():
    X, y = _data(9)
    model = fit_boost(X, y, FitConfig(learner_mode="mb"), mstop=5)
    with pytest.raises(SchemaError):
        predict_proba(model, X[:, :3])


def _design(X, nominal_group=False):
    cols = []
    for j in range(X.shape[1]):
        group = "g1" if j < 3 else "g2"
        nominal = nominal_group and j < 2
        cols.append(ColumnMeta(f"c{j}", f"v{j if not nominal else 0}", None, group, nominal, False))
    return DesignMatrix(X, cols, np.arange(len(X)))


def test_group_direction_sign_and_undefined_cases():
    X, y = _data(10)
    model = fit_boost(_design(X), y, FitConfig(), mstop=100)
    d = group_direction(model, "g1")
    assert d.sign == ("+" if model.coef[:3].sum() > 0 else "-")
    with pytest.raises(LookupFailure):
        group_direction(model, "nope")
    nominal = fit_boost(_design(X, True), y, FitConfig(), mstop=100)
    assert group_direction(nominal, "g1").sign is None
    zero = fit_boost(_design(X), y, FitConfig(), mstop=0)
    assert group_direction(zero, "g2").sign is None


def test_learner_lookup():
    X, y = _data(11)
    model = fit_boost(X, y, FitConfig(learner_mode="mb"), mstop=3)
    assert isinstance(model.learner(0), BaseLearner)
    with pytest.raises(LookupFailure):
        model.learner(999)
