import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fasthyperdt import cart, geometry
from fasthyperdt.cart import LEAF, REGRESSION
from fasthyperdt.datagen import MixtureConfig, sample_mixture
from fasthyperdt.exceptions import ApproximatePostprocessingWarning, DimensionError, InvalidPointError
from fasthyperdt.formats import model_to_dict
from fasthyperdt.ensemble import fit_forest
from fasthyperdt.wrapper import (
    HYPERBOLOID,
    KLEIN,
    POINCARE,
    HyperbolicModelSpec,
    adjust_thresholds,
    einstein_thresholds,
    fit,
    fit_klein,
    predict_selective,
    predict_simple,
    preprocess,
)


def mixture(seed, n=600, classes=4, dim=2, K=-1.0, **kw):
    return sample_mixture(MixtureConfig(n_classes=classes, n_samples=n, dim=dim, K=K, seed=seed, **kw))[:2]


def test_spec_validation():
    with pytest.raises(ValueError):
        HyperbolicModelSpec(K=0.0)
    with pytest.raises(ValueError):
        HyperbolicModelSpec(input_geometry="sphere")
    with pytest.raises(ValueError):
        HyperbolicModelSpec(task="ranking")
    assert HyperbolicModelSpec().n_features(3) == 2
    assert HyperbolicModelSpec(input_geometry=KLEIN).n_features(3) == 3


def test_preprocess_paths():
    origin = np.array([[1.0, 0.0, 0.0]] * 3)
    np.testing.assert_array_equal(preprocess(origin, HyperbolicModelSpec()), np.zeros((3, 2)))
    v = np.array([[0.1, -0.2], [0.5, 0.5]])
    assert preprocess(v, HyperbolicModelSpec(input_geometry=KLEIN)) is not None
    np.testing.assert_array_equal(preprocess(v, HyperbolicModelSpec(input_geometry=KLEIN)), v)
    K = -2.0
    p = geometry.klein_to_poincare(v, K)
    via_lift = geometry.lorentz_to_klein(geometry.poincare_to_lorentz(p, K))
    np.testing.assert_allclose(preprocess(p, HyperbolicModelSpec(K=K, input_geometry=POINCARE)), via_lift, rtol=1e-13)
    assert preprocess(np.empty((0, 3)), HyperbolicModelSpec()).shape == (0, 2)


def test_preprocess_names_bad_row():
    X = geometry.klein_to_lorentz(np.array([[0.1, 0.1], [0.2, 0.0], [0.0, 0.3]]), -1.0)
    X[2, 1] += 0.5
    with pytest.raises(InvalidPointError, match="row 2"):
        preprocess(X, HyperbolicModelSpec())
    with pytest.raises(InvalidPointError, match="row 0"):
        preprocess(np.array([[1.0, 0.0]]), HyperbolicModelSpec(input_geometry=KLEIN))
    with pytest.raises(DimensionError):
        preprocess(np.zeros(3), HyperbolicModelSpec())


def _stump(threshold, feature=0, d=1):
    return cart.DecisionTree(
        task="classification", n_features=d, depth_limit=1,
        feature=np.array([feature, LEAF, LEAF]), threshold=np.array([threshold, np.nan, np.nan]),
        left=np.array([1, LEAF, LEAF]), right=np.array([2, LEAF, LEAF]),
        value=np.array([[0.5, 0.5], [1.0, 0.0], [0.0, 1.0]]), sample_count=np.array([4, 2, 2]),
        classes=np.array([0, 1]), training_indices=np.arange(4),
    )


def test_adjust_thresholds_examples():
    X = np.array([[-0.6], [-0.3], [0.3], [0.6]])
    out = adjust_thresholds(_stump(0.1), X, -1.0)
    assert out.threshold[0] == 0.0
    X = np.array([[-0.2], [0.0], [0.5], [0.7]])
    out = adjust_thresholds(_stump(0.25), X, -1.0)
    assert out.threshold[0] == pytest.approx(0.2679491924311228, rel=1e-14)
    assert out.threshold[0] != 0.25


def test_adjust_thresholds_warnings():
    X = np.array([[-0.6], [-0.3], [0.3], [0.6]])
    tree = _stump(0.1)
    tree.training_indices = None
    with pytest.warns(ApproximatePostprocessingWarning, match="approximate"):
        adjust_thresholds(tree, X, -1.0)
    with pytest.warns(ApproximatePostprocessingWarning, match="empty side"):
        out = adjust_thresholds(_stump(0.9), X, -1.0)
    assert out.threshold[0] == 0.9


@pytest.mark.parametrize("seed", range(100))
def test_postprocessing_keeps_training_predictions(seed):
    X, y = mixture(seed, n=300)
    spec = HyperbolicModelSpec()
    Xk = preprocess(X, spec)
    raw = cart.fit_tree(Xk, y, depth_limit=3)
    adjusted = adjust_thresholds(raw, Xk, spec.K)
    np.testing.assert_array_equal(adjusted.apply(Xk), raw.apply(Xk))
    np.testing.assert_array_equal(adjusted.predict(Xk), raw.predict(Xk))


@pytest.mark.parametrize("seed", range(20))
def test_adjusted_thresholds_are_equidistant_and_inside_gap(seed):
    X, y = mixture(seed, n=400, dim=3, K=-0.5)
    spec = HyperbolicModelSpec(K=-0.5)
    model = fit(X, y, spec, depth_limit=4)
    raw = cart.fit_tree(preprocess(X, spec), y, depth_limit=4)
    for i in model.tree.internal_nodes():
        L, R = raw.split_bounds[i]
        m = model.tree.threshold[i]
        assert L <= m < R
        gap = abs(geometry.klein_distance([m], [L], spec.K) - geometry.klein_distance([m], [R], spec.K))
        assert gap < 1e-9


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31), st.integers(1, 5))
def test_recorded_bounds_match_routing(seed, depth):
    rng = np.random.default_rng(seed)
    X, y = mixture(seed % 1000, n=250, dim=3)
    Xk = preprocess(X, HyperbolicModelSpec())
    rows = rng.integers(0, 250, size=250)
    tree = cart.fit_tree(Xk[rows], y[rows], depth_limit=depth, training_indices=rows)
    a = adjust_thresholds(tree, Xk, -1.0)
    b = einstein_thresholds(tree, -1.0)
    np.testing.assert_array_equal(a.threshold, b.threshold)


def test_fit_examples():
    X, y = mixture(3, n=400, classes=2, mean_scale=3.0, cluster_scale=0.05)
    model = fit(X, y, depth_limit=3)
    assert model.postprocessed
    assert np.mean(model.predict(X) == y) == 1.0
    stump = fit(X, y, depth_limit=0)
    assert stump.tree.n_nodes == 1
    Xk = geometry.lorentz_to_klein(X)
    majority = fit(Xk, y, HyperbolicModelSpec(input_geometry=KLEIN), depth_limit=0)
    np.testing.assert_array_equal(stump.predict(X), majority.predict(Xk))
    internal = model.tree.threshold[model.tree.feature != LEAF]
    assert np.all(internal**2 < 1.0)


def test_fit_with_sample_indices_uses_only_those_rows():
    X, y = mixture(5, n=300)
    rows = np.random.default_rng(0).integers(0, 300, size=300)
    trace = []
    model = fit(X, y, sample_indices=rows)
    spec = HyperbolicModelSpec()
    traced = fit_klein(preprocess(X, spec), y, spec, sample_indices=rows, trace=trace)
    np.testing.assert_array_equal(traced.tree.threshold, model.tree.threshold)
    allowed = set(rows.tolist())
    assert trace and all(set(r.tolist()) <= allowed for _, r in trace)
    np.testing.assert_array_equal(np.sort(trace[0][1]), np.sort(rows))


def test_predict_paths_agree(rng):
    X, y = mixture(11, n=800, classes=6, dim=3)
    model = fit(X, y, depth_limit=4)
    test = sample_mixture(MixtureConfig(n_classes=6, n_samples=10_000, dim=3, seed=99))[0]
    simple = predict_simple(model, test)
    selective, visits = predict_selective(model, test, return_visits=True)
    np.testing.assert_array_equal(simple, selective)
    assert visits.max() <= 4
    np.testing.assert_array_equal(visits, model.tree.node_depths()[model.tree.apply(preprocess(test, model.spec))])
    assert predict_simple(model, np.empty((0, 4))).shape == (0,)
    assert predict_selective(model, np.empty((0, 4))).shape == (0,)


def test_predict_selective_single_leaf_and_fallback():
    X, y = mixture(2, n=100)
    model = fit(X, y, depth_limit=0)
    preds, visits = predict_selective(model, X, return_visits=True)
    assert np.all(visits == 0) and len(set(preds.tolist())) == 1
    Xk = geometry.lorentz_to_klein(X)
    kmodel = fit(Xk, y, HyperbolicModelSpec(input_geometry=KLEIN), depth_limit=3)
    np.testing.assert_array_equal(predict_selective(kmodel, Xk), predict_simple(kmodel, Xk))


def _trees_only(model):
    doc = model_to_dict(model)
    return doc["trees"]


@pytest.mark.parametrize("K", [-0.5, -1.0, -2.0])
def test_geometry_invariance(K):
    X, y = mixture(8, n=500, classes=5, dim=3, K=K)
    forest = lambda Xr, geo: fit_forest(  # noqa: E731
        Xr, y, HyperbolicModelSpec(K=K, input_geometry=geo), n_trees=3, seed=1
    )
    hyper = forest(X, HYPERBOLOID)
    klein = forest(geometry.lorentz_to_klein(X), KLEIN)
    assert _trees_only(hyper) == _trees_only(klein)
    # Poincare coordinates differ from the Klein ones by round-off, so the
    # fitted trees match in structure and to within a few ulps in thresholds
    poinc = forest(geometry.lorentz_to_poincare(X, K), POINCARE)
    for a, b in zip(hyper.trees, poinc.trees):
        np.testing.assert_array_equal(a.tree.feature, b.tree.feature)
        np.testing.assert_allclose(a.tree.threshold, b.tree.threshold, rtol=0, atol=1e-12)
        np.testing.assert_array_equal(a.tree.value, b.tree.value)
    np.testing.assert_array_equal(hyper.predict(X), poinc.predict(geometry.lorentz_to_poincare(X, K)))


def test_regression_fit():
    X, y = sample_mixture(MixtureConfig(n_classes=3, n_samples=500, seed=4, task=REGRESSION))[:2]
    model = fit(X, y, HyperbolicModelSpec(task=REGRESSION), depth_limit=3)
    preds = model.predict(X)
    assert np.mean((preds - y) ** 2) < np.var(y)
    np.testing.assert_array_equal(preds, predict_selective(model, X))


def test_warnings_are_silent_on_normal_fit():
    X, y = mixture(1, n=200)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        fit(X, y)
