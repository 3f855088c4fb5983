import numpy as np
import pytest

from fasthyperdt import cart, geometry
from fasthyperdt.cart import LEAF, REGRESSION
from fasthyperdt.datagen import MixtureConfig, sample_mixture
from fasthyperdt.ensemble import (
    MAJORITY_VOTE,
    PROBABILITY_MEAN,
    REGRESSION_MEAN,
    Forest,
    fit_forest,
    predict_forest,
    tree_seeds,
)
from fasthyperdt.formats import dumps_model
from fasthyperdt.wrapper import HyperbolicModelSpec, HyperbolicTree, fit, preprocess


def mixture(seed=0, n=500, classes=4, dim=3, task="classification"):
    return sample_mixture(MixtureConfig(n_classes=classes, n_samples=n, dim=dim, seed=seed, task=task))[:2]


def test_single_tree_forest_equals_fit():
    X, y = mixture()
    forest = fit_forest(X, y, n_trees=1, bootstrap=False, feature_subsample=None, seed=3)
    single = fit(X, y, depth_limit=3)
    a, b = forest.trees[0].tree, single.tree
    for name in ("feature", "threshold", "left", "right", "value", "sample_count", "classes"):
        np.testing.assert_array_equal(getattr(a, name), getattr(b, name))
    np.testing.assert_array_equal(forest.predict(X), single.predict(X))


def test_each_tree_postprocesses_its_own_bootstrap_rows():
    X, y = mixture(1)
    trace = {}
    forest = fit_forest(X, y, n_trees=8, seed=11, trace=trace)
    Xk = preprocess(X, forest.spec)
    assert sorted(trace) == list(range(8))
    for i, model in enumerate(forest.trees):
        boot = model.tree.training_indices
        assert len(np.unique(boot)) < len(boot)  # a genuine bootstrap draw
        allowed = set(boot.tolist())
        steps = trace[i]
        assert {node for node, _ in steps} == set(model.tree.internal_nodes())
        for node, rows in steps:
            assert set(rows.tolist()) <= allowed
            f, t = model.tree.feature[node], model.tree.threshold[node]
            vals = Xk[rows, f]
            lower, upper = vals[vals <= t].max(), vals[vals > t].min()
            assert lower < t < upper or (lower == t and np.nextafter(lower, np.inf) >= upper)


def test_thresholds_strictly_inside_bootstrap_gaps():
    X, y = mixture(2, n=800, classes=6)
    forest = fit_forest(X, y, n_trees=20, seed=5)
    Xk = preprocess(X, forest.spec)
    for model in forest.trees:
        tree = model.tree
        rows = cart.node_rows(tree, Xk[tree.training_indices])
        for node in tree.internal_nodes():
            vals = Xk[tree.training_indices][rows[node], tree.feature[node]]
            t = tree.threshold[node]
            assert vals[vals <= t].max() < t < vals[vals > t].min()


def test_same_seed_same_bytes_across_thread_counts():
    X, y = mixture(3)
    a = dumps_model(fit_forest(X, y, n_trees=12, seed=7, n_jobs=1))
    b = dumps_model(fit_forest(X, y, n_trees=12, seed=7, n_jobs=4))
    c = dumps_model(fit_forest(X, y, n_trees=12, seed=7, n_jobs=3))
    assert a == b == c
    assert a != dumps_model(fit_forest(X, y, n_trees=12, seed=8))


def test_tree_seeds_do_not_depend_on_count():
    long, short = tree_seeds(4, 10), tree_seeds(4, 3)
    for (a1, a2), (b1, b2) in zip(long, short):
        assert a1.generate_state(4).tolist() == b1.generate_state(4).tolist()
        assert a2.generate_state(4).tolist() == b2.generate_state(4).tolist()


def _constant_tree(spec, label, classes):
    value = np.zeros((1, len(classes)))
    value[0, list(classes).index(label)] = 1.0
    tree = cart.DecisionTree(
        task=spec.task, n_features=2, depth_limit=0, feature=np.array([LEAF]),
        threshold=np.array([np.nan]), left=np.array([LEAF]), right=np.array([LEAF]),
        value=value, sample_count=np.array([1]), classes=np.asarray(classes),
    )
    return HyperbolicTree(spec=spec, tree=tree, postprocessed=True)


def test_majority_vote_tie_goes_to_lower_class():
    spec = HyperbolicModelSpec()
    classes = np.array([0, 1])
    trees = [_constant_tree(spec, 1, classes), _constant_tree(spec, 0, classes)]
    forest = Forest(trees=trees, n_trees=2, aggregation=MAJORITY_VOTE, seed=0, spec=spec, classes=classes)
    X = geometry.klein_to_lorentz(np.zeros((3, 2)), -1.0)
    assert predict_forest(forest, X).tolist() == [0, 0, 0]


def test_identical_trees_give_that_tree():
    X, y = mixture(4)
    single = fit(X, y, depth_limit=3)
    for agg in (MAJORITY_VOTE, PROBABILITY_MEAN):
        forest = Forest(trees=[single] * 5, n_trees=5, aggregation=agg, seed=0,
                        spec=single.spec, classes=single.tree.classes)
        np.testing.assert_array_equal(forest.predict(X), single.predict(X))


def test_regression_mean_is_tree_average():
    X, y = mixture(5, task=REGRESSION)
    spec = HyperbolicModelSpec(task=REGRESSION)
    forest = fit_forest(X, y, spec, n_trees=10, seed=1)
    assert forest.aggregation == REGRESSION_MEAN
    expected = np.mean([m.predict(X) for m in forest.trees], axis=0)
    np.testing.assert_allclose(forest.predict(X), expected, rtol=0, atol=1e-12)
    assert forest.params["feature_subsample"] is None


def test_probability_mean_aggregation():
    X, y = mixture(6)
    forest = fit_forest(X, y, n_trees=10, seed=2, aggregation=PROBABILITY_MEAN)
    proba = np.mean([m.predict_proba(X) for m in forest.trees], axis=0)
    np.testing.assert_array_equal(forest.predict(X), forest.classes[np.argmax(proba, axis=1)])


def test_forest_beats_chance_and_uses_global_classes():
    X, y = mixture(7, n=600, classes=5)
    forest = fit_forest(X, y, n_trees=25, seed=0)
    assert all(np.array_equal(m.tree.classes, np.arange(5)) for m in forest.trees)
    assert np.mean(forest.predict(X) == y) > 0.5


def test_forest_validation():
    X, y = mixture(8, n=50)
    spec = HyperbolicModelSpec()
    with pytest.raises(ValueError):
        fit_forest(X, y, n_trees=0)
    with pytest.raises(ValueError):
        fit_forest(X, y[:-1])
    with pytest.raises(ValueError):
        fit_forest(X, y, aggregation=REGRESSION_MEAN)
    single = fit(X, y)
    other = HyperbolicModelSpec(K=-2.0)
    with pytest.raises(ValueError):
        Forest(trees=[single, HyperbolicTree(other, single.tree)], n_trees=2,
               aggregation=MAJORITY_VOTE, seed=0, spec=spec, classes=single.tree.classes)
