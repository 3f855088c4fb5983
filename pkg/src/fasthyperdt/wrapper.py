"""Hyperbolic decision trees as Klein preprocessing around the CART engine.

Training projects the data to Klein coordinates, grows an ordinary CART tree
there, then moves every threshold from the Euclidean midpoint of its straddling
training values ``(L, R)`` to their Einstein midpoint. The training partition
is untouched by the move; only where unseen points fall changes.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import geometry
from .cart import CLASSIFICATION, LEAF, TASKS, DecisionTree, fit_tree, leaf_output
from .exceptions import ApproximatePostprocessingWarning, DimensionError

HYPERBOLOID = "hyperboloid"
KLEIN = "klein"
POINCARE = "poincare"
GEOMETRIES = (HYPERBOLOID, KLEIN, POINCARE)


@dataclass(frozen=True)
class HyperbolicModelSpec:
    K: float = -1.0
    input_geometry: str = HYPERBOLOID
    task: str = CLASSIFICATION

    def __post_init__(self):
        object.__setattr__(self, "K", geometry.check_curvature(self.K))
        if self.input_geometry not in GEOMETRIES:
            raise ValueError(f"input_geometry must be one of {GEOMETRIES}")
        if self.task not in TASKS:
            raise ValueError(f"task must be one of {TASKS}")

    def n_features(self, n_columns):
        """Number of Klein features for raw data with ``n_columns`` columns."""
        return n_columns - 1 if self.input_geometry == HYPERBOLOID else n_columns


@dataclass
class HyperbolicTree:
    spec: HyperbolicModelSpec
    tree: DecisionTree
    postprocessed: bool = False

    def predict(self, X_raw):
        return predict_simple(self, X_raw)

    def predict_proba(self, X_raw):
        return self.tree.predict_proba(preprocess(X_raw, self.spec))


def preprocess(X_raw, spec: HyperbolicModelSpec):
    """Klein coordinates of raw points given in ``spec.input_geometry``."""
    X = np.asarray(X_raw, dtype=float)
    if X.ndim != 2:
        raise DimensionError(f"expected a 2-D array of points, got shape {X.shape}")
    if X.shape[0] == 0:
        return np.empty((0, spec.n_features(X.shape[1])))
    if spec.input_geometry == HYPERBOLOID:
        return geometry.lorentz_to_klein(geometry.check_lorentz(X, spec.K))
    if spec.input_geometry == POINCARE:
        return geometry.poincare_to_klein(X, spec.K)
    return geometry.check_klein(X)


def adjust_thresholds(tree: DecisionTree, X_klein, K, trace=None) -> DecisionTree:
    """Return a copy of ``tree`` with Einstein-midpoint thresholds.

    The rows used are ``X_klein[tree.training_indices]``; trees without that
    record fall back to all rows with an ``ApproximatePostprocessingWarning``.
    ``trace``, if given, receives ``(node, rows)`` for every internal node,
    with ``rows`` indexing ``X_klein``.
    """
    X_klein = np.asarray(X_klein, dtype=float)
    if tree.training_indices is None:
        warnings.warn(
            "tree has no training-row record; postprocessing over all rows is approximate",
            ApproximatePostprocessingWarning,
            stacklevel=2,
        )
        rows = np.arange(X_klein.shape[0])
    else:
        rows = np.asarray(tree.training_indices, dtype=np.intp)
    columns = np.ascontiguousarray(X_klein.T)
    out = tree.copy()
    stack = [(0, rows)]
    while stack:
        node, r = stack.pop()
        f = tree.feature[node]
        if f == LEAF:
            continue
        if trace is not None:
            trace.append((node, r))
        vals = columns[f][r]
        go_left = vals <= tree.threshold[node]
        lower = np.where(go_left, vals, -np.inf).max(initial=-np.inf)
        upper = np.where(go_left, np.inf, vals).min(initial=np.inf)
        if np.isinf(lower) or np.isinf(upper):
            warnings.warn(
                f"node {node} has an empty side on the given rows; threshold left unchanged",
                ApproximatePostprocessingWarning,
                stacklevel=2,
            )
        else:
            m = geometry.scalar_einstein_midpoint(lower, upper, K)
            out.threshold[node] = m if lower <= m < upper else lower
        for child, side in ((tree.right[node], False), (tree.left[node], True)):
            if tree.feature[child] != LEAF:
                stack.append((child, r[go_left == side]))
    return out


def einstein_thresholds(tree: DecisionTree, K) -> DecisionTree:
    """Postprocess using the straddling pairs recorded while growing ``tree``.

    Gives the same thresholds as :func:`adjust_thresholds` on the training
    rows, without routing them again.
    """
    if tree.split_bounds is None:
        raise ValueError("tree carries no recorded split bounds")
    out = tree.copy()
    for node in tree.internal_nodes():
        lower, upper = tree.split_bounds[node]
        m = geometry.scalar_einstein_midpoint(lower, upper, K)
        out.threshold[node] = m if lower <= m < upper else lower
    return out


def fit(
    X_raw,
    y,
    spec: HyperbolicModelSpec | None = None,
    depth_limit=3,
    min_samples_split=2,
    feature_subsample=None,
    seed=None,
    classes=None,
    sample_indices=None,
) -> HyperbolicTree:
    """Preprocess, fit CART in Klein coordinates, then adjust thresholds.

    ``sample_indices`` restricts training to those rows (bootstrap draws may
    repeat rows); postprocessing then uses exactly those rows.
    """
    spec = spec or HyperbolicModelSpec()
    X_klein = preprocess(X_raw, spec)
    return fit_klein(
        X_klein, y, spec, depth_limit, min_samples_split, feature_subsample,
        seed, classes, sample_indices,
    )


def fit_klein(
    X_klein, y, spec, depth_limit=3, min_samples_split=2, feature_subsample=None,
    seed=None, classes=None, sample_indices=None, trace=None,
) -> HyperbolicTree:
    """Fit on points already in Klein coordinates.

    Postprocessing normally reuses the straddling pairs recorded by CART.
    Passing a ``trace`` list instead routes the training rows through
    :func:`adjust_thresholds` and records ``(node, rows)`` for each split.
    """
    y = np.asarray(y)
    if y.shape[0] != X_klein.shape[0]:
        raise DimensionError("one label per row is required")
    if sample_indices is None:
        sample_indices = np.arange(X_klein.shape[0])
        X_fit, y_fit = X_klein, y
    else:
        sample_indices = np.asarray(sample_indices, dtype=np.intp)
        X_fit, y_fit = X_klein[sample_indices], y[sample_indices]
    tree = fit_tree(
        X_fit,
        y_fit,
        depth_limit=depth_limit,
        min_samples_split=min_samples_split,
        task=spec.task,
        feature_subsample=feature_subsample,
        seed=seed,
        classes=classes,
        training_indices=sample_indices,
    )
    if trace is None:
        tree = einstein_thresholds(tree, spec.K)
    else:
        tree = adjust_thresholds(tree, X_klein, spec.K, trace=trace)
    return HyperbolicTree(spec=spec, tree=tree, postprocessed=True)


def predict_simple(model: HyperbolicTree, X_raw):
    """Project every row to Klein coordinates, then route through the tree."""
    return model.tree.predict(preprocess(X_raw, model.spec))


def predict_selective(model: HyperbolicTree, X_raw, return_visits=False):
    """Route hyperboloid rows computing only the visited nodes' Klein ratios.

    Other input geometries fall back to :func:`predict_simple`. With
    ``return_visits`` the number of ratios computed per row is also returned.
    """
    spec = model.spec
    X = np.asarray(X_raw, dtype=float)
    if spec.input_geometry != HYPERBOLOID:
        preds = predict_simple(model, X)
        visits = model.tree.node_depths()[model.tree.apply(preprocess(X, spec))]
        return (preds, visits) if return_visits else preds
    if X.ndim != 2:
        raise DimensionError(f"expected a 2-D array of points, got shape {X.shape}")
    tree = model.tree
    if X.shape[0] and X.shape[1] != tree.n_features + 1:
        raise DimensionError(f"expected {tree.n_features + 1} columns, got {X.shape[1]}")
    if X.shape[0]:
        geometry.check_lorentz(X, spec.K)
    feature, threshold = tree.feature.tolist(), tree.threshold.tolist()
    left, right = tree.left.tolist(), tree.right.tolist()
    leaves = np.empty(X.shape[0], dtype=np.intp)
    visits = np.zeros(X.shape[0], dtype=np.intp)
    for i, x in enumerate(X):
        node = 0
        while feature[node] != LEAF:
            f = feature[node]
            ratio = x[f + 1] / x[0]
            visits[i] += 1
            node = left[node] if ratio <= threshold[node] else right[node]
        leaves[i] = node
    preds = leaf_output(tree, leaves)
    return (preds, visits) if return_visits else preds
