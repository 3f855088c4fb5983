"""Angle-based HyperDT, kept as an independent oracle for the Klein wrapper.

Splits are homogeneous hyperplanes with normal ``(-cos t, 0, .., sin t, .., 0)``
acting on Lorentz points directly: a point goes right iff
``x_i sin t - x_0 cos t > 0``. At every node the angles ``atan2(x_0, x_i)`` are
recomputed and re-sorted; candidates sit at the hyperbolic angular midpoints
of consecutive distinct angles. Gains and tie-breaking come from :mod:`cart`
so that any disagreement with the wrapper is down to geometry alone; class
counts are accumulated one-hot, independently of the fast scan.
Candidates are enumerated by ascending ``cot t`` (descending angle) per
spacelike axis, axes ascending.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import geometry
from .cart import (
    CLASSIFICATION,
    LEAF,
    _Builder,
    _check_predict_input,
    _check_task,
    _encode,
    boundary_gains,
    is_pure,
    leaf_output,
    node_value,
)
from .exceptions import DimensionError
from .wrapper import HYPERBOLOID, KLEIN, HyperbolicModelSpec

MIN_SIN = 1e-12


@dataclass
class AngularTree:
    """Flat-array angular tree. ``feature`` holds spacelike axes ``1..d``."""

    task: str
    n_features: int
    depth_limit: int | None
    feature: np.ndarray
    theta: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    sample_count: np.ndarray
    classes: np.ndarray | None = None
    n_candidates: int = field(default=0, compare=False)

    @property
    def n_nodes(self):
        return int(self.feature.shape[0])

    def apply(self, X):
        X = _check_predict_input(X, self.n_features + 1)
        node = np.zeros(X.shape[0], dtype=np.intp)
        active = np.flatnonzero(self.feature[node] != LEAF)
        while active.size:
            cur = node[active]
            right = angular_split_sign(X[active], self.feature[cur], self.theta[cur])
            node[active] = np.where(right, self.right[cur], self.left[cur])
            active = active[self.feature[node[active]] != LEAF]
        return node

    def predict(self, X):
        return predict_reference(self, X)

    def predict_proba(self, X):
        return self.value[self.apply(X)]


def angular_split_sign(x, axis, theta):
    """True where a Lorentz point falls on the positive (right) side.

    Points on the hyperplane go left, matching the ``<=`` rule of the
    Klein-threshold trees.
    """
    x = np.asarray(x, dtype=float)
    axis = np.asarray(axis)
    if x.ndim == 1:
        xi = x[axis]
        x0 = x[0]
    else:
        xi = x[np.arange(x.shape[0]), axis] if axis.ndim else x[:, axis]
        x0 = x[:, 0]
    return xi * np.sin(theta) - x0 * np.cos(theta) > 0.0


def _best_axis_split(X, rows, targets, task, n_classes, axis):
    theta = geometry.split_angle(X[rows], axis)
    order = np.argsort(-theta, kind="stable")
    ang = theta[order]
    positions, gains = boundary_gains(
        -ang, targets[rows[order]], task, n_classes, counting="onehot"
    )
    if positions.size == 0:
        return None
    candidates = geometry.angular_midpoint(ang[positions], ang[positions + 1])
    usable = np.abs(np.sin(candidates)) >= MIN_SIN
    if not usable.any():
        return None
    gains = np.where(usable, gains, -np.inf)
    k = int(np.argmax(gains))
    return float(gains[k]), float(candidates[k]), int(positions.size)


def fit_reference(
    X,
    y,
    depth_limit=3,
    min_samples_split=2,
    task=CLASSIFICATION,
    K=-1.0,
    classes=None,
) -> AngularTree:
    """Grow an angular tree on Lorentz points ``X`` (timelike column 0)."""
    _check_task(task)
    X = geometry.check_lorentz(X, K)
    if X.ndim != 2 or X.shape[0] != len(y):
        raise DimensionError("X must be a 2-D Lorentz matrix with one row per label")
    n, ambient = X.shape
    targets, classes = _encode(y, task, classes)
    n_classes = None if classes is None else len(classes)

    b = _Builder()
    n_candidates = 0
    stack = [(np.arange(n), 0, None, True)]
    while stack:
        rows, depth, parent, is_left = stack.pop()
        node_targets = targets[rows]
        node = b.add(node_value(node_targets, task, n_classes), rows.size)
        b.link(parent, is_left, node)
        if (
            (depth_limit is not None and depth >= depth_limit)
            or rows.size < min_samples_split
            or is_pure(node_targets, task)
        ):
            continue
        best = None
        for axis in range(1, ambient):
            found = _best_axis_split(X, rows, targets, task, n_classes, axis)
            if found is None:
                continue
            gain, theta, count = found
            n_candidates += count
            if gain > 0.0 and (best is None or gain > best[0]):
                best = (gain, axis, theta)
        if best is None:
            continue
        _, axis, theta = best
        right = angular_split_sign(X[rows], axis, theta)
        if right.all() or not right.any():
            continue
        b.feature[node] = axis
        b.threshold[node] = theta
        stack.append((rows[right], depth + 1, node, False))
        stack.append((rows[~right], depth + 1, node, True))

    arrays = b.arrays()
    arrays["theta"] = arrays.pop("threshold")
    return AngularTree(
        task=task,
        n_features=ambient - 1,
        depth_limit=depth_limit,
        classes=classes,
        n_candidates=n_candidates,
        **arrays,
    )


def predict_reference(tree: AngularTree, X):
    """Route Lorentz rows by the sign of ``x_i sin t - x_0 cos t``."""
    return leaf_output(tree, tree.apply(X))


def to_lorentz(X_raw, spec: HyperbolicModelSpec):
    """Lorentz points for raw rows given in ``spec.input_geometry``."""
    X = np.asarray(X_raw, dtype=float)
    if X.ndim != 2:
        raise DimensionError(f"expected a 2-D array of points, got shape {X.shape}")
    if spec.input_geometry == HYPERBOLOID:
        return geometry.check_lorentz(X, spec.K)
    if X.shape[0] == 0:
        return np.empty((0, X.shape[1] + 1))
    if spec.input_geometry == KLEIN:
        return geometry.klein_to_lorentz(X, spec.K)
    return geometry.poincare_to_lorentz(X, spec.K)


@dataclass
class ReferenceModel:
    """An angular tree plus the model spec saying how raw inputs are read."""

    spec: HyperbolicModelSpec
    tree: AngularTree

    def predict(self, X_raw):
        return predict_reference(self.tree, to_lorentz(X_raw, self.spec))

    def predict_proba(self, X_raw):
        return self.tree.predict_proba(to_lorentz(X_raw, self.spec))


def fit_reference_model(X_raw, y, spec: HyperbolicModelSpec | None = None, depth_limit=3,
                        min_samples_split=2, classes=None) -> ReferenceModel:
    spec = spec or HyperbolicModelSpec()
    X = to_lorentz(X_raw, spec)
    tree = fit_reference(
        X, y, depth_limit=depth_limit, min_samples_split=min_samples_split,
        task=spec.task, K=spec.K, classes=classes,
    )
    return ReferenceModel(spec=spec, tree=tree)
