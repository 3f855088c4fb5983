"""Axis-parallel CART with presorted feature lists.

Splits send ``x[feature] <= threshold`` to the left child. Among candidate
splits the largest information gain wins; ties keep the first maximum in the
order (feature ascending, threshold ascending). A node is split only when the
best gain is strictly positive.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DimensionError, DomainError

CLASSIFICATION = "classification"
REGRESSION = "regression"
TASKS = (CLASSIFICATION, REGRESSION)

LEAF = -1


def _check_task(task):
    if task not in TASKS:
        raise ValueError(f"task must be one of {TASKS}, got {task!r}")
    return task


# -- impurity -----------------------------------------------------------------


def _gini_from_square_sum(sq, n):
    # sq = sum of squared class counts, an exact integer; every caller goes
    # through this one expression so equal counts give bit-identical gains
    n = np.asarray(n, dtype=np.float64)
    return 1.0 - np.asarray(sq, dtype=np.float64) / (n * n)


def _gini_from_counts(counts, n):
    counts = np.asarray(counts, dtype=np.int64)
    return _gini_from_square_sum(np.sum(counts * counts, axis=-1), n)


def _gini_gains(total_sq, left_sq, right_sq, nl, nr, n):
    # H - (nl/n) H_l - (nr/n) H_r with H = 1 - sq / m^2, rearranged to
    # (H - 1) + (sq_l / nl + sq_r / nr) / n; one shared expression keeps
    # scalar and vectorised gains bit-identical
    return (_gini_from_square_sum(total_sq, n) - 1.0) + (left_sq / nl + right_sq / nr) / n


def _variance_from_sums(s, s2, n):
    mean = s / n
    return np.maximum(s2 / n - mean * mean, 0.0)


def impurity(labels, task=CLASSIFICATION) -> float:
    """Gini impurity (classification) or variance (regression) of a label set."""
    _check_task(task)
    labels = np.asarray(labels)
    if labels.size == 0:
        raise ValueError("impurity of an empty label set is undefined")
    if task == REGRESSION:
        y = labels.astype(float)
        return float(np.mean((y - y.mean()) ** 2))
    _, counts = np.unique(labels, return_counts=True)
    return float(_gini_from_counts(counts, labels.size))


def information_gain(labels, left_labels, right_labels, task=CLASSIFICATION) -> float:
    """Impurity decrease ``H(y) - |y-|/|y| H(y-) - |y+|/|y| H(y+)``."""
    labels = np.asarray(labels)
    left_labels = np.asarray(left_labels)
    right_labels = np.asarray(right_labels)
    if left_labels.size == 0 or right_labels.size == 0:
        raise ValueError("both sides of a split must be nonempty")
    if left_labels.size + right_labels.size != labels.size:
        raise ValueError("left and right labels must partition the parent labels")
    n = labels.size
    if task == REGRESSION:
        return float(
            impurity(labels, task)
            - (left_labels.size / n) * impurity(left_labels, task)
            - (right_labels.size / n) * impurity(right_labels, task)
        )
    classes = np.unique(labels)

    def square_sum(y):
        counts = np.array([np.sum(y == c) for c in classes], dtype=np.int64)
        return int(np.sum(counts * counts))

    nl, nr = left_labels.size, right_labels.size
    return float(
        _gini_gains(square_sum(labels), square_sum(left_labels), square_sum(right_labels), nl, nr, n)
    )


# -- candidate scan -------------------------------------------------------------


def _prefix_square_sums(targets, n_classes):
    """Squared-count sums of each prefix and its complement, in O(n).

    Moving a sample of class ``c`` to the left adds ``2 l_c + 1`` to the left
    sum, where ``l_c`` (the sample's rank among earlier samples of its class)
    is the left count just before the move. With ``T`` the class totals the
    right sum is ``sum T_c^2 - 2 sum T_c l_c + sum l_c^2``.
    """
    n = targets.shape[0]
    dtype = np.uint8 if n_classes <= 256 else np.uint16 if n_classes <= 65536 else np.intp
    by_class = np.argsort(targets.astype(dtype), kind="stable")
    totals = np.bincount(targets, minlength=n_classes).astype(np.int64)
    starts = np.cumsum(totals) - totals
    rank = np.empty(n, dtype=np.int64)
    rank[by_class] = np.arange(n, dtype=np.int64) - np.repeat(starts, totals)
    total_sq = int(np.sum(totals * totals))
    rank *= 2
    rank += 1
    left_sq = np.cumsum(rank)
    cross = np.cumsum(totals[targets])
    cross *= -2
    cross += total_sq
    cross += left_sq
    return total_sq, left_sq, cross


def _onehot_square_sums(targets, n_classes):
    """Same sums as :func:`_prefix_square_sums`, from explicit class counts."""
    n = targets.shape[0]
    onehot = np.zeros((n, n_classes), dtype=np.int64)
    onehot[np.arange(n), targets] = 1
    left = np.cumsum(onehot, axis=0)
    right = left[-1] - left
    total_sq = int(np.sum(left[-1] * left[-1]))
    return total_sq, np.sum(left * left, axis=1), np.sum(right * right, axis=1)


COUNTING = {"rank": _prefix_square_sums, "onehot": _onehot_square_sums}


def boundary_gains(values, targets, task, n_classes=None, counting="rank"):
    """Gains of every split between consecutive distinct sorted values.

    ``values`` must be sorted ascending and ``targets`` aligned with them
    (class codes for classification, floats for regression). Returns
    ``(positions, gains)`` where position ``p`` puts the first ``p + 1``
    sorted samples on the left. ``counting`` picks how class counts are
    accumulated ("rank" or "onehot"); both give the same integers and
    therefore bit-identical gains.
    """
    n = values.shape[0]
    if n < 2:
        return np.empty(0, dtype=np.intp), np.empty(0)
    positions = np.flatnonzero(values[:-1] < values[1:])
    if positions.size == 0:
        return positions, np.empty(0)
    nl = positions + 1
    nr = n - nl
    if task == CLASSIFICATION:
        total_sq, left_sq, right_sq = COUNTING[counting](targets, n_classes)
        if positions.size == n - 1:
            left_sq, right_sq = left_sq[:-1], right_sq[:-1]
        else:
            left_sq, right_sq = left_sq[positions], right_sq[positions]
        gains = _gini_gains(total_sq, left_sq, right_sq, nl, nr, n)
    else:
        y = np.asarray(targets, dtype=float)
        s = np.cumsum(y)
        s2 = np.cumsum(y * y)
        h = _variance_from_sums(s[-1], s2[-1], n)
        sl, s2l = s[positions], s2[positions]
        gains = (
            h
            - (nl / n) * _variance_from_sums(sl, s2l, nl)
            - (nr / n) * _variance_from_sums(s[-1] - sl, s2[-1] - s2l, nr)
        )
    return positions, gains


def scan_feature(values, targets, task, n_classes=None):
    """Best boundary on one sorted feature: ``(gain, position, n_candidates)``.

    Returns ``(None, None, n_candidates)`` when no boundary exists.
    """
    positions, gains = boundary_gains(values, targets, task, n_classes)
    if positions.size == 0:
        return None, None, 0
    k = int(np.argmax(gains))
    return float(gains[k]), int(positions[k]), int(positions.size)


def midpoint_threshold(lower, upper):
    """Arithmetic midpoint that still separates ``lower`` from ``upper``."""
    t = 0.5 * (lower + upper)
    if not (lower <= t < upper):
        t = lower
    return float(t)


@dataclass(frozen=True)
class SplitCandidate:
    feature: int
    threshold: float
    gain: float
    lower: float
    upper: float


def _encode(y, task, classes=None):
    y = np.asarray(y)
    if task == REGRESSION:
        y = y.astype(float)
        if not np.all(np.isfinite(y)):
            raise DomainError("regression targets must be finite")
        return y, None
    if classes is None:
        classes = np.unique(y)
    classes = np.asarray(classes)
    if (
        y.dtype.kind in "iu"
        and classes.dtype.kind in "iu"
        and y.size
        and classes.size
        and int(classes[-1]) - int(classes[0]) <= 4 * y.size
    ):
        # compact integer labels: a lookup table beats binary search
        lo = int(classes[0])
        lut = np.full(int(classes[-1]) - lo + 1, -1, dtype=np.intp)
        lut[classes.astype(np.int64) - lo] = np.arange(classes.size)
        shifted = y.astype(np.int64) - lo
        if shifted.min() < 0 or shifted.max() >= lut.size:
            raise ValueError("labels contain values outside the declared classes")
        codes = lut[shifted]
        if codes.min() < 0:
            raise ValueError("labels contain values outside the declared classes")
        return codes, classes
    codes = np.searchsorted(classes, y)
    codes = np.clip(codes, 0, len(classes) - 1)
    if not np.array_equal(classes[codes], y):
        raise ValueError("labels contain values outside the declared classes")
    return codes.astype(np.intp), classes


def best_split(X, y, allowed_features=None, task=CLASSIFICATION):
    """Best axis-parallel split of ``(X, y)`` or ``None`` if no positive gain."""
    _check_task(task)
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] != len(y):
        raise DimensionError("X must be 2-D with one row per label")
    if X.shape[0] < 2:
        return None
    targets, classes = _encode(y, task)
    n_classes = None if classes is None else len(classes)
    features = range(X.shape[1]) if allowed_features is None else sorted(allowed_features)
    best = None
    for f in features:
        order = np.argsort(X[:, f], kind="stable")
        vals = X[order, f]
        gain, pos, _ = scan_feature(vals, targets[order], task, n_classes)
        if gain is None or gain <= 0.0:
            continue
        if best is None or gain > best.gain:
            best = SplitCandidate(
                feature=int(f),
                threshold=midpoint_threshold(vals[pos], vals[pos + 1]),
                gain=gain,
                lower=float(vals[pos]),
                upper=float(vals[pos + 1]),
            )
    return best


# -- trees ----------------------------------------------------------------------


@dataclass
class DecisionTree:
    """Fitted tree in flat-array form; node 0 is the root, nodes are in preorder.

    ``value`` holds class probabilities (classification) or the mean target in
    a single column (regression). ``split_bounds`` keeps, per internal node,
    the largest training value sent left and the smallest sent right (NaN at
    leaves); it is not serialized and is None for trees built elsewhere.
    """

    task: str
    n_features: int
    depth_limit: int | None
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    sample_count: np.ndarray
    classes: np.ndarray | None = None
    training_indices: np.ndarray | None = None
    n_candidates: int = field(default=0, compare=False)
    split_bounds: np.ndarray | None = field(default=None, compare=False, repr=False)

    @property
    def n_nodes(self) -> int:
        return int(self.feature.shape[0])

    def is_leaf(self, node) -> bool:
        return bool(self.feature[node] == LEAF)

    def node_depths(self) -> np.ndarray:
        depth = np.zeros(self.n_nodes, dtype=np.intp)
        for i in range(self.n_nodes):
            if self.feature[i] != LEAF:
                depth[self.left[i]] = depth[self.right[i]] = depth[i] + 1
        return depth

    @property
    def depth(self) -> int:
        return int(self.node_depths().max())

    def internal_nodes(self):
        return [int(i) for i in np.flatnonzero(self.feature != LEAF)]

    def copy(self):
        out = copy.copy(self)
        for name in ("feature", "threshold", "left", "right", "value", "sample_count"):
            setattr(out, name, getattr(self, name).copy())
        if self.split_bounds is not None:
            out.split_bounds = self.split_bounds.copy()
        return out

    def apply(self, X):
        """Leaf index reached by each row."""
        X = _check_predict_input(X, self.n_features)
        node = np.zeros(X.shape[0], dtype=np.intp)
        active = np.flatnonzero(self.feature[node] != LEAF)
        while active.size:
            cur = node[active]
            go_left = X[active, self.feature[cur]] <= self.threshold[cur]
            node[active] = np.where(go_left, self.left[cur], self.right[cur])
            active = active[self.feature[node[active]] != LEAF]
        return node

    def predict_proba(self, X):
        if self.task != CLASSIFICATION:
            raise ValueError("predict_proba is only defined for classification")
        return self.value[self.apply(X)]

    def predict(self, X):
        return predict_tree(self, X)


def _check_predict_input(X, n_features):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1 and X.size == 0:
        X = X.reshape(0, n_features)
    if X.ndim != 2:
        raise DimensionError(f"expected a 2-D array, got shape {X.shape}")
    if X.shape[1] != n_features:
        raise DimensionError(f"expected {n_features} columns, got {X.shape[1]}")
    return X


def leaf_output(tree, leaves):
    """Hard predictions from leaf ids (class argmax, ties to the lower class)."""
    if tree.task == CLASSIFICATION:
        return tree.classes[np.argmax(tree.value[leaves], axis=1)]
    return tree.value[leaves, 0]


def predict_tree(tree: DecisionTree, X):
    """Class labels or regression means for each row of ``X``."""
    return leaf_output(tree, tree.apply(X))


def n_subsample_features(feature_subsample, n_features):
    if feature_subsample is None:
        return n_features
    if feature_subsample == "sqrt":
        return max(1, int(np.sqrt(n_features)))
    k = int(feature_subsample)
    if not 1 <= k <= n_features:
        raise ValueError(f"feature_subsample must be in [1, {n_features}], got {k}")
    return k


class _Builder:
    """Accumulates nodes in preorder."""

    def __init__(self):
        self.feature, self.threshold, self.left, self.right = [], [], [], []
        self.value, self.count = [], []

    def add(self, value, count):
        self.feature.append(LEAF)
        self.threshold.append(np.nan)
        self.left.append(LEAF)
        self.right.append(LEAF)
        self.value.append(value)
        self.count.append(count)
        return len(self.feature) - 1

    def link(self, parent, is_left, child):
        if parent is None:
            return
        (self.left if is_left else self.right)[parent] = child

    def arrays(self):
        return dict(
            feature=np.array(self.feature, dtype=np.intp),
            threshold=np.array(self.threshold, dtype=float),
            left=np.array(self.left, dtype=np.intp),
            right=np.array(self.right, dtype=np.intp),
            value=np.array(self.value, dtype=float),
            sample_count=np.array(self.count, dtype=np.intp),
        )


def node_value(targets, task, n_classes):
    if task == CLASSIFICATION:
        counts = np.bincount(targets, minlength=n_classes)
        return counts / counts.sum()
    return np.array([np.mean(targets)])


def is_pure(targets, task):
    return bool(np.all(targets == targets[0]))


def fit_tree(
    X,
    y,
    depth_limit=3,
    min_samples_split=2,
    task=CLASSIFICATION,
    feature_subsample=None,
    seed=None,
    classes=None,
    training_indices=None,
) -> DecisionTree:
    """Grow a tree greedily on ``(X, y)``.

    Feature orders are sorted once at the root and filtered down the tree.
    ``feature_subsample`` ("sqrt", an int, or None for all) draws that many
    features per node from a generator seeded by ``seed``. ``classes`` fixes
    the class vocabulary (needed when a bootstrap sample misses a class).
    ``training_indices`` records which original rows ``X`` corresponds to.
    """
    _check_task(task)
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise DimensionError(f"expected a 2-D array, got shape {X.shape}")
    n, d = X.shape
    if n < 1 or len(y) != n:
        raise DimensionError("need at least one row and one label per row")
    if not np.all(np.isfinite(X)):
        raise DomainError("training features must be finite")
    if depth_limit is not None and depth_limit < 0:
        raise ValueError("depth_limit must be nonnegative")
    targets, classes = _encode(y, task, classes)
    n_classes = None if classes is None else len(classes)
    k_features = n_subsample_features(feature_subsample, d)
    rng = np.random.default_rng(seed) if k_features < d else None

    # tie order inside a run of equal values never changes a boundary's class
    # counts; regression keeps a stable order so float prefix sums are reproducible
    kind = None if task == CLASSIFICATION else "stable"
    columns = np.ascontiguousarray(X.T)
    orders = [np.argsort(columns[f], kind=kind) for f in range(d)]
    goes_left = np.zeros(n, dtype=bool)
    b = _Builder()
    bounds = {}
    n_candidates = 0
    stack = [(orders, 0, None, True)]
    while stack:
        node_orders, depth, parent, is_left = stack.pop()
        rows = node_orders[0]
        node_targets = targets[rows]
        node = b.add(node_value(node_targets, task, n_classes), rows.size)
        b.link(parent, is_left, node)
        if (
            (depth_limit is not None and depth >= depth_limit)
            or rows.size < min_samples_split
            or is_pure(node_targets, task)
        ):
            continue
        if rng is not None:
            features = np.sort(rng.choice(d, size=k_features, replace=False))
        else:
            features = range(d)
        best = None
        for f in features:
            order = node_orders[f]
            vals = columns[f][order]
            gain, pos, count = scan_feature(vals, targets[order], task, n_classes)
            n_candidates += count
            if gain is not None and gain > 0.0 and (best is None or gain > best[0]):
                best = (gain, int(f), pos)
        if best is None:
            continue
        _, f, pos = best
        order = node_orders[f]
        b.feature[node] = f
        lower, upper = columns[f][order[pos]], columns[f][order[pos + 1]]
        b.threshold[node] = midpoint_threshold(lower, upper)
        bounds[node] = (lower, upper)
        goes_left[order[: pos + 1]] = True
        masks = [goes_left[o] for o in node_orders]
        left_orders = [o[m] for o, m in zip(node_orders, masks)]
        right_orders = [o[~m] for o, m in zip(node_orders, masks)]
        goes_left[order[: pos + 1]] = False
        stack.append((right_orders, depth + 1, node, False))
        stack.append((left_orders, depth + 1, node, True))

    if training_indices is None:
        training_indices = np.arange(n)
    split_bounds = np.full((len(b.feature), 2), np.nan)
    for node, pair in bounds.items():
        split_bounds[node] = pair
    return DecisionTree(
        task=task,
        n_features=d,
        depth_limit=depth_limit,
        classes=classes,
        training_indices=np.asarray(training_indices, dtype=np.intp),
        n_candidates=n_candidates,
        split_bounds=split_bounds,
        **b.arrays(),
    )


def node_rows(tree: DecisionTree, X):
    """Rows of ``X`` reaching each node, as a list of index arrays."""
    X = np.asarray(X, dtype=float)
    rows = [None] * tree.n_nodes
    rows[0] = np.arange(X.shape[0])
    for i in range(tree.n_nodes):
        if tree.feature[i] == LEAF:
            continue
        r = rows[i]
        go_left = X[r, tree.feature[i]] <= tree.threshold[i]
        rows[tree.left[i]] = r[go_left]
        rows[tree.right[i]] = r[~go_left]
    return rows
