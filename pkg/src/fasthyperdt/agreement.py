"""Node-by-node agreement between the Klein wrapper and the angular reference.

Both trees are walked in lockstep from the root. A node pair is an exact
match when the reference splits on spacelike axis ``f + 1`` with
``|t - cot theta| < 1e-9``; the walk then continues into both children. Any
other pair is classified once, by comparing the information gains the two
splits achieve on their own node's training rows, and the walk stops there:
below a differing split the two trees see different rows, so deeper pairs
say nothing more about the splitting rule.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import geometry
from .cart import LEAF, CLASSIFICATION, _encode, boundary_gains, information_gain, node_rows
from .datagen import MixtureConfig, sample_mixture, train_test_split
from .reference import angular_split_sign, fit_reference
from .wrapper import HyperbolicModelSpec, fit

EXACT_TOL = 1e-9
TIE_TOL = 1e-4
CERTIFY_MARGIN = 1e-4

EXACT = "exact"
TIE_EQUIVALENT = "tie_equiv"
MISMATCH = "mismatch"

REPORT_COLUMNS = ("seed", "nodes", "exact", "tie_equiv", "mismatch", "train_agree", "test_agree")


@dataclass(frozen=True)
class NodeComparison:
    fast_node: int
    reference_node: int
    category: str
    fast_feature: int
    fast_threshold: float
    reference_axis: int
    reference_cot: float
    fast_gain: float
    reference_gain: float


def reference_node_rows(tree, X_lorentz):
    """Rows of ``X_lorentz`` reaching each node of an angular tree."""
    rows = [None] * tree.n_nodes
    rows[0] = np.arange(X_lorentz.shape[0])
    for i in range(tree.n_nodes):
        if tree.feature[i] == LEAF:
            continue
        r = rows[i]
        right = angular_split_sign(X_lorentz[r], tree.feature[i], tree.theta[i])
        rows[tree.left[i]] = r[~right]
        rows[tree.right[i]] = r[right]
    return rows


def _split_gain(y, go_left, task):
    if go_left.all() or not go_left.any():
        return float("nan")
    return information_gain(y, y[go_left], y[~go_left], task)


def compare_nodes(fast_tree, ref_tree, X_klein, X_lorentz, y, task=CLASSIFICATION):
    """Lockstep comparison; returns one :class:`NodeComparison` per visited pair.

    Pairs where both nodes are leaves are not reported.
    """
    y = np.asarray(y)
    fast_rows = node_rows(fast_tree, X_klein)
    ref_rows = reference_node_rows(ref_tree, X_lorentz)
    out = []
    stack = [(0, 0)]
    while stack:
        a, b = stack.pop()
        fa, fb = int(fast_tree.feature[a]), int(ref_tree.feature[b])
        if fa == LEAF and fb == LEAF:
            continue
        t = float(fast_tree.threshold[a]) if fa != LEAF else float("nan")
        cot = float(1.0 / np.tan(ref_tree.theta[b])) if fb != LEAF else float("nan")
        if fa != LEAF and fb == fa + 1 and abs(t - cot) < EXACT_TOL:
            out.append(NodeComparison(a, b, EXACT, fa, t, fb, cot, float("nan"), float("nan")))
            stack.append((int(fast_tree.right[a]), int(ref_tree.right[b])))
            stack.append((int(fast_tree.left[a]), int(ref_tree.left[b])))
            continue
        ga = gb = float("nan")
        if fa != LEAF:
            ra = fast_rows[a]
            ga = _split_gain(y[ra], X_klein[ra, fa] <= t, task)
        if fb != LEAF:
            rb = ref_rows[b]
            right = angular_split_sign(X_lorentz[rb], fb, ref_tree.theta[b])
            gb = _split_gain(y[rb], ~right, task)
        tie = fa != LEAF and fb != LEAF and abs(ga - gb) <= TIE_TOL
        out.append(NodeComparison(a, b, TIE_EQUIVALENT if tie else MISMATCH, fa, t, fb, cot, ga, gb))
    out.sort(key=lambda c: c.fast_node)
    return out


def gain_margin(tree, X_klein, y, task=CLASSIFICATION):
    """Smallest gap between the best and second-best candidate gain over all splits.

    Every candidate of every feature at every internal node is rescanned on
    that node's training rows. Returns ``inf`` for a tree without splits or
    for nodes offering a single candidate.
    """
    codes, classes = _encode(y, task, tree.classes)
    n_classes = None if classes is None else len(classes)
    margin = np.inf
    for node, rows in enumerate(node_rows(tree, X_klein)):
        if tree.feature[node] == LEAF:
            continue
        gains = []
        for f in range(tree.n_features):
            vals = X_klein[rows, f]
            order = np.argsort(vals, kind="stable")
            _, g = boundary_gains(vals[order], codes[rows][order], task, n_classes)
            gains.append(g)
        gains = np.concatenate(gains)
        if gains.size >= 2:
            top2 = np.partition(gains, gains.size - 2)[-2:]
            margin = min(margin, float(top2[1] - top2[0]))
    return margin


def is_tie_free(tree, X_klein, y, task=CLASSIFICATION, margin=CERTIFY_MARGIN):
    return gain_margin(tree, X_klein, y, task) > margin


@dataclass(frozen=True)
class SeedReport:
    seed: int
    nodes: int
    exact: int
    tie_equiv: int
    mismatch: int
    train_agree: float
    test_agree: float
    certified: bool
    details: tuple

    def row(self):
        return (self.seed, self.nodes, self.exact, self.tie_equiv, self.mismatch,
                self.train_agree, self.test_agree)


def compare_seed(seed, n=1000, dim=2, n_classes=8, depth=3, K=-1.0, test_fraction=0.2,
                 task=CLASSIFICATION, mean_scale=1.0, cluster_scale=0.5) -> SeedReport:
    """Generate one dataset, fit both backends on its training part and compare."""
    cfg = MixtureConfig(n_classes=n_classes, n_samples=n, dim=dim, K=K, seed=seed, task=task,
                        mean_scale=mean_scale, cluster_scale=cluster_scale)
    X, y, _ = sample_mixture(cfg)
    train, test = train_test_split(n, test_fraction, seed)
    spec = HyperbolicModelSpec(K=K, task=task)
    fast = fit(X[train], y[train], spec, depth_limit=depth)
    ref = fit_reference(X[train], y[train], depth_limit=depth, task=task, K=K, classes=fast.tree.classes)
    X_klein = geometry.lorentz_to_klein(X)
    nodes = compare_nodes(fast.tree, ref, X_klein[train], X[train], y[train], task)
    counts = {c: sum(1 for r in nodes if r.category == c) for c in (EXACT, TIE_EQUIVALENT, MISMATCH)}

    def agree(rows):
        if rows.size == 0:
            return 1.0
        return float(np.mean(fast.tree.predict(X_klein[rows]) == ref.predict(X[rows])))

    return SeedReport(
        seed=seed,
        nodes=len(nodes),
        exact=counts[EXACT],
        tie_equiv=counts[TIE_EQUIVALENT],
        mismatch=counts[MISMATCH],
        train_agree=agree(train),
        test_agree=agree(test),
        certified=is_tie_free(fast.tree, X_klein[train], y[train], task),
        details=tuple(r for r in nodes if r.category != EXACT),
    )
