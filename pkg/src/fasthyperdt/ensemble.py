"""Random forests of hyperbolic trees.

Every tree draws its bootstrap rows and per-node feature subsets from its own
child of ``np.random.SeedSequence(seed)``, so the forest does not depend on
the order (or the thread) in which trees are fitted. Each tree's thresholds
are postprocessed on exactly the rows it was grown on.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .cart import CLASSIFICATION, REGRESSION
from .wrapper import HyperbolicModelSpec, HyperbolicTree, fit_klein, preprocess

MAJORITY_VOTE = "majority-vote"
PROBABILITY_MEAN = "probability-mean"
REGRESSION_MEAN = "regression-mean"
AGGREGATIONS = (MAJORITY_VOTE, PROBABILITY_MEAN, REGRESSION_MEAN)


@dataclass
class Forest:
    trees: list
    n_trees: int
    aggregation: str
    seed: int
    spec: HyperbolicModelSpec
    classes: np.ndarray | None = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.n_trees < 1 or len(self.trees) != self.n_trees:
            raise ValueError("a forest needs n_trees >= 1 fitted trees")
        if self.aggregation not in AGGREGATIONS:
            raise ValueError(f"aggregation must be one of {AGGREGATIONS}")
        if any(t.spec != self.spec for t in self.trees):
            raise ValueError("all trees must share the forest's model spec")
        if (self.aggregation == REGRESSION_MEAN) != (self.spec.task == REGRESSION):
            raise ValueError(f"aggregation {self.aggregation!r} does not fit task {self.spec.task!r}")

    def predict(self, X_raw):
        return predict_forest(self, X_raw)


def default_feature_subsample(task, n_features):
    """sqrt(d) features per node for classification, all d for regression."""
    return "sqrt" if task == CLASSIFICATION else None


def tree_seeds(seed, n_trees):
    """Per-tree ``(bootstrap, features)`` seed sequences derived from ``seed``."""
    return [child.spawn(2) for child in np.random.SeedSequence(seed).spawn(n_trees)]


def fit_forest(
    X_raw,
    y,
    spec: HyperbolicModelSpec | None = None,
    n_trees=100,
    bootstrap=True,
    feature_subsample="default",
    depth_limit=3,
    seed=0,
    aggregation=None,
    min_samples_split=2,
    n_jobs=1,
    trace=None,
) -> Forest:
    """Fit ``n_trees`` hyperbolic trees on bootstrap draws of ``(X_raw, y)``.

    ``feature_subsample="default"`` picks sqrt(d) for classification and d
    for regression. ``n_jobs > 1`` fits trees on a thread pool; the result is
    the same for any ``n_jobs``. ``trace``, if given, is a dict that receives
    ``tree index -> [(node, rows), ...]`` from the postprocessing pass.
    """
    spec = spec or HyperbolicModelSpec()
    if n_trees < 1:
        raise ValueError("n_trees must be at least 1")
    X_klein = preprocess(X_raw, spec)
    y = np.asarray(y)
    n, d = X_klein.shape
    if n < 1:
        raise ValueError("cannot fit a forest on zero rows")
    if y.shape[0] != n:
        raise ValueError("one label per row is required")
    if aggregation is None:
        aggregation = REGRESSION_MEAN if spec.task == REGRESSION else MAJORITY_VOTE
    if feature_subsample == "default":
        feature_subsample = default_feature_subsample(spec.task, d)
    classes = np.unique(y) if spec.task == CLASSIFICATION else None
    seeds = tree_seeds(seed, n_trees)

    def fit_one(i):
        boot_seq, feature_seq = seeds[i]
        rows = np.random.default_rng(boot_seq).integers(0, n, size=n) if bootstrap else None
        tree_trace = [] if trace is not None else None
        model = fit_klein(
            X_klein, y, spec, depth_limit, min_samples_split, feature_subsample,
            seed=feature_seq, classes=classes, sample_indices=rows, trace=tree_trace,
        )
        return model, tree_trace

    if n_jobs is not None and n_jobs > 1 and n_trees > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            fitted = list(pool.map(fit_one, range(n_trees)))
    else:
        fitted = [fit_one(i) for i in range(n_trees)]
    if trace is not None:
        trace.update({i: t for i, (_, t) in enumerate(fitted)})
    params = dict(
        n_trees=n_trees,
        bootstrap=bool(bootstrap),
        feature_subsample=feature_subsample,
        depth_limit=depth_limit,
        min_samples_split=min_samples_split,
    )
    return Forest(
        trees=[m for m, _ in fitted],
        n_trees=n_trees,
        aggregation=aggregation,
        seed=seed,
        spec=spec,
        classes=classes,
        params=params,
    )


def predict_forest(forest: Forest, X_raw):
    """Aggregate the trees' outputs according to ``forest.aggregation``."""
    X_klein = preprocess(X_raw, forest.spec)
    if forest.aggregation == REGRESSION_MEAN:
        total = np.zeros(X_klein.shape[0])
        for model in forest.trees:
            total += model.tree.predict(X_klein)
        return total / forest.n_trees
    classes = forest.classes
    if forest.aggregation == PROBABILITY_MEAN:
        total = np.zeros((X_klein.shape[0], len(classes)))
        for model in forest.trees:
            total += model.tree.predict_proba(X_klein)
        return classes[np.argmax(total / forest.n_trees, axis=1)]
    votes = np.zeros((X_klein.shape[0], len(classes)), dtype=np.int64)
    rows = np.arange(X_klein.shape[0])
    for model in forest.trees:
        codes = np.searchsorted(classes, model.tree.predict(X_klein))
        np.add.at(votes, (rows, codes), 1)
    # argmax keeps the first maximum, so ties go to the lower class id
    return classes[np.argmax(votes, axis=1)]
