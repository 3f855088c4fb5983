"""Dataset CSV and model JSON files.

Datasets are plain CSV preceded by one header line::

    # geometry=hyperboloid K=-1.0 d=2 task=classification

followed by one row per sample: the coordinates, then the label or target.
Floats are written with ``repr`` (shortest string that parses back to the
same double), so files round-trip exactly.

Models are versioned JSON. Each tree is a list of node records in preorder;
splits carry ``feature`` and ``threshold`` (fast backend) or ``theta``
(reference backend, ``feature`` is then the spacelike axis), leaves carry
``prediction`` (class distribution or ``[mean]``).
"""

from __future__ import annotations

import json
import re
import warnings
from dataclasses import dataclass

import numpy as np

from .cart import CLASSIFICATION, LEAF, REGRESSION, DecisionTree
from .ensemble import Forest
from .exceptions import FormatError
from .reference import AngularTree, ReferenceModel
from .wrapper import GEOMETRIES, HYPERBOLOID, HyperbolicModelSpec, HyperbolicTree

FORMAT_VERSION = 1
FAST = "fast"
REFERENCE = "reference"
BACKENDS = (FAST, REFERENCE)

_HEADER = re.compile(r"^#\s*(.*)$")


# -- datasets -------------------------------------------------------------------


@dataclass(frozen=True)
class DatasetHeader:
    geometry: str
    K: float
    d: int
    task: str

    def n_coordinates(self):
        return self.d + 1 if self.geometry == HYPERBOLOID else self.d

    def format(self):
        return f"# geometry={self.geometry} K={self.K!r} d={self.d} task={self.task}"


def _format_label(value, task):
    if task == CLASSIFICATION:
        return str(int(value))
    return repr(float(value))


def write_dataset(path, X, y, header: DatasetHeader):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    if X.ndim != 2 or X.shape[1] != header.n_coordinates() or X.shape[0] != y.shape[0]:
        raise FormatError(f"data of shape {X.shape} does not match header {header.format()}")
    lines = [header.format()]
    for row, label in zip(X.tolist(), y.tolist()):
        lines.append(",".join([*map(repr, row), _format_label(label, header.task)]))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def parse_header(line) -> DatasetHeader:
    m = _HEADER.match(line.strip())
    if not m:
        raise FormatError("dataset must start with a '# geometry=... K=... d=... task=...' line")
    fields = {}
    for item in m.group(1).split():
        key, sep, value = item.partition("=")
        if not sep:
            raise FormatError(f"malformed header field {item!r}")
        fields[key] = value
    missing = {"geometry", "K", "d", "task"} - fields.keys()
    if missing:
        raise FormatError(f"header is missing {sorted(missing)}")
    try:
        K, d = float(fields["K"]), int(fields["d"])
    except ValueError as exc:
        raise FormatError(f"bad header value: {exc}") from None
    if fields["geometry"] not in GEOMETRIES:
        raise FormatError(f"unknown geometry {fields['geometry']!r}")
    if fields["task"] not in (CLASSIFICATION, REGRESSION):
        raise FormatError(f"unknown task {fields['task']!r}")
    if not (K < 0 and np.isfinite(K)) or d < 1:
        raise FormatError("header needs K < 0 and d >= 1")
    return DatasetHeader(geometry=fields["geometry"], K=K, d=d, task=fields["task"])


def read_dataset(path):
    """Return ``(X, y, header)``; class labels come back as integers."""
    try:
        with open(path, encoding="utf-8") as fh:
            first = fh.readline()
            header = parse_header(first)
            try:
                with warnings.catch_warnings():
                    warnings.filterwarnings("ignore", message="loadtxt: input contained no data")
                    data = np.loadtxt(fh, delimiter=",", ndmin=2, dtype=float)
            except ValueError as exc:
                raise FormatError(f"{path}: {exc}") from None
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc.strerror}") from None
    width = header.n_coordinates() + 1
    if data.size == 0:
        data = data.reshape(0, width)
    if data.shape[1] != width:
        raise FormatError(f"{path}: expected {width} columns, found {data.shape[1]}")
    X, y = data[:, :-1], data[:, -1]
    if header.task == CLASSIFICATION:
        if not np.all(y == np.round(y)):
            raise FormatError(f"{path}: classification labels must be integers")
        y = y.astype(np.int64)
    return X, y, header


# -- models -----------------------------------------------------------------------


def _spec_dict(spec):
    return {"K": spec.K, "input_geometry": spec.input_geometry, "task": spec.task}


def _node_records(tree, split_key, split_values):
    records = []
    for i in range(tree.n_nodes):
        if tree.feature[i] == LEAF:
            records.append({
                "kind": "leaf",
                "prediction": tree.value[i].tolist(),
                "sample_count": int(tree.sample_count[i]),
            })
        else:
            records.append({
                "kind": "split",
                "feature": int(tree.feature[i]),
                split_key: float(split_values[i]),
                "left": int(tree.left[i]),
                "right": int(tree.right[i]),
                "sample_count": int(tree.sample_count[i]),
            })
    return records


def model_to_dict(model):
    """JSON-ready dict for a :class:`Forest` or :class:`ReferenceModel`."""
    if isinstance(model, Forest):
        first = model.trees[0].tree
        return {
            "format_version": FORMAT_VERSION,
            "backend": FAST,
            "spec": _spec_dict(model.spec),
            "params": model.params,
            "classes": None if model.classes is None else model.classes.tolist(),
            "n_features": first.n_features,
            "depth_limit": first.depth_limit,
            "aggregation": model.aggregation,
            "seed": model.seed,
            "trees": [_node_records(t.tree, "threshold", t.tree.threshold) for t in model.trees],
        }
    if isinstance(model, ReferenceModel):
        tree = model.tree
        return {
            "format_version": FORMAT_VERSION,
            "backend": REFERENCE,
            "spec": _spec_dict(model.spec),
            "params": {"n_trees": 1, "bootstrap": False, "depth_limit": tree.depth_limit},
            "classes": None if tree.classes is None else tree.classes.tolist(),
            "n_features": tree.n_features,
            "depth_limit": tree.depth_limit,
            "aggregation": None,
            "seed": None,
            "trees": [_node_records(tree, "theta", tree.theta)],
        }
    raise TypeError(f"cannot serialize {type(model).__name__}")


def dumps_model(model) -> str:
    return json.dumps(model_to_dict(model), indent=1, allow_nan=False) + "\n"


def save_model(path, model):
    text = dumps_model(model)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _tree_arrays(records, split_key, n_outputs):
    n = len(records)
    feature = np.full(n, LEAF, dtype=np.intp)
    split = np.full(n, np.nan)
    left = np.full(n, LEAF, dtype=np.intp)
    right = np.full(n, LEAF, dtype=np.intp)
    value = np.zeros((n, n_outputs))
    count = np.zeros(n, dtype=np.intp)
    for i, rec in enumerate(records):
        count[i] = rec["sample_count"]
        if rec["kind"] == "leaf":
            pred = np.asarray(rec["prediction"], dtype=float)
            if pred.shape != (n_outputs,):
                raise FormatError(f"leaf {i} prediction has {pred.size} entries, expected {n_outputs}")
            value[i] = pred
        elif rec["kind"] == "split":
            feature[i] = rec["feature"]
            split[i] = rec[split_key]
            left[i], right[i] = rec["left"], rec["right"]
            if not (i < left[i] < n and i < right[i] < n):
                raise FormatError(f"node {i} has child ids outside the tree")
        else:
            raise FormatError(f"unknown node kind {rec['kind']!r}")
    return dict(feature=feature, left=left, right=right, value=value, sample_count=count), split


def model_from_dict(doc):
    try:
        version = doc["format_version"]
        if version != FORMAT_VERSION:
            raise FormatError(f"unsupported model format_version {version}")
        spec = HyperbolicModelSpec(**doc["spec"])
        classes = None if doc["classes"] is None else np.asarray(doc["classes"])
        n_outputs = 1 if classes is None else len(classes)
        d = int(doc["n_features"])
        depth_limit = doc["depth_limit"]
        if doc["backend"] == FAST:
            trees = []
            for records in doc["trees"]:
                arrays, threshold = _tree_arrays(records, "threshold", n_outputs)
                if np.any(arrays["feature"][arrays["feature"] != LEAF] >= d):
                    raise FormatError("split feature out of range")
                tree = DecisionTree(
                    task=spec.task, n_features=d, depth_limit=depth_limit,
                    threshold=threshold, classes=classes, **arrays,
                )
                trees.append(HyperbolicTree(spec=spec, tree=tree, postprocessed=True))
            return Forest(
                trees=trees,
                n_trees=len(trees),
                aggregation=doc["aggregation"],
                seed=doc["seed"],
                spec=spec,
                classes=classes,
                params=doc["params"],
            )
        if doc["backend"] == REFERENCE:
            (records,) = doc["trees"]
            arrays, theta = _tree_arrays(records, "theta", n_outputs)
            if np.any(arrays["feature"][arrays["feature"] != LEAF] > d):
                raise FormatError("split axis out of range")
            tree = AngularTree(
                task=spec.task, n_features=d, depth_limit=depth_limit,
                theta=theta, classes=classes, **arrays,
            )
            return ReferenceModel(spec=spec, tree=tree)
        raise FormatError(f"unknown backend {doc['backend']!r}")
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, FormatError):
            raise
        raise FormatError(f"malformed model file: {exc!r}") from None


def load_model(path):
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path} is not valid JSON: {exc}") from None
    return model_from_dict(doc)
