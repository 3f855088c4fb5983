import json

import numpy as np
import pytest

from fasthyperdt import geometry
from fasthyperdt.cart import REGRESSION
from fasthyperdt.datagen import MixtureConfig, sample_mixture
from fasthyperdt.ensemble import fit_forest
from fasthyperdt.exceptions import FormatError
from fasthyperdt.formats import (
    DatasetHeader,
    dumps_model,
    load_model,
    model_from_dict,
    model_to_dict,
    parse_header,
    read_dataset,
    save_model,
    write_dataset,
)
from fasthyperdt.reference import fit_reference_model
from fasthyperdt.wrapper import HyperbolicModelSpec


def data(seed=0, n=400, task="classification", K=-1.0):
    return sample_mixture(MixtureConfig(n_classes=4, n_samples=n, dim=2, seed=seed, task=task, K=K))[:2]


@pytest.mark.parametrize("task", ["classification", REGRESSION])
def test_dataset_round_trip_is_exact(tmp_path, task):
    X, y = data(task=task)
    X = geometry.lorentz_to_poincare(X, -1.0)
    header = DatasetHeader(geometry="poincare", K=-1.0, d=2, task=task)
    path = tmp_path / "d.csv"
    write_dataset(path, X, y, header)
    X2, y2, h2 = read_dataset(path)
    assert h2 == header
    np.testing.assert_array_equal(X2, X)
    np.testing.assert_array_equal(y2, y)
    assert path.read_text().splitlines()[0] == "# geometry=poincare K=-1.0 d=2 task=" + task


@pytest.mark.parametrize("line", [
    "geometry=klein K=-1 d=2 task=classification",
    "# geometry=klein K=-1 d=2",
    "# geometry=sphere K=-1 d=2 task=classification",
    "# geometry=klein K=1 d=2 task=classification",
    "# geometry=klein K=-1 d=x task=classification",
    "# geometry=klein K=-1 d=2 task=ranking",
    "# geometry=klein K -1 d=2 task=classification",
])
def test_bad_headers(line):
    with pytest.raises(FormatError):
        parse_header(line)


def test_bad_dataset_bodies(tmp_path):
    p = tmp_path / "x.csv"
    p.write_text("# geometry=klein K=-1.0 d=2 task=classification\n0.1,0.2\n")
    with pytest.raises(FormatError, match="columns"):
        read_dataset(p)
    p.write_text("# geometry=klein K=-1.0 d=2 task=classification\n0.1,0.2,0.5\n")
    with pytest.raises(FormatError, match="integers"):
        read_dataset(p)
    p.write_text("# geometry=klein K=-1.0 d=2 task=classification\n0.1,abc,1\n")
    with pytest.raises(FormatError):
        read_dataset(p)
    with pytest.raises(FormatError):
        read_dataset(tmp_path / "missing.csv")
    p.write_text("# geometry=klein K=-1.0 d=2 task=classification\n")
    X, y, _ = read_dataset(p)
    assert X.shape == (0, 2) and y.shape == (0,)
    with pytest.raises(FormatError):
        write_dataset(p, np.zeros((2, 3)), [0, 1], DatasetHeader("klein", -1.0, 2, "classification"))


@pytest.mark.parametrize("task", ["classification", REGRESSION])
def test_forest_round_trip_predictions(tmp_path, task):
    X, y = data(1, task=task, K=-0.5)
    spec = HyperbolicModelSpec(K=-0.5, task=task)
    forest = fit_forest(X, y, spec, n_trees=7, seed=2)
    path = tmp_path / "m.json"
    save_model(path, forest)
    loaded = load_model(path)
    test = sample_mixture(MixtureConfig(n_classes=4, n_samples=10_000, dim=2, seed=50, K=-0.5))[0]
    np.testing.assert_array_equal(loaded.predict(test), forest.predict(test))
    assert dumps_model(loaded) == path.read_text()
    assert all(t.tree.training_indices is None for t in loaded.trees)


def test_reference_round_trip(tmp_path):
    X, y = data(2)
    model = fit_reference_model(X, y)
    path = tmp_path / "r.json"
    save_model(path, model)
    loaded = load_model(path)
    np.testing.assert_array_equal(loaded.tree.theta, model.tree.theta)
    np.testing.assert_array_equal(loaded.predict(X), model.predict(X))


def test_model_document_layout():
    X, y = data(3)
    doc = model_to_dict(fit_forest(X, y, n_trees=2, seed=0))
    assert doc["format_version"] == 1 and doc["backend"] == "fast"
    root = doc["trees"][0][0]
    assert root["kind"] == "split" and set(root) == {"kind", "feature", "threshold", "left", "right", "sample_count"}
    leaves = [r for r in doc["trees"][0] if r["kind"] == "leaf"]
    assert leaves and all(abs(sum(r["prediction"]) - 1.0) < 1e-12 for r in leaves)
    with pytest.raises(TypeError):
        model_to_dict(object())


def test_malformed_models(tmp_path):
    X, y = data(4)
    doc = model_to_dict(fit_forest(X, y, n_trees=1, seed=0))
    for mutate in (
        lambda d: d.update(format_version=2),
        lambda d: d.update(backend="gpu"),
        lambda d: d["trees"][0][0].update(left=0),
        lambda d: d["trees"][0][0].update(feature=9),
        lambda d: d["trees"][0][0].update(kind="branch"),
        lambda d: d.pop("spec"),
        lambda d: d["trees"][0][-1].update(prediction=[1.0]),
    ):
        bad = json.loads(json.dumps(doc))
        mutate(bad)
        with pytest.raises(FormatError):
            model_from_dict(bad)
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(FormatError):
        load_model(p)
