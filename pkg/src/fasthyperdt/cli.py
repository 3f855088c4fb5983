"""Command-line interface: ``fasthyperdt <command> [options]``.

Commands: generate, train, predict, evaluate, compare, bench.
Exit status is 0 on success, 2 on a usage error and 1 on a data error.
"""

from __future__ import annotations

import argparse
import csv
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import geometry
from .agreement import REPORT_COLUMNS, compare_seed
from .bench import BENCH_COLUMNS, DEFAULT_N_LIST, bench_rows
from .cart import CLASSIFICATION, REGRESSION
from .datagen import MixtureConfig, sample_mixture
from .ensemble import AGGREGATIONS, fit_forest
from .exceptions import FormatError, HyperDTError
from .formats import (
    BACKENDS,
    FAST,
    DatasetHeader,
    read_dataset,
    save_model,
    load_model,
    write_dataset,
)
from .reference import fit_reference_model
from .wrapper import GEOMETRIES, HYPERBOLOID, KLEIN, HyperbolicModelSpec


class DataError(HyperDTError):
    """Input files or values are inconsistent; reported with exit status 1."""


def _write_csv(path, columns, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([repr(v) if isinstance(v, float) else v for v in row])


def _n_list(text):
    try:
        values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not values or min(values) < 2:
        raise argparse.ArgumentTypeError("sizes must be integers >= 2")
    return values


def _feature_subsample(text):
    if text in ("default", "sqrt", "all"):
        return text
    try:
        k = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError("use default, sqrt, all or a positive integer") from None
    if k < 1:
        raise argparse.ArgumentTypeError("feature count must be positive")
    return k


# -- commands -------------------------------------------------------------------


def cmd_generate(args):
    cfg = MixtureConfig(
        n_classes=args.classes,
        n_samples=args.n,
        dim=args.dim,
        K=args.K,
        mean_scale=args.mean_scale,
        cluster_scale=args.cluster_scale,
        seed=args.seed,
        task=args.task,
        regression_noise=args.noise,
    )
    X, y, _ = sample_mixture(cfg)
    if args.geometry == KLEIN:
        X = geometry.lorentz_to_klein(X)
    elif args.geometry != HYPERBOLOID:
        X = geometry.lorentz_to_poincare(X, cfg.K)
    header = DatasetHeader(geometry=args.geometry, K=cfg.K, d=args.dim, task=args.task)
    write_dataset(args.out, X, y, header)
    labels = f"{len(np.unique(y))} labels" if args.task == CLASSIFICATION else "real targets"
    print(f"wrote {args.n} rows ({labels}, d={args.dim}, {args.geometry}, K={cfg.K!r}) to {args.out}")


def _check_against_header(args, header):
    if args.geometry is not None and args.geometry != header.geometry:
        raise DataError(f"--geometry {args.geometry} does not match the file's {header.geometry}")
    if args.K is not None and float(args.K) != header.K:
        raise DataError(f"--K {args.K!r} does not match the file's K={header.K!r}")


def cmd_train(args, parser):
    if args.backend != FAST and args.n_trees != 1:
        parser.error("the reference backend fits single trees only (--n-trees 1)")
    X, y, header = read_dataset(args.data)
    _check_against_header(args, header)
    if X.shape[0] == 0:
        raise DataError(f"{args.data} has no rows")
    spec = HyperbolicModelSpec(K=header.K, input_geometry=header.geometry, task=header.task)
    start = time.perf_counter()
    if args.backend == FAST:
        subsample = args.feature_subsample
        if subsample == "all" or (subsample == "default" and args.n_trees == 1):
            subsample = None
        bootstrap = args.n_trees > 1 if args.bootstrap is None else args.bootstrap
        model = fit_forest(
            X, y, spec,
            n_trees=args.n_trees,
            bootstrap=bootstrap,
            feature_subsample=subsample,
            depth_limit=args.depth,
            seed=args.seed,
            aggregation=args.aggregation,
            n_jobs=args.jobs,
        )
        nodes = sum(t.tree.n_nodes for t in model.trees)
    else:
        model = fit_reference_model(X, y, spec, depth_limit=args.depth)
        nodes = model.tree.n_nodes
    elapsed = time.perf_counter() - start
    save_model(args.model_out, model)
    print(f"trained {args.backend} model: {args.n_trees} tree(s), {nodes} nodes, {elapsed:.3f} s")


def _load_pair(args):
    model = load_model(args.model)
    X, y, header = read_dataset(args.data)
    spec = model.spec
    n_features = model.trees[0].tree.n_features if hasattr(model, "trees") else model.tree.n_features
    if header.d != n_features:
        raise DataError(f"model expects d={n_features}, data has d={header.d}")
    if header.geometry != spec.input_geometry or header.K != spec.K:
        raise DataError(
            f"model was trained on {spec.input_geometry} K={spec.K!r}, "
            f"data is {header.geometry} K={header.K!r}"
        )
    if header.task != spec.task:
        raise DataError(f"model task {spec.task} does not match data task {header.task}")
    return model, X, y, header


def cmd_predict(args):
    model, X, _, header = _load_pair(args)
    preds = model.predict(X)
    rows = [(int(p),) if header.task == CLASSIFICATION else (float(p),) for p in preds]
    _write_csv(args.out, ("prediction",), rows)
    print(f"wrote {len(rows)} predictions to {args.out}")


def evaluate(model, X, y, task):
    """Accuracy for classification, mean squared error for regression."""
    preds = model.predict(X)
    if task == CLASSIFICATION:
        return "accuracy", float(np.mean(preds == y))
    return "mse", float(np.mean((preds - y) ** 2))


def cmd_evaluate(args):
    model, X, y, header = _load_pair(args)
    if X.shape[0] == 0:
        raise DataError(f"{args.data} has no rows")
    name, value = evaluate(model, X, y, header.task)
    print(f"{name} {value:.6f}")


def run_compare(seeds, n, dim, n_classes, depth, K, test_fraction, certified_only=False,
                max_attempts=None, jobs=1):
    """Compare reports for ``seeds`` seeds starting at ``seeds[0]``.

    With ``certified_only`` seeds are taken in order until ``len(seeds)``
    tie-free datasets have been found (or ``max_attempts`` seeds tried).
    """
    def one(seed):
        return compare_seed(seed, n=n, dim=dim, n_classes=n_classes, depth=depth, K=K,
                            test_fraction=test_fraction)

    def batch(chunk):
        if jobs > 1:
            with ThreadPoolExecutor(max_workers=jobs) as pool:
                return list(pool.map(one, chunk))
        return [one(s) for s in chunk]

    if not certified_only:
        return batch(list(seeds))
    wanted = len(seeds)
    limit = max_attempts if max_attempts is not None else 20 * wanted
    reports, next_seed = [], seeds[0]
    while len(reports) < wanted and next_seed - seeds[0] < limit:
        chunk = list(range(next_seed, min(next_seed + wanted, seeds[0] + limit)))
        next_seed = chunk[-1] + 1
        reports.extend(r for r in batch(chunk) if r.certified)
    return reports[:wanted]


def cmd_compare(args):
    seeds = list(range(args.seed, args.seed + args.seeds))
    reports = run_compare(
        seeds, args.n, args.dim, args.classes, args.depth, args.K, args.test_fraction,
        certified_only=args.certified_only, max_attempts=args.max_attempts, jobs=args.jobs,
    )
    _write_csv(args.out, REPORT_COLUMNS, [r.row() for r in reports])
    if args.details:
        rows = [
            (r.seed, c.fast_node, c.reference_node, c.category, c.fast_feature, c.fast_threshold,
             c.reference_axis, c.reference_cot, c.fast_gain, c.reference_gain)
            for r in reports for c in r.details
        ]
        _write_csv(
            args.details,
            ("seed", "fast_node", "reference_node", "category", "fast_feature", "fast_threshold",
             "reference_axis", "reference_cot", "fast_gain", "reference_gain"),
            rows,
        )
    nodes = sum(r.nodes for r in reports)
    exact = sum(r.exact for r in reports)
    ties = sum(r.tie_equiv for r in reports)
    mism = sum(r.mismatch for r in reports)
    frac = (lambda k: k / nodes) if nodes else (lambda k: float("nan"))
    train = np.mean([r.train_agree for r in reports]) if reports else float("nan")
    test = np.mean([r.test_agree for r in reports]) if reports else float("nan")
    print(
        f"{len(reports)} datasets ({sum(r.certified for r in reports)} tie-free), {nodes} nodes: "
        f"exact {frac(exact):.6f}, tie-equivalent {frac(ties):.6f}, mismatch {frac(mism):.6f}; "
        f"train agreement {train:.6f}, test agreement {test:.6f}"
    )
    if args.certified_only and len(reports) < args.seeds:
        raise DataError(f"only {len(reports)} tie-free datasets found within the attempt limit")


def cmd_bench(args):
    rows = bench_rows(args.n_list, dim=args.dim, depth=args.depth, repeats=args.repeats,
                      n_classes=args.classes, K=args.K, seed=args.seed)
    _write_csv(args.out, BENCH_COLUMNS, rows)
    for backend, n, *_, seconds in rows:
        print(f"{backend:>9} n={n:<7d} {seconds * 1e3:10.3f} ms")


# -- parser ---------------------------------------------------------------------


def build_parser():
    parser = argparse.ArgumentParser(
        prog="fasthyperdt",
        description="Hyperbolic decision trees via Klein-coordinate CART.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="sample a wrapped-Gaussian mixture dataset")
    g.add_argument("--classes", type=int, default=8)
    g.add_argument("--n", type=int, default=1000)
    g.add_argument("--dim", type=int, default=2)
    g.add_argument("--K", type=float, default=-1.0)
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("--task", choices=(CLASSIFICATION, REGRESSION), default=CLASSIFICATION)
    g.add_argument("--geometry", choices=GEOMETRIES, default=HYPERBOLOID)
    g.add_argument("--mean-scale", type=float, default=1.0)
    g.add_argument("--cluster-scale", type=float, default=0.5)
    g.add_argument("--noise", type=float, default=0.1, help="regression target noise")
    g.add_argument("--out", required=True)

    t = sub.add_parser("train", help="fit a model and save it as JSON")
    t.add_argument("--data", required=True)
    t.add_argument("--model-out", required=True)
    t.add_argument("--backend", choices=BACKENDS, default=FAST)
    t.add_argument("--geometry", choices=GEOMETRIES, help="must match the data header if given")
    t.add_argument("--K", type=float, help="must match the data header if given")
    t.add_argument("--depth", type=int, default=3)
    t.add_argument("--n-trees", type=int, default=1)
    t.add_argument("--bootstrap", action=argparse.BooleanOptionalAction, default=None,
                   help="default: on for forests, off for a single tree")
    t.add_argument("--feature-subsample", type=_feature_subsample, default="default",
                   help="default, sqrt, all or an integer (default: all for one tree, "
                        "sqrt(d) for classification forests, d for regression)")
    t.add_argument("--aggregation", choices=AGGREGATIONS)
    t.add_argument("--jobs", type=int, default=1)
    t.add_argument("--seed", type=int, required=True)

    for name, help_text in (("predict", "write predictions for a dataset"),
                            ("evaluate", "print accuracy or MSE on a dataset")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--model", required=True)
        p.add_argument("--data", required=True)
        if name == "predict":
            p.add_argument("--out", required=True)

    c = sub.add_parser("compare", help="node-by-node agreement of fast and reference trees")
    c.add_argument("--seeds", type=int, default=100, help="number of datasets")
    c.add_argument("--seed", type=int, required=True, help="first dataset seed")
    c.add_argument("--n", type=int, default=1000)
    c.add_argument("--dim", type=int, default=2)
    c.add_argument("--classes", type=int, default=8)
    c.add_argument("--depth", type=int, default=3)
    c.add_argument("--K", type=float, default=-1.0)
    c.add_argument("--test-fraction", type=float, default=0.2)
    c.add_argument("--certified-only", action="store_true",
                   help="keep only datasets whose every split has a unique best gain")
    c.add_argument("--max-attempts", type=int)
    c.add_argument("--jobs", type=int, default=1)
    c.add_argument("--out", required=True)
    c.add_argument("--details", help="optional CSV listing every non-exact node pair")

    b = sub.add_parser("bench", help="time fast and reference training")
    b.add_argument("--n-list", type=_n_list, default=list(DEFAULT_N_LIST))
    b.add_argument("--dim", type=int, default=2)
    b.add_argument("--depth", type=int, default=3)
    b.add_argument("--repeats", type=int, default=5)
    b.add_argument("--classes", type=int, default=8)
    b.add_argument("--K", type=float, default=-1.0)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--out", required=True)
    return parser


def _check_usage(args, parser):
    positive = {
        "n": "--n", "dim": "--dim", "classes": "--classes", "n_trees": "--n-trees",
        "seeds": "--seeds", "repeats": "--repeats", "jobs": "--jobs",
    }
    for attr, flag in positive.items():
        value = getattr(args, attr, None)
        if value is not None and value < 1:
            parser.error(f"{flag} must be at least 1")
    depth = getattr(args, "depth", None)
    if depth is not None and depth < 0:
        parser.error("--depth must be nonnegative")
    K = getattr(args, "K", None)
    if K is not None and not (K < 0 and np.isfinite(K)):
        parser.error("--K must be a finite negative number")
    tf = getattr(args, "test_fraction", None)
    if tf is not None and not 0.0 <= tf < 1.0:
        parser.error("--test-fraction must be in [0, 1)")


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    _check_usage(args, parser)
    try:
        if args.command == "train":
            cmd_train(args, parser)
        else:
            {
                "generate": cmd_generate,
                "predict": cmd_predict,
                "evaluate": cmd_evaluate,
                "compare": cmd_compare,
                "bench": cmd_bench,
            }[args.command](args)
    except (HyperDTError, FormatError, ValueError, OSError) as exc:
        print(f"fasthyperdt {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
