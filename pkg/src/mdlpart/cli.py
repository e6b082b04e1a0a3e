"""Command-line interface: ``mdlpart {simulate,fit,greedy,evaluate,bench}``.

Exit codes: 0 success, 1 domain/data error, 2 usage error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import io
from .core import StructureError, TreeError
from .evaluation import (confusion, confusion_from_sizes, null_rmse, partition_rmse, pooled_rmse,
                         prf1)
from .regression import EXPONENTIAL, LINEAR, FitOptions, RegressionModel, rmse
from .search import SearchConfig, find_maximal_homogeneous_partition, greedy_partition
from .simgen import LINEAR_TYPES, TYPES, SimSpec, generate

log = logging.getLogger("mdlpart")

KIND_FLAGS = {"linear": LINEAR, "exp": EXPONENTIAL}
BENCH_COLUMNS = ("dataset_type", "repeats", "OPT", "Greedy", "LinearRegression", "Null",
                 "OPT_precision", "OPT_recall", "OPT_F1",
                 "Greedy_precision", "Greedy_recall", "Greedy_F1")


class UsageError(Exception):
    pass


def _search_config(args) -> SearchConfig:
    return SearchConfig(gamma=args.gamma, fit_options=FitOptions(KIND_FLAGS[args.kind]),
                        seed=args.seed, compute_eta_everywhere=args.eta_everywhere)


def cmd_simulate(args) -> int:
    spec = SimSpec(args.type, d=args.features, leaf_size=args.leaf_size, noise_sd=args.noise,
                   poly_degree=args.poly_degree, seed=args.seed)
    dataset, tree, truth = generate(spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    schema = io.write_csv(out / "data.csv", dataset, tree)
    io.write_schema(schema, out / "schema.json")
    io.write_truth_json(truth, tree, out / "truth.json")
    log.info("wrote %d rows, %d clusters, %d true clusters to %s",
             dataset.n, len(tree), len(truth.partition), out)
    return 0


def _run_search(args, algorithm) -> int:
    schema = io.read_schema(args.schema)
    dataset, tree = io.load_csv(args.data, schema)
    report = algorithm(dataset, tree, _search_config(args))
    io.write_report_json(report, args.out, dataset)
    if args.dot:
        io.write_dot(tree, report, args.dot)
    log.info("selected %d cluster(s); gamma'=%.4g", len(report.partition), report.gamma_prime)
    return 0


def cmd_fit(args) -> int:
    return _run_search(args, find_maximal_homogeneous_partition)


def cmd_greedy(args) -> int:
    return _run_search(args, greedy_partition)


def cmd_evaluate(args) -> int:
    report = io.read_json(args.report)
    truth = io.read_json(args.truth)
    if report.get("tree_fingerprint") != truth.get("tree_fingerprint"):
        raise StructureError("report and ground truth were produced over different trees")
    sizes = lambda d: {c["members_sha1"]: c["size"] for c in d}  # noqa: E731
    c = confusion_from_sizes(sizes(truth["clusters"]), sizes(report["partition"]))
    precision, recall, f1 = prf1(c)
    metrics = {"schema_version": io.SCHEMA_VERSION, "algorithm": report.get("algorithm"),
               "tp": c.tp, "fp": c.fp, "fn": c.fn,
               "precision": precision, "recall": recall, "f1": f1,
               "rmse": report.get("rmse"), "gamma_prime": report.get("gamma_prime")}
    if args.data:
        if not args.schema:
            raise UsageError("--data needs --schema")
        metrics["rmse"] = _recompute_rmse(report, args.data, args.schema)
    io._write_json(metrics, args.out)
    print(f"precision={precision:.4f} recall={recall:.4f} f1={f1:.4f} rmse={metrics['rmse']}")
    return 0


def _recompute_rmse(report: dict, data, schema_path) -> float:
    dataset, tree = io.load_csv(data, io.read_schema(schema_path))
    if tree.fingerprint() != report["tree_fingerprint"]:
        raise StructureError("data file does not match the report's tree")
    yhat = np.full(dataset.n, np.nan)
    for entry in report["partition"]:
        m = RegressionModel(entry["model"]["kind"], entry["model"]["coefficients"])
        idx = tree[entry["id"]].members
        yhat[idx] = m.predict(dataset.features[idx])
    if np.isnan(yhat).any():
        raise StructureError("report partition does not cover every individual")
    return rmse(dataset.target, yhat)


def bench_one(dataset_type: str, seed: int, leaf_size: int, d: int, noise: float,
              kind: str, gamma: float) -> dict:
    """One repeat of the benchmark; returns the RMSE and P/R/F1 entries."""
    spec = SimSpec(dataset_type, d=d, leaf_size=leaf_size, noise_sd=noise, seed=seed)
    dataset, tree, truth = generate(spec)
    config = SearchConfig(gamma=gamma, fit_options=FitOptions(kind), seed=seed)
    row = {"seed": seed}
    for name, algo in (("OPT", find_maximal_homogeneous_partition), ("Greedy", greedy_partition)):
        report = algo(dataset, tree, config)
        row[name] = partition_rmse(report, dataset)
        p, r, f = prf1(confusion(truth, report.partition))
        row[f"{name}_precision"], row[f"{name}_recall"], row[f"{name}_F1"] = p, r, f
    row["LinearRegression"] = pooled_rmse(dataset, FitOptions(kind))
    row["Null"] = null_rmse(dataset)
    return row


def cmd_bench(args) -> int:
    types = [t.strip() for t in args.types.split(",") if t.strip()]
    bad = [t for t in types if t not in TYPES]
    if bad:
        raise UsageError(f"unknown dataset type(s) {bad}; choose from {list(TYPES)}")
    kind = KIND_FLAGS[args.kind]
    rows = []
    for t in types:
        leaf = args.leaf_size or (200 if t in LINEAR_TYPES else 100)
        seeds = [args.seed + r for r in range(args.repeats)]
        jobs = [(t, s, leaf, args.features, args.noise, kind, args.gamma) for s in seeds]
        if args.jobs > 1:
            with ProcessPoolExecutor(max_workers=args.jobs) as pool:
                results = list(pool.map(bench_one, *zip(*jobs)))
        else:
            results = [bench_one(*j) for j in jobs]
        results.sort(key=lambda r: r["seed"])
        row = {"dataset_type": t, "repeats": len(results)}
        for col in BENCH_COLUMNS[2:]:
            row[col] = float(np.mean([r[col] for r in results]))
        rows.append(row)
        log.info("%s: OPT F1=%.3f Greedy F1=%.3f", t, row["OPT_F1"], row["Greedy_F1"])
    io.write_table_csv(rows, args.out, BENCH_COLUMNS)
    return 0


def _add_search_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--data", required=True, help="CSV with layer, feature and target columns")
    p.add_argument("--schema", required=True, help="JSON schema naming the CSV columns")
    p.add_argument("--gamma", type=float, default=0.05, help="homogeneity threshold (default 0.05)")
    p.add_argument("--kind", choices=sorted(KIND_FLAGS), default="linear")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="report JSON path")
    p.add_argument("--dot", help="optional DOT output path")
    p.add_argument("--eta-everywhere", action="store_true",
                   help="compute homogeneity for every cluster, not only where needed")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mdlpart", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a synthetic benchmark dataset")
    p.add_argument("--type", required=True, choices=TYPES)
    p.add_argument("--leaf-size", type=int, default=None,
                   help="rows per last-layer cluster (default 10000 linear, 100 nonlinear)")
    p.add_argument("--features", type=int, default=20)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--poly-degree", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="maximal homogeneous partition search")
    _add_search_args(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("greedy", help="RMSE-greedy baseline partition")
    _add_search_args(p)
    p.set_defaults(func=cmd_greedy)

    p = sub.add_parser("evaluate", help="score a report against a ground-truth sidecar")
    p.add_argument("--report", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--data", help="recompute RMSE from this CSV instead of the stored value")
    p.add_argument("--schema")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("bench", help="repeat simulate+fit+greedy and tabulate means")
    p.add_argument("--types", default="type1,type2,type3,type4")
    p.add_argument("--repeats", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--leaf-size", type=int, default=None,
                   help="rows per leaf (default 200 linear, 100 nonlinear)")
    p.add_argument("--features", type=int, default=5)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--kind", choices=sorted(KIND_FLAGS), default="linear")
    p.add_argument("--gamma", type=float, default=0.05)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", required=True, help="CSV table path")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as e:
        parser.error(str(e))  # exits 2
    except TreeError as e:
        print("error: invalid cluster hierarchy:", file=sys.stderr)
        for v in e.violations:
            print(f"  - {v.message}", file=sys.stderr)
        return 1
    except (StructureError, ValueError, OSError, KeyError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
