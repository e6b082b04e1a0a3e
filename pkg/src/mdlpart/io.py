"""CSV ingestion, JSON reports and ground-truth sidecars, and DOT export."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .core import Dataset, HierarchyTree, InferenceReport, StructureError
from .evaluation import partition_rmse
from .regression import RegressionModel

SCHEMA_VERSION = 1


class IngestionError(StructureError):
    pass


@dataclass(frozen=True)
class CsvSchema:
    layer_columns: tuple[str, ...]
    feature_columns: tuple[str, ...]
    target_column: str
    id_column: str | None = None
    cluster_keys: str = "path"  # "path" or "label", see HierarchyTree.from_labels

    def __post_init__(self):
        object.__setattr__(self, "layer_columns", tuple(self.layer_columns))
        object.__setattr__(self, "feature_columns", tuple(self.feature_columns))
        if not self.layer_columns:
            raise ValueError("schema needs at least one layer column")
        if not self.feature_columns:
            raise ValueError("schema needs at least one feature column")
        cols = [*self.layer_columns, *self.feature_columns, self.target_column]
        if self.id_column is not None:
            cols.append(self.id_column)
        if len(set(cols)) != len(cols):
            raise ValueError("schema column roles must be disjoint")
        if self.cluster_keys not in ("path", "label"):
            raise ValueError(f"cluster_keys must be 'path' or 'label', got {self.cluster_keys!r}")

    @classmethod
    def from_dict(cls, d: dict) -> "CsvSchema":
        unknown = set(d) - {"id_column", "layer_columns", "feature_columns", "target_column",
                            "cluster_keys"}
        if unknown:
            raise ValueError(f"unknown schema keys: {sorted(unknown)}")
        try:
            return cls(layer_columns=d["layer_columns"], feature_columns=d["feature_columns"],
                       target_column=d["target_column"], id_column=d.get("id_column"),
                       cluster_keys=d.get("cluster_keys", "path"))
        except KeyError as e:
            raise ValueError(f"schema is missing {e.args[0]!r}") from None

    def to_dict(self) -> dict:
        return {"id_column": self.id_column, "layer_columns": list(self.layer_columns),
                "feature_columns": list(self.feature_columns),
                "target_column": self.target_column, "cluster_keys": self.cluster_keys}


def read_schema(path) -> CsvSchema:
    with open(path, encoding="utf-8") as fh:
        return CsvSchema.from_dict(json.load(fh))


def write_schema(schema: CsvSchema, path) -> None:
    Path(path).write_text(json.dumps(schema.to_dict(), indent=2) + "\n", encoding="utf-8")


def load_csv(path, schema: CsvSchema) -> tuple[Dataset, HierarchyTree]:
    """Read a header-first CSV into a dataset and its validated cluster hierarchy."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise IngestionError(f"{path}: empty file")
        col = {name: j for j, name in enumerate(header)}
        needed = [*schema.layer_columns, *schema.feature_columns, schema.target_column]
        if schema.id_column is not None:
            needed.append(schema.id_column)
        missing = [c for c in needed if c not in col]
        if missing:
            raise IngestionError(f"{path}: missing column(s) {missing}")
        feat_idx = [col[c] for c in schema.feature_columns]
        layer_idx = [col[c] for c in schema.layer_columns]
        X, y, labels, ids = [], [], [], []
        for row_no, row in enumerate(reader, start=1):
            if not row:
                continue
            if len(row) != len(header):
                raise IngestionError(f"{path}: row {row_no} has {len(row)} fields, "
                                     f"expected {len(header)}")
            X.append([_number(row[j], path, row_no, header[j]) for j in feat_idx])
            y.append(_number(row[col[schema.target_column]], path, row_no, schema.target_column))
            lab = []
            for j in layer_idx:
                if row[j] == "":
                    raise IngestionError(f"{path}: row {row_no}, column {header[j]!r}: "
                                         f"empty cluster label")
                lab.append(row[j])
            labels.append(lab)
            ids.append(row[col[schema.id_column]] if schema.id_column is not None else str(row_no - 1))
    if not y:
        raise IngestionError(f"{path}: no data rows")
    dataset = Dataset(np.array(X), np.array(y), column_names=schema.feature_columns, ids=ids)
    tree = HierarchyTree.from_labels(labels, keying=schema.cluster_keys, validate=False)
    tree.check(dataset.n)
    return dataset, tree


def _number(cell: str, path, row_no: int, column: str) -> float:
    try:
        v = float(cell)
    except ValueError:
        raise IngestionError(f"{path}: row {row_no}, column {column!r}: "
                             f"not a number: {cell!r}") from None
    if not math.isfinite(v):
        raise IngestionError(f"{path}: row {row_no}, column {column!r}: non-finite value {cell!r}")
    return v


def write_csv(path, dataset: Dataset, tree: HierarchyTree,
              schema: CsvSchema | None = None) -> CsvSchema:
    """Write a dataset and its hierarchy; returns the schema that reads it back.

    Layer columns hold each cluster's own label (the last ``/`` component of a
    path id). Floats are written with ``repr`` so they read back bit-identically.
    """
    if schema is None:
        names = dataset.column_names or tuple(f"x{j + 1}" for j in range(dataset.d))
        schema = CsvSchema(layer_columns=tuple(f"layer{k + 1}" for k in range(tree.n_layers)),
                           feature_columns=names, target_column="y", id_column="id")
    m = tree.membership
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        header = ([schema.id_column] if schema.id_column else []) + [
            *schema.layer_columns, *schema.feature_columns, schema.target_column]
        w.writerow(header)
        if tree.keying == "label":
            label_cache = [cid.split(":", 1)[1] for cid in tree.ids]
        else:
            label_cache = [cid.rsplit("/", 1)[-1] for cid in tree.ids]
        for i in range(dataset.n):
            row = [dataset.ids[i] if dataset.ids else str(i)] if schema.id_column else []
            row += [label_cache[m[i, k]] for k in range(tree.n_layers)]
            row += [repr(float(v)) for v in dataset.features[i]]
            row.append(repr(float(dataset.target[i])))
            w.writerow(row)
    return schema


def _num(v):
    if v is None:
        return None
    v = float(v)
    return v if math.isfinite(v) else None


def _model_json(m: RegressionModel) -> dict:
    return {"kind": m.kind, "coefficients": [float(c) for c in m.coefficients],
            "param_bits": int(m.param_bits)}


def report_to_dict(report: InferenceReport, dataset: Dataset | None = None) -> dict:
    tree = report.tree
    selected = []
    for cid in report.partition:
        c = tree[cid]
        selected.append({
            "id": cid, "layer": c.layer, "size": c.size, "members_sha1": c.digest(),
            "model": _model_json(report.optimal_models[cid]),
            "eta": _num(report.eta.get(cid)),
            "model_irr": _num(report.model_irr.get(cid)),
            "cluster_irr": _num(report.cluster_irr.get(cid)),
        })
    clusters = []
    for c in tree:
        clusters.append({
            "id": c.id, "layer": c.layer, "size": c.size, "parent": c.parent,
            "selected": c.id in report.partition,
            "model": _model_json(report.models[c.id]),
            "eta": _num(report.eta.get(c.id)),
            "model_irr": _num(report.model_irr.get(c.id)),
            "cluster_irr": _num(report.cluster_irr.get(c.id)),
        })
    out = {
        "schema_version": SCHEMA_VERSION,
        "algorithm": report.algorithm,
        "kind": report.kind,
        "seed": report.seed,
        "gamma": _num(report.gamma_used),
        "gamma_prime": _num(report.gamma_prime),
        "n": tree.n,
        "n_layers": tree.n_layers,
        "tree_fingerprint": tree.fingerprint(),
        "partition": selected,
        "clusters": clusters,
    }
    if dataset is not None:
        out["d"] = dataset.d
        out["rmse"] = partition_rmse(report, dataset)
    if report.extras.get("degenerate_eta"):
        out["degenerate_eta"] = list(report.extras["degenerate_eta"])
    return out


def write_report_json(report: InferenceReport, path, dataset: Dataset | None = None) -> dict:
    """Serialize a report with sorted keys so identical runs give identical bytes."""
    data = report_to_dict(report, dataset)
    _write_json(data, path)
    return data


def read_json(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _write_json(data: dict, path) -> None:
    text = json.dumps(data, indent=2, sort_keys=True, allow_nan=False)
    Path(path).write_text(text + "\n", encoding="utf-8")


def truth_to_dict(truth, tree: HierarchyTree) -> dict:
    spec = truth.spec
    clusters = []
    for cid in truth.partition:
        c = tree[cid]
        g = truth.generators.get(cid)
        entry = {"id": cid, "layer": c.layer, "size": c.size, "members_sha1": c.digest()}
        if g is not None:
            entry.update(feature=g.feature, c1=g.c1, c2=g.c2, kind=g.kind, degree=g.degree)
        clusters.append(entry)
    out = {"schema_version": SCHEMA_VERSION, "tree_fingerprint": tree.fingerprint(),
           "n": tree.n, "clusters": clusters}
    if spec is not None:
        out["spec"] = {"dataset_type": spec.dataset_type, "d": spec.d,
                       "leaf_size": spec.rows_per_leaf, "noise_sd": spec.noise_sd,
                       "poly_degree": spec.poly_degree, "seed": spec.seed,
                       "coefficient_range": list(spec.coefficient_range),
                       "intercept_range": list(spec.intercept_range)}
    return out


def write_truth_json(truth, tree: HierarchyTree, path) -> dict:
    data = truth_to_dict(truth, tree)
    _write_json(data, path)
    return data


def _dot_escape(s: str) -> str:
    return s.replace("\\", "\\\\").replace('"', '\\"')


def _dot_quote(s: str) -> str:
    return '"' + _dot_escape(s) + '"'


def write_dot(tree: HierarchyTree, report: InferenceReport, path, fill: str = "red") -> str:
    """DOT digraph of the hierarchy with the selected clusters filled."""
    lines = ["digraph mrc {", "  rankdir=TB;", "  node [shape=box, fontsize=10];"]
    for c in tree:
        selected = c.id in report.partition
        model = (report.optimal_models if selected else report.models).get(c.id)
        kind = model.kind if model is not None else "?"
        attrs = [f'label="{_dot_escape(c.id)}\\nn={c.size}\\n{kind}"']
        if selected:
            attrs.append(f"style=filled, fillcolor={fill}")
        lines.append(f"  {_dot_quote(c.id)} [{', '.join(attrs)}];")
    for c in tree:
        for ch in c.children:
            lines.append(f"  {_dot_quote(c.id)} -> {_dot_quote(ch)};")
    lines.append("}")
    text = "\n".join(lines) + "\n"
    Path(path).write_text(text, encoding="utf-8")
    return text


def write_table_csv(rows: Sequence[dict], path, columns: Sequence[str]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=list(columns), lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
