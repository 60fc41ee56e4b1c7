"""JSON tree documents and CSV datasets.

A tree document looks like::

    {
      "schema": "staged-tree/1",
      "root": "s0",
      "nodes": [{"id": "s0", "leaf": false}, ...],
      "edges": [{"id": "e0", "from": "s0", "to": "s1", "label": "Crew"}, ...],
      "stages": [["s0"], ["s1"], ["s3", "s4"], ...],
      "counts": {"e0": 885, ...},
      "alpha": 12.0,
      "method": "bdepu",
      "theta": [[0.4, 0.6], ...]
    }

``counts``, ``alpha``, ``method`` and ``theta`` are optional.  Nodes are
written breadth-first and edges depth-first, so saving a tree is
deterministic; combine with :func:`~stagedtrees.equivalence.canonical_form`
to make isomorphic trees serialize identically.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from pathlib import Path

from .errors import DocumentError, StagingError
from .tree import Dataset, Edge, EdgeCounts, EventTree, StagedTree

__all__ = [
    "SCHEMA",
    "TreeDocument",
    "parse_document",
    "dump_document",
    "load_tree",
    "save_tree",
    "load_dataset",
    "parse_dataset",
]

SCHEMA = "staged-tree/1"


@dataclass
class TreeDocument:
    staged_tree: StagedTree
    counts: EdgeCounts | None = None
    alpha: float | str | None = None
    method: str | None = None


def _require(obj, key, kind, where="document"):
    if not isinstance(obj, dict) or key not in obj:
        raise DocumentError(f"{where}: missing field {key!r}", field=key)
    value = obj[key]
    if not isinstance(value, kind) or (isinstance(value, bool) and kind is not bool):
        raise DocumentError(f"{where}: field {key!r} has the wrong type", field=key)
    return value


def parse_document(text: str) -> TreeDocument:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DocumentError(
            f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}",
            line=exc.lineno,
            column=exc.colno,
        ) from None
    if not isinstance(raw, dict):
        raise DocumentError("top level must be a JSON object")
    schema = _require(raw, "schema", str)
    if schema != SCHEMA:
        raise DocumentError(f"unsupported schema {schema!r}", field="schema")
    root = _require(raw, "root", str)
    nodes = _require(raw, "nodes", list)
    edges = _require(raw, "edges", list)
    stages = _require(raw, "stages", list)

    leaf_flag = {}
    for i, n in enumerate(nodes):
        nid = _require(n, "id", str, f"nodes[{i}]")
        leaf_flag[nid] = _require(n, "leaf", bool, f"nodes[{i}]")
    if root not in leaf_flag:
        raise DocumentError(f"root {root!r} is not a listed node", field="root")

    edge_by_id = {}
    built = []
    for i, e in enumerate(edges):
        where = f"edges[{i}]"
        eid = _require(e, "id", str, where)
        src = _require(e, "from", str, where)
        dst = _require(e, "to", str, where)
        label = _require(e, "label", str, where)
        for key, nid in (("from", src), ("to", dst)):
            if nid not in leaf_flag:
                raise DocumentError(f"{where}: unknown node {nid!r}", field=key)
        if eid in edge_by_id:
            raise DocumentError(f"{where}: duplicate edge id {eid!r}", field="id")
        edge = Edge(src, dst, label)
        edge_by_id[eid] = edge
        built.append(edge)

    tree = EventTree(root, built)
    if set(tree.nodes) != set(leaf_flag):
        raise DocumentError("node list does not match the nodes reachable by edges", field="nodes")
    for nid, is_leaf in leaf_flag.items():
        if tree.is_leaf(nid) != is_leaf:
            raise DocumentError(f"node {nid!r}: 'leaf' flag disagrees with its edges", field="nodes")

    for j, members in enumerate(stages):
        if not isinstance(members, list) or not all(isinstance(m, str) for m in members):
            raise DocumentError(f"stages[{j}] must be a list of node ids", field="stages")
        for m in members:
            if m not in leaf_flag:
                raise DocumentError(f"stages[{j}]: unknown node {m!r}", field="stages")

    theta = raw.get("theta")
    if theta is not None and not isinstance(theta, list):
        raise DocumentError("field 'theta' must be a list", field="theta")
    st = StagedTree(tree, stages, theta)
    st.require_valid()

    counts = None
    if "counts" in raw:
        raw_counts = raw["counts"]
        if not isinstance(raw_counts, dict):
            raise DocumentError("field 'counts' must be an object", field="counts")
        values = {}
        for eid, n in raw_counts.items():
            if eid not in edge_by_id:
                raise DocumentError(f"counts: unknown edge id {eid!r}", field="counts")
            if not isinstance(n, int) or isinstance(n, bool) or n < 0:
                raise DocumentError(f"counts: {eid!r} must be a nonnegative integer", field="counts")
            values[edge_by_id[eid]] = n
        counts = EdgeCounts(tree, values)
        if not counts.is_flow_conserving():
            raise DocumentError("counts are not flow conserving", field="counts")

    alpha = raw.get("alpha")
    if alpha is not None and not (
        alpha == "leaves" or (isinstance(alpha, (int, float)) and not isinstance(alpha, bool))
    ):
        raise DocumentError("field 'alpha' must be a number or \"leaves\"", field="alpha")
    method = raw.get("method")
    if method is not None and not isinstance(method, str):
        raise DocumentError("field 'method' must be a string", field="method")
    return TreeDocument(st, counts, alpha, method)


def dump_document(doc: TreeDocument) -> str:
    st = doc.staged_tree
    tree = st.tree
    edges = tree.edges
    edge_id = {e: f"e{i}" for i, e in enumerate(edges)}
    out = {
        "schema": SCHEMA,
        "root": tree.root,
        "nodes": [{"id": n, "leaf": tree.is_leaf(n)} for n in tree.nodes],
        "edges": [
            {"id": edge_id[e], "from": e.source, "to": e.target, "label": e.label} for e in edges
        ],
        "stages": [list(m) for m in st.stages],
    }
    if doc.counts is not None:
        if doc.counts.tree != tree:
            raise StagingError("counts belong to a different tree")
        out["counts"] = {edge_id[e]: doc.counts[e] for e in edges}
    if doc.alpha is not None:
        out["alpha"] = doc.alpha
    if doc.method is not None:
        out["method"] = doc.method
    if st.theta is not None:
        out["theta"] = [[float(x) for x in t] for t in st.theta]
    return _format(out) + "\n"


def _format(out: dict) -> str:
    # one node/edge/stage per line keeps documents diffable
    lines = ["{"]
    items = list(out.items())
    for i, (key, value) in enumerate(items):
        comma = "," if i < len(items) - 1 else ""
        if isinstance(value, list) and value:
            lines.append(f"  {json.dumps(key)}: [")
            for k, item in enumerate(value):
                sep = "," if k < len(value) - 1 else ""
                lines.append(f"    {json.dumps(item)}{sep}")
            lines.append(f"  ]{comma}")
        else:
            lines.append(f"  {json.dumps(key)}: {json.dumps(value)}{comma}")
    lines.append("}")
    return "\n".join(lines)


def load_tree(path) -> TreeDocument:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DocumentError(f"cannot read {path}: {exc.strerror or exc}") from None
    return parse_document(text)


def save_tree(st: StagedTree, path, counts: EdgeCounts | None = None, alpha=None, method=None) -> None:
    Path(path).write_text(dump_document(TreeDocument(st, counts, alpha, method)), encoding="utf-8")


def parse_dataset(text: str) -> Dataset:
    """Comma-separated records with a header; a trailing ``count`` column is expanded."""
    rows = list(csv.reader(io.StringIO(text)))
    numbered = [(i + 1, r) for i, r in enumerate(rows) if any(cell.strip() for cell in r)]
    if not numbered:
        raise DocumentError("dataset is empty (no header row)", line=1)
    _, header = numbered[0]
    header = [h.strip() for h in header]
    aggregated = header[-1].lower() == "count"
    variables = header[:-1] if aggregated else header
    if not variables:
        raise DocumentError("header names no variables", line=numbered[0][0])
    records = []
    for line, row in numbered[1:]:
        row = [cell.strip() for cell in row]
        if len(row) != len(header):
            raise DocumentError(
                f"line {line}: expected {len(header)} fields, found {len(row)}", line=line
            )
        values = row[:-1] if aggregated else row
        for col, cell in enumerate(values):
            if not cell:
                raise DocumentError(
                    f"line {line}: empty value for {variables[col]!r}; records must be "
                    "complete paths",
                    line=line,
                    column=col + 1,
                    field=variables[col],
                )
        n = 1
        if aggregated:
            try:
                n = int(row[-1])
            except ValueError:
                raise DocumentError(
                    f"line {line}: count {row[-1]!r} is not an integer",
                    line=line,
                    column=len(row),
                    field="count",
                ) from None
            if n < 0:
                raise DocumentError(f"line {line}: negative count", line=line, field="count")
        records.extend([tuple(values)] * n)
    return Dataset(records, variables)


def load_dataset(path) -> Dataset:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DocumentError(f"cannot read {path}: {exc.strerror or exc}") from None
    return parse_dataset(text)
