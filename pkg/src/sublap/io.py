"""Problem and solution documents.

Problems are JSON objects with a ground-set size, an edge list, and
optionally a demand vector and a labels block.  Parsing validates
everything up front with errors anchored to the offending path, and
canonicalizes the document (defaults filled, numbers as floats) so that
parse(serialize(doc)) reproduces the document exactly.

All emitters are deterministic: keys in fixed order, floats at 17
significant digits (lossless for doubles), no locale or hash-order
dependence.  JSON has no ∞ literal, so infinite values are emitted as
null next to an "infinite": true flag; CSV uses the string "inf".
"""

from __future__ import annotations

import csv
import io as _io
import json
import math
from dataclasses import dataclass

import numpy as np

from .lattice import DistributiveLattice
from .submodular import (
    DirectedCut,
    GroundSet,
    HypergraphCut,
    InvalidEdgeError,
    SubmodularTransformation,
    TableFunction,
    UndirectedCut,
)


class DocumentError(ValueError):
    """A structurally or semantically invalid document."""


@dataclass(frozen=True, eq=False)
class ProblemDocument:
    """A parsed problem: the built transformation plus optional demand and
    labels, and the canonical JSON-ready dict in ``document``."""

    transformation: SubmodularTransformation
    b: np.ndarray | None
    fixed: dict[int, float] | None
    boundary: dict[int, float] | None
    names: tuple[str, ...] | None
    document: dict

    @property
    def n(self) -> int:
        return self.transformation.n


def _require(cond: bool, message: str):
    if not cond:
        raise DocumentError(message)


def _as_int(value, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise DocumentError(f"{where}: expected an integer, got {value!r}")
    return value


def _as_number(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise DocumentError(f"{where}: expected a number, got {value!r}")
    out = float(value)
    if not math.isfinite(out):
        raise DocumentError(f"{where}: value must be finite")
    return out


_EDGE_FIELDS = {
    "undirected": ("u", "v"),
    "directed": ("tail", "head"),
    "hyper": ("vertices",),
    "table": ("support", "values"),
}


def _build_edge(spec, where: str):
    _require(isinstance(spec, dict), f"{where}: each edge must be a JSON object")
    kind = spec.get("type")
    _require(
        kind in _EDGE_FIELDS,
        f"{where}: unknown edge type {kind!r} (expected undirected, directed, hyper, or table)",
    )
    allowed = set(_EDGE_FIELDS[kind]) | {"type", "weight"}
    for key in spec:
        _require(key in allowed, f"{where}: unknown field {key!r} for a {kind} edge")
    for key in _EDGE_FIELDS[kind]:
        _require(key in spec, f"{where}: missing field {key!r}")
    weight = _as_number(spec.get("weight", 1.0), f"{where}.weight")
    try:
        if kind == "undirected":
            edge = UndirectedCut(_as_int(spec["u"], f"{where}.u"), _as_int(spec["v"], f"{where}.v"), weight)
            canon = {"type": kind, "u": edge.u, "v": edge.v, "weight": weight}
        elif kind == "directed":
            edge = DirectedCut(
                _as_int(spec["tail"], f"{where}.tail"), _as_int(spec["head"], f"{where}.head"), weight
            )
            canon = {"type": kind, "tail": edge.tail, "head": edge.head, "weight": weight}
        elif kind == "hyper":
            verts = spec["vertices"]
            _require(isinstance(verts, list), f"{where}.vertices: expected an array")
            edge = HypergraphCut(
                tuple(_as_int(v, f"{where}.vertices[{i}]") for i, v in enumerate(verts)), weight
            )
            canon = {"type": kind, "vertices": list(edge.vertices), "weight": weight}
        else:
            support = spec["support"]
            values = spec["values"]
            _require(isinstance(support, list), f"{where}.support: expected an array")
            _require(isinstance(values, list), f"{where}.values: expected an array")
            edge = TableFunction(
                tuple(_as_int(v, f"{where}.support[{i}]") for i, v in enumerate(support)),
                tuple(_as_number(v, f"{where}.values[{i}]") for i, v in enumerate(values)),
                weight,
            )
            canon = {
                "type": kind,
                "support": list(edge.support),
                "values": [float(v) for v in edge.values],
                "weight": weight,
            }
    except (InvalidEdgeError, ValueError) as exc:
        if isinstance(exc, DocumentError):
            raise
        raise DocumentError(f"{where}: {exc}") from exc
    return edge, canon


def _parse_label_block(block, n: int, where: str) -> dict[int, float]:
    _require(isinstance(block, dict), f"{where}: expected an object of vertex: value pairs")
    out = {}
    for key, value in block.items():
        try:
            v = int(key)
        except (TypeError, ValueError):
            raise DocumentError(f"{where}: key {key!r} is not a vertex index") from None
        _require(0 <= v < n, f"{where}: vertex index {v} out of range for n={n}")
        _require(v not in out, f"{where}: duplicate vertex {v}")
        out[v] = _as_number(value, f"{where}[{key}]")
    return out


def parse_problem(source) -> ProblemDocument:
    """Parse and validate a problem from a path or a readable stream."""
    if hasattr(source, "read"):
        text = source.read()
    else:
        with open(source, encoding="utf-8") as handle:
            text = handle.read()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DocumentError(f"malformed JSON: {exc}") from exc

    _require(isinstance(raw, dict), "document root must be a JSON object")
    known = {"n", "edges", "b", "labels", "labels_names"}
    for key in raw:
        _require(key in known, f"unknown top-level field {key!r}")
    _require("n" in raw, "missing field 'n'")
    n = _as_int(raw["n"], "n")
    _require(n >= 1, "n must be a positive integer")
    _require("edges" in raw, "missing field 'edges'")
    _require(isinstance(raw["edges"], list), "edges: expected an array")

    edges = []
    canon_edges = []
    for i, spec in enumerate(raw["edges"]):
        edge, canon = _build_edge(spec, f"edges[{i}]")
        edges.append(edge)
        canon_edges.append(canon)
    try:
        tr = SubmodularTransformation(GroundSet(n), tuple(edges))
    except (InvalidEdgeError, ValueError) as exc:
        raise DocumentError(str(exc)) from exc

    document = {"n": n, "edges": canon_edges}

    b = None
    if "b" in raw:
        _require(isinstance(raw["b"], list), "b: expected an array")
        _require(len(raw["b"]) == n, f"b: expected {n} entries, got {len(raw['b'])}")
        b = np.array([_as_number(v, f"b[{i}]") for i, v in enumerate(raw["b"])])
        b.setflags(write=False)
        document["b"] = [float(v) for v in b]

    fixed = boundary = None
    if "labels" in raw:
        block = raw["labels"]
        _require(isinstance(block, dict), "labels: expected an object")
        for key in block:
            _require(key in ("fixed", "boundary"), f"labels: unknown field {key!r}")
        _require("fixed" in block and "boundary" in block,
                 "labels: both 'fixed' and 'boundary' are required")
        fixed = _parse_label_block(block["fixed"], n, "labels.fixed")
        boundary = _parse_label_block(block["boundary"], n, "labels.boundary")
        overlap = fixed.keys() & boundary.keys()
        _require(not overlap, f"labels: vertices {sorted(overlap)} are both fixed and boundary")
        uncovered = set(range(n)) - fixed.keys() - boundary.keys()
        _require(not uncovered, f"labels: vertices {sorted(uncovered)} have neither kind")
        document["labels"] = {
            "fixed": {str(v): fixed[v] for v in sorted(fixed)},
            "boundary": {str(v): boundary[v] for v in sorted(boundary)},
        }

    names = None
    if "labels_names" in raw:
        block = raw["labels_names"]
        _require(isinstance(block, list), "labels_names: expected an array")
        _require(len(block) == n, f"labels_names: expected {n} entries")
        for i, s in enumerate(block):
            _require(isinstance(s, str), f"labels_names[{i}]: expected a string")
        names = tuple(block)
        document["labels_names"] = list(names)

    return ProblemDocument(tr, b, fixed, boundary, names, document)


def serialize_problem(doc: ProblemDocument) -> str:
    return json_dumps(doc.document)


def _format_float(x: float) -> str:
    if math.isnan(x) or math.isinf(x):
        raise ValueError("non-finite float reached the JSON emitter; encode it as null plus a flag")
    if x == 0.0:
        x = 0.0  # normalize -0.0 so byte output does not depend on sign bits
    return "%.17g" % x


def _emit(obj, indent: int, out: list):
    pad = "  " * indent
    if obj is None:
        out.append("null")
    elif isinstance(obj, bool):
        out.append("true" if obj else "false")
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(_format_float(float(obj)))
    elif isinstance(obj, str):
        out.append(json.dumps(obj, ensure_ascii=False))
    elif isinstance(obj, (list, tuple)):
        if not obj:
            out.append("[]")
            return
        out.append("[\n")
        for i, item in enumerate(obj):
            out.append(pad + "  ")
            _emit(item, indent + 1, out)
            out.append(",\n" if i + 1 < len(obj) else "\n")
        out.append(pad + "]")
    elif isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{\n")
        items = list(obj.items())
        for i, (key, value) in enumerate(items):
            if not isinstance(key, str):
                raise ValueError(f"JSON object keys must be strings, got {key!r}")
            out.append(pad + "  " + json.dumps(key, ensure_ascii=False) + ": ")
            _emit(value, indent + 1, out)
            out.append(",\n" if i + 1 < len(items) else "\n")
        out.append(pad + "}")
    else:
        raise ValueError(f"cannot serialize {type(obj).__name__} to JSON")


def json_dumps(obj) -> str:
    """Deterministic JSON text: insertion-order keys, two-space indent,
    floats at 17 significant digits, no trailing newline."""
    out: list[str] = []
    _emit(obj, 0, out)
    return "".join(out)


def _float_or_flag(doc: dict, key: str, value: float):
    """Store a float field, spelling ±∞ as null plus '<key>_infinite'."""
    if math.isinf(value):
        doc[key] = None
        doc[key + "_infinite"] = True
    else:
        doc[key] = float(value)


def solution_to_document(solution, solver: dict) -> dict:
    doc = {"status": solution.status, "x": [float(v) for v in solution.x]}
    doc["phi"] = [float(v) for v in solution.phi]
    doc["objective"] = float(solution.objective)
    _float_or_flag(doc, "gap", float(solution.gap))
    doc["iterations"] = int(solution.iterations)
    doc["solver"] = solver
    if solution.violating_set is not None:
        doc["certificate"] = sorted(int(v) for v in solution.violating_set)
    return doc


def regression_to_document(result) -> dict:
    doc = {
        "method": result.method,
        "p": [float(v) for v in result.p],
        "z": [float(v) for v in result.z],
        "b_prime": [float(v) for v in result.b_prime],
        "breakpoints": [float(a) for a in result.breakpoints],
        "chain": [sorted(int(v) for v in side) for side in result.chain],
        "iterations": int(result.iterations),
    }
    doc["final_gap"] = float(result.gaps[-1]) if result.gaps else None
    doc["gap_bound"] = None if result.gap_bound is None else float(result.gap_bound)
    return doc


def resistance_to_document(source: int, target: int, rv) -> dict:
    doc = {"source": int(source), "target": int(target)}
    if math.isinf(rv.value):
        doc["value"] = None
        doc["infinite"] = True
    else:
        doc["value"] = float(rv.value)
        doc["infinite"] = False
    doc["degraded"] = bool(rv.degraded)
    if rv.witness_x is not None:
        doc["witness_x"] = [float(v) for v in rv.witness_x]
    if rv.witness_phi is not None:
        doc["witness_phi"] = [float(v) for v in rv.witness_phi]
    return doc


def report_to_document(report) -> dict:
    return {
        "measure": report.measure,
        "scores": [{"vertex": int(v), "score": float(s)} for v, s in report.scores],
    }


def lattice_to_document(lattice: DistributiveLattice) -> dict:
    return {
        "n": lattice.n,
        "classes": [sorted(int(v) for v in c) for c in lattice.classes],
        "arcs": sorted([int(i), int(j)] for i, j in lattice.hasse_arcs),
        "forced_in": sorted(int(j) for j in lattice.forced_in),
        "forced_out": sorted(int(j) for j in lattice.forced_out),
    }


def _csv_cell(value) -> str:
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return _format_float(value)
    return str(value)


def _csv_text(rows) -> str:
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    for row in rows:
        writer.writerow([_csv_cell(cell) for cell in row])
    return buf.getvalue()


def matrix_csv(matrix) -> str:
    matrix = np.asarray(matrix, dtype=float)
    return _csv_text(matrix.tolist())


def predictions_csv(vertices, potentials, labels) -> str:
    rows = [("vertex", "potential", "label")]
    for v, x, lab in zip(vertices, potentials, labels):
        rows.append((int(v), float(x), int(lab)))
    return _csv_text(rows)


def centrality_csv(report) -> str:
    rows = [("vertex", "score")]
    rows.extend((int(v), float(s)) for v, s in report.scores)
    return _csv_text(rows)
