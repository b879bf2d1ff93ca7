"""Shared domain types, CSV ingestion and graph (de)serialization."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np


class DatasetError(ValueError):
    """Raised when ingested data violates dataset invariants."""


class GraphSchemaError(ValueError):
    """Raised when a graph payload violates the JSON schema or graph invariants."""


@dataclass(frozen=True, eq=False)
class TimeSeriesDataset:
    """Named, column-aligned multivariate time series.

    `values` has shape T x N; column j holds `var_names[j]`. Immutable after
    construction and safe to share across concurrent readers.
    """

    var_names: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        names = tuple(str(n) for n in self.var_names)
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 2:
            raise DatasetError(f"values must be 2-D, got shape {vals.shape}")
        if len(names) != vals.shape[1]:
            raise DatasetError(
                f"{len(names)} names for {vals.shape[1]} columns"
            )
        if len(names) < 1:
            raise DatasetError("dataset needs at least one variable")
        if vals.shape[0] < 2:
            raise DatasetError("dataset needs at least two time steps")
        if len(set(names)) != len(names):
            raise DatasetError(f"duplicate variable names in {names}")
        if any(not n for n in names):
            raise DatasetError("variable names must be nonempty")
        if not np.all(np.isfinite(vals)):
            t, j = np.argwhere(~np.isfinite(vals))[0]
            raise DatasetError(
                f"non-finite value at row {t}, column {names[j]!r}"
            )
        vals = vals.copy()
        vals.setflags(write=False)
        object.__setattr__(self, "var_names", names)
        object.__setattr__(self, "values", vals)

    @property
    def n_samples(self) -> int:
        return self.values.shape[0]

    @property
    def n_vars(self) -> int:
        return self.values.shape[1]

    def index_of(self, var: str) -> int:
        try:
            return self.var_names.index(var)
        except ValueError:
            raise DatasetError(f"unknown variable {var!r}") from None

    def column(self, var: str) -> np.ndarray:
        return self.values[:, self.index_of(var)]


@dataclass(frozen=True, order=True)
class LagWindow:
    """Inclusive range of time lags, 1 <= tau_min <= tau_max."""

    tau_min: int
    tau_max: int

    def __post_init__(self):
        if not (1 <= self.tau_min <= self.tau_max):
            raise ValueError(
                f"need 1 <= tau_min <= tau_max, got [{self.tau_min}, {self.tau_max}]"
            )

    @property
    def lags(self) -> range:
        return range(self.tau_min, self.tau_max + 1)


@dataclass(frozen=True)
class LaggedEdge:
    """Directed lag-specific edge: source at t-lag influences target at t."""

    source: str
    lag: int
    target: str
    statistic: float = 0.0
    p_value: float = 0.0

    def __post_init__(self):
        if self.lag < 1:
            raise ValueError(f"edge lag must be >= 1, got {self.lag}")
        if not (0.0 <= self.p_value <= 1.0):
            raise ValueError(f"p_value out of [0,1]: {self.p_value}")
        if not math.isfinite(self.statistic):
            raise ValueError(f"non-finite statistic: {self.statistic}")

    @property
    def triple(self) -> tuple[str, int, str]:
        return (self.source, self.lag, self.target)


@dataclass(frozen=True)
class ParentSet:
    """Lagged parents of one variable."""

    owner: str
    parents: frozenset[tuple[str, int]] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "parents", frozenset(self.parents))


@dataclass(frozen=True)
class HypotheticalStructure:
    """Per-target candidate-parent map proposed by the filter stage."""

    candidates: dict[str, frozenset[tuple[str, int]]] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(
            self,
            "candidates",
            {t: frozenset(ps) for t, ps in self.candidates.items() if ps},
        )

    def parents_of(self, target: str) -> frozenset[tuple[str, int]]:
        return self.candidates.get(target, frozenset())

    @property
    def is_empty(self) -> bool:
        return not self.candidates


@dataclass(frozen=True)
class CausalGraph:
    """Validated lag-specific directed graph with edge strengths."""

    nodes: frozenset[str]
    edges: frozenset[LaggedEdge]
    lag_window: LagWindow
    alpha: float

    def __post_init__(self):
        nodes = frozenset(self.nodes)
        edges = frozenset(self.edges)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "edges", edges)
        triples = {e.triple for e in edges}
        if len(triples) != len(edges):
            raise GraphSchemaError("duplicate (source, lag, target) triples")
        for e in edges:
            if e.source not in nodes or e.target not in nodes:
                raise GraphSchemaError(f"edge {e.triple} references unknown node")
            if not (self.lag_window.tau_min <= e.lag <= self.lag_window.tau_max):
                raise GraphSchemaError(
                    f"edge {e.triple} lag outside window "
                    f"[{self.lag_window.tau_min}, {self.lag_window.tau_max}]"
                )
            if e.p_value > self.alpha:
                raise GraphSchemaError(
                    f"edge {e.triple} retained with p={e.p_value} > alpha={self.alpha}"
                )

    @property
    def triples(self) -> frozenset[tuple[str, int, str]]:
        return frozenset(e.triple for e in self.edges)


def load_csv(path, delimiter: str = ",") -> TimeSeriesDataset:
    """Read a header-plus-numeric-rows CSV into a dataset.

    Errors name the offending row/column: non-numeric or non-finite cells,
    duplicate header names and ragged rows are all rejected.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        header = next(reader, None)
        if not header:
            raise DatasetError(f"{path}: empty file")
        names = [h.strip() for h in header]
        if len(set(names)) != len(names):
            raise DatasetError(f"{path}: duplicate header names")
        rows = []
        for i, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(names):
                raise DatasetError(
                    f"{path}: row {i} has {len(row)} cells, expected {len(names)}"
                )
            parsed = []
            for name, cell in zip(names, row):
                try:
                    v = float(cell)
                except ValueError:
                    raise DatasetError(
                        f"{path}: non-numeric cell at row {i}, column {name!r}: {cell!r}"
                    ) from None
                if not math.isfinite(v):
                    raise DatasetError(
                        f"{path}: non-finite cell at row {i}, column {name!r}: {cell!r}"
                    )
                parsed.append(v)
            rows.append(parsed)
    if not rows:
        raise DatasetError(f"{path}: no data rows")
    return TimeSeriesDataset(tuple(names), np.array(rows, dtype=float))


def save_csv(data: TimeSeriesDataset, path, delimiter: str = ",") -> None:
    """Write a dataset with 17-significant-digit cells so round-trips are exact."""
    with open(path, "w", newline="") as fh:
        fh.write(delimiter.join(data.var_names) + "\n")
        for row in data.values:
            fh.write(delimiter.join(f"{v:.17g}" for v in row) + "\n")


def lagged_column(
    data: TimeSeriesDataset, var: str, lag: int, window: LagWindow
) -> np.ndarray:
    """Column of `var` shifted back by `lag`, aligned over the window.

    All lagged columns over the same window share a common index range of
    length T - tau_max; aligned index t maps to original index
    t + tau_max - lag, so pairing lag-0 target with lag-tau source realizes
    (Y_t, X_{t-tau}).
    """
    if not (0 <= lag <= window.tau_max):
        raise ValueError(f"lag {lag} outside [0, {window.tau_max}]")
    col = data.column(var)
    T = data.n_samples
    return col[window.tau_max - lag : T - lag]


def _edge_payload(e: LaggedEdge) -> dict:
    return {
        "source": e.source,
        "lag": e.lag,
        "target": e.target,
        "statistic": e.statistic,
        "p_value": e.p_value,
    }


def serialize_graph(graph: CausalGraph, fmt: str = "json") -> bytes:
    """Serialize a graph to JSON (lossless) or DOT (for rendering)."""
    if fmt == "json":
        payload = {
            "nodes": sorted(graph.nodes),
            "lag_window": {
                "tau_min": graph.lag_window.tau_min,
                "tau_max": graph.lag_window.tau_max,
            },
            "alpha": graph.alpha,
            "edges": [
                _edge_payload(e)
                for e in sorted(graph.edges, key=lambda e: e.triple)
            ],
        }
        return (json.dumps(payload, indent=2) + "\n").encode()
    if fmt == "dot":
        return _to_dot(graph).encode()
    raise ValueError(f"unknown format {fmt!r}")


def _to_dot(graph: CausalGraph) -> str:
    # Self-edges annotate the node border (thicker border, lag note) instead
    # of drawing a loop; cross-edge pen width scales with |statistic|.
    self_edges: dict[str, list[LaggedEdge]] = {}
    cross = []
    for e in sorted(graph.edges, key=lambda e: e.triple):
        if e.source == e.target:
            self_edges.setdefault(e.source, []).append(e)
        else:
            cross.append(e)
    lines = ["digraph causal {", "  rankdir=LR;"]
    for node in sorted(graph.nodes):
        if node in self_edges:
            strongest = max(abs(e.statistic) for e in self_edges[node])
            lags = ",".join(str(e.lag) for e in self_edges[node])
            lines.append(
                f'  "{node}" [label="{node}\\nself τ={lags}", '
                f"penwidth={1.0 + 2.0 * strongest:.3g}];"
            )
        else:
            lines.append(f'  "{node}";')
    for e in cross:
        lines.append(
            f'  "{e.source}" -> "{e.target}" [label="τ={e.lag}", '
            f"penwidth={1.0 + 2.0 * abs(e.statistic):.3g}];"
        )
    lines.append("}")
    return "\n".join(lines) + "\n"


def parse_graph(raw: bytes | str) -> CausalGraph:
    """Parse the JSON graph schema back into a CausalGraph.

    Ground-truth files may omit statistic/p_value (both default to 0.0).
    """
    try:
        payload = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise GraphSchemaError(f"invalid JSON: {exc}") from None
    if not isinstance(payload, dict):
        raise GraphSchemaError("top-level JSON value must be an object")
    for key in ("nodes", "lag_window", "edges"):
        if key not in payload:
            raise GraphSchemaError(f"missing key {key!r}")
    lw = payload["lag_window"]
    try:
        window = LagWindow(int(lw["tau_min"]), int(lw["tau_max"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise GraphSchemaError(f"bad lag_window: {exc}") from None
    nodes = payload["nodes"]
    if not isinstance(nodes, list) or not all(isinstance(n, str) for n in nodes):
        raise GraphSchemaError("nodes must be a list of strings")
    alpha = float(payload.get("alpha", 0.05))
    edges = []
    for item in payload["edges"]:
        if not isinstance(item, dict):
            raise GraphSchemaError("edges must be objects")
        try:
            edges.append(
                LaggedEdge(
                    source=str(item["source"]),
                    lag=int(item["lag"]),
                    target=str(item["target"]),
                    statistic=float(item.get("statistic", 0.0)),
                    p_value=float(item.get("p_value", 0.0)),
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise GraphSchemaError(f"bad edge {item!r}: {exc}") from None
    return CausalGraph(frozenset(nodes), frozenset(edges), window, alpha)
