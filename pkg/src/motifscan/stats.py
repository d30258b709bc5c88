"""Streaming aggregation of canonical matches into summary tables.

All tables are plain counters over node ids, type codes or layer codes, so
their memory does not grow with the number of matches and partials merge by
addition. Rows are rendered in a fixed order (count descending, then key
ascending) so output files are byte-stable across thread counts.
"""

from __future__ import annotations

import csv
import io
import json
import os
import time
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .engine import MatchCounts, enumerate_matches
from .graph import LAYERS, GraphError, TypedDigraph, graph_hash, read_graph
from .pattern import MotifPattern

__all__ = [
    "StatsError",
    "TableRequest",
    "AggregateSink",
    "AggregateReport",
    "aggregate",
    "scan_with_tables",
    "BatchSummaryRow",
    "batch_scan",
    "write_batch",
    "parse_groups",
]

_LAYER_CODE = {None: 0, **{name: i + 1 for i, name in enumerate(LAYERS)}}
_LAYER_NAME = ("-",) + LAYERS
_BASE = len(_LAYER_NAME)


class StatsError(ValueError):
    pass


def parse_groups(text: str) -> tuple[tuple[str, ...], ...]:
    """``"E1+E3,E2+E4,INH,XOR"`` -> ``(("E1","E3"), ("E2","E4"), ("INH",), ("XOR",))``."""
    groups = tuple(tuple(s.strip() for s in part.split("+")) for part in text.split(","))
    if not text.strip() or any(not slot for g in groups for slot in g):
        raise StatsError(f"bad slot grouping {text!r}")
    return groups


@dataclass(frozen=True)
class TableRequest:
    freq_groups: tuple[tuple[str, ...], ...] = ()
    layers: bool = False
    participation: str | None = None

    @property
    def empty(self) -> bool:
        return not (self.freq_groups or self.layers or self.participation)


@dataclass
class AggregateReport:
    deduped: int
    slot_names: tuple[str, ...]
    frequency: dict[str, list[tuple[str, int]]] = field(default_factory=dict)
    layer_signatures: list[tuple[tuple[str, ...], int]] | None = None
    participation_slot: str | None = None
    participation: list[tuple[str, int]] | None = None

    def frequency_csv(self) -> str:
        out = io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["group", "type_name", "count"])
        for label, rows in self.frequency.items():
            for name, count in rows:
                w.writerow([label, name, count])
        return out.getvalue()

    def layers_csv(self) -> str:
        out = io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        w.writerow([f"L({s})" for s in self.slot_names] + ["count"])
        for sig, count in self.layer_signatures or []:
            w.writerow(list(sig) + [count])
        return out.getvalue()

    def participation_csv(self) -> str:
        out = io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["name", "count"])
        for name, count in self.participation or []:
            w.writerow([name, count])
        return out.getvalue()

    def write(self, directory: str | os.PathLike) -> list[Path]:
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        written = []
        for fname, present, render in (
            ("slot_frequency.csv", bool(self.frequency), self.frequency_csv),
            ("layer_signatures.csv", self.layer_signatures is not None, self.layers_csv),
            ("participation.csv", self.participation is not None, self.participation_csv),
        ):
            if present:
                path = d / fname
                path.write_text(render(), encoding="utf-8")
                written.append(path)
        return written


def _ranked(items: Iterable[tuple[object, int]]) -> list:
    return sorted(((k, int(c)) for k, c in items if c), key=lambda kc: (-kc[1], kc[0]))


class AggregateSink:
    """Match sink building the tables of a :class:`TableRequest` in one pass."""

    def __init__(self, g: TypedDigraph, p: MotifPattern, request: TableRequest):
        self.g = g
        self.p = p
        self.request = request
        self.count = 0
        self._groups = [[p.slot_index(s) for s in grp] for grp in request.freq_groups]
        if request.layers and not g.has_layers:
            raise StatsError("layer signature table requested but the graph has no layer annotations")
        self._part_slot = p.slot_index(request.participation) if request.participation else None

        self._type_names, self._type_code = np.unique(np.array(g.type_names, dtype=object), return_inverse=True)
        self._layer_code = np.array([_LAYER_CODE[l] for l in g.layers], dtype=np.int64)
        self._weights = _BASE ** np.arange(p.k, dtype=np.int64)
        self._reset()

    def _reset(self) -> None:
        self.freq = [np.zeros(len(self._type_names), dtype=np.int64) for _ in self._groups]
        self.signatures: Counter = Counter()
        self.part = np.zeros(self.g.n if self._part_slot is not None else 0, dtype=np.int64)

    def fork(self) -> "AggregateSink":
        clone = object.__new__(AggregateSink)
        clone.__dict__.update(self.__dict__)
        clone.count = 0
        clone._reset()
        return clone

    def consume(self, block: np.ndarray) -> None:
        self.count += len(block)
        for arr, slots in zip(self.freq, self._groups):
            arr += np.bincount(self._type_code[block[:, slots].ravel()], minlength=len(arr))
        if self.request.layers:
            sig = self._layer_code[block] @ self._weights
            keys, counts = np.unique(sig, return_counts=True)
            self.signatures.update(dict(zip(keys.tolist(), counts.tolist())))
        if self._part_slot is not None:
            self.part += np.bincount(block[:, self._part_slot], minlength=self.g.n)

    def merge(self, other: "AggregateSink") -> None:
        self.count += other.count
        for a, b in zip(self.freq, other.freq):
            a += b
        self.signatures.update(other.signatures)
        self.part += other.part

    def _decode(self, sig: int) -> tuple[str, ...]:
        out = []
        for _ in range(self.p.k):
            sig, code = divmod(sig, _BASE)
            out.append(_LAYER_NAME[code])
        return tuple(out)

    def report(self) -> AggregateReport:
        rep = AggregateReport(self.count, self.p.slot_names)
        for grp, arr in zip(self.request.freq_groups, self.freq):
            rep.frequency["/".join(grp)] = _ranked(zip(self._type_names.tolist(), arr.tolist()))
        if self.request.layers:
            rep.layer_signatures = _ranked((self._decode(s), c) for s, c in self.signatures.items())
        if self._part_slot is not None:
            rep.participation_slot = self.request.participation
            names = self.g.names
            nz = np.flatnonzero(self.part)
            rep.participation = _ranked((names[i], self.part[i]) for i in nz)
        return rep


def aggregate(g: TypedDigraph, p: MotifPattern, matches, request: TableRequest) -> AggregateReport:
    """Aggregate an iterable of canonical matches (rows or ``(m, k)`` blocks)."""
    sink = AggregateSink(g, p, request)
    if isinstance(matches, np.ndarray):
        matches = [matches]
    for block in matches:
        sink.consume(np.asarray(block, dtype=np.int64).reshape(-1, p.k))
    return sink.report()


def scan_with_tables(
    g: TypedDigraph, p: MotifPattern, request: TableRequest, threads: int = 1
) -> tuple[MatchCounts, AggregateReport]:
    sink = AggregateSink(g, p, request)
    counts = enumerate_matches(g, p, sink, threads=threads)
    return counts, sink.report()


# -- batch scans ----------------------------------------------------------------


@dataclass(frozen=True)
class BatchSummaryRow:
    label: str
    neurons: int
    active_neurons: int
    connections: int
    motifs: int
    status: str = "ok"
    error: str = ""


def batch_scan(
    dirs: Sequence[str | os.PathLike],
    p: MotifPattern,
    threads: int = 1,
    labels: Sequence[str] | None = None,
) -> list[BatchSummaryRow]:
    """Scan each normalized graph directory; a failing graph yields a ``failed`` row."""
    labels = list(labels) if labels is not None else [Path(d).name for d in dirs]
    rows = []
    for label, d in zip(labels, dirs):
        try:
            g = read_graph(d)
        except (GraphError, OSError) as exc:
            rows.append(BatchSummaryRow(label, 0, 0, 0, 0, "failed", str(exc)))
            continue
        counts = enumerate_matches(g, p, threads=threads)
        rows.append(BatchSummaryRow(label, g.n, g.active_node_count, g.edge_count, counts.deduped))
    return rows


def write_batch(rows: Sequence[BatchSummaryRow], table: str | os.PathLike, scatter: str | os.PathLike | None = None):
    with open(table, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["label", "neurons", "active_neurons", "connections", "motifs", "status", "error"])
        for r in rows:
            w.writerow([r.label, r.neurons, r.active_neurons, r.connections, r.motifs, r.status, r.error])
    if scatter is not None:
        with open(scatter, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["label", "connections", "motifs"])
            for r in rows:
                if r.status == "ok":
                    w.writerow([r.label, r.connections, r.motifs])


def write_summary(path: str | os.PathLike, **fields) -> None:
    Path(path).write_text(json.dumps(fields, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def run_metadata(graph_dir, p: MotifPattern, threads: int, started: float, counts: MatchCounts) -> dict:
    return {
        "graph_hash": graph_hash(graph_dir),
        "pattern_hash": p.digest,
        "mode": p.mode.value,
        "threads": threads,
        "wall_time_s": round(time.perf_counter() - started, 6),
        "counts": counts.as_dict(),
    }
