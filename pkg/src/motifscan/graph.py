"""Immutable typed directed graph with CSR adjacency in both directions.

Node ids are dense ``0..n-1``. Each node carries a role (excitatory,
inhibitory, other), a dataset-specific type name and an optional cortical
layer. Parallel edges are collapsed on construction; self-loops are kept
(and counted) but can never take part in a motif match.
"""

from __future__ import annotations

import csv
import enum
import hashlib
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Literal, Sequence

import numpy as np

__all__ = [
    "NodeRole",
    "NodeMeta",
    "TypedDigraph",
    "GraphError",
    "LAYERS",
    "build_graph",
    "has_edge",
    "neighbors",
    "read_graph",
    "write_graph",
    "graph_hash",
]

LAYERS = ("L1", "L23", "L4", "L5", "L6")
NODES_FILE = "nodes.csv"
EDGES_FILE = "edges.csv"
NODE_HEADER = ["id", "name", "role", "type_name", "layer"]
EDGE_HEADER = ["src", "dst"]


class GraphError(ValueError):
    """Raised for malformed graph input (bad ids, duplicate names, bad files)."""


class NodeRole(enum.Enum):
    EXCITATORY = "E"
    INHIBITORY = "I"
    OTHER = "O"

    @property
    def code(self) -> int:
        return _ROLE_CODES[self]

    @classmethod
    def from_code(cls, code: int) -> "NodeRole":
        return _ROLES_BY_CODE[code]

    @classmethod
    def parse(cls, text: str) -> "NodeRole":
        try:
            return cls(text.strip().upper())
        except ValueError:
            raise GraphError(f"unknown role {text!r}; expected one of E, I, O") from None


_ROLES_BY_CODE = (NodeRole.EXCITATORY, NodeRole.INHIBITORY, NodeRole.OTHER)
_ROLE_CODES = {r: i for i, r in enumerate(_ROLES_BY_CODE)}


@dataclass(frozen=True)
class NodeMeta:
    id: int
    name: str
    role: NodeRole
    type_name: str = ""
    layer: str | None = None

    def __post_init__(self):
        if self.layer is not None and self.layer not in LAYERS:
            raise GraphError(f"node {self.name!r}: unknown layer {self.layer!r}")


def _csr(n: int, src: np.ndarray, dst: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # src/dst must already be sorted by (src, dst)
    ptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(src, minlength=n), out=ptr[1:])
    return ptr, dst.astype(np.int64, copy=True)


class TypedDigraph:
    """Simple directed graph with per-node metadata.

    Adjacency is held as two CSR structures (``out_ptr/out_idx`` and
    ``in_ptr/in_idx``) with ascending neighbour lists, so edge tests are a
    binary search. Instances are read-only after construction and safe to
    share between threads.
    """

    def __init__(
        self,
        names: Sequence[str],
        roles: np.ndarray,
        type_names: Sequence[str],
        layers: Sequence[str | None],
        src: np.ndarray,
        dst: np.ndarray,
    ):
        n = len(names)
        if not (len(roles) == len(type_names) == len(layers) == n):
            raise GraphError("node metadata columns differ in length")
        if len(set(names)) != n:
            seen = set()
            dup = next(x for x in names if x in seen or seen.add(x))
            raise GraphError(f"duplicate node name {dup!r}")
        src = np.asarray(src, dtype=np.int64).ravel()
        dst = np.asarray(dst, dtype=np.int64).ravel()
        if src.shape != dst.shape:
            raise GraphError("src and dst arrays differ in length")
        if src.size and (min(src.min(), dst.min()) < 0 or max(src.max(), dst.max()) >= n):
            bad = np.flatnonzero((src < 0) | (src >= n) | (dst < 0) | (dst >= n))[0]
            raise GraphError(f"edge ({src[bad]}, {dst[bad]}) has an endpoint out of range 0..{n - 1}")

        self._names = list(names)
        self._type_names = list(type_names)
        self._layers = [l or None for l in layers]
        self.roles = np.asarray(roles, dtype=np.uint8)
        self.roles.setflags(write=False)

        self.raw_edge_count = int(src.size)
        key = np.unique(src * max(n, 1) + dst)
        s, d = (key // max(n, 1), key % max(n, 1)) if n else (key, key)
        self.edge_count = int(key.size)
        self.self_loop_count = int(np.count_nonzero(s == d))
        self.out_ptr, self.out_idx = _csr(n, s, d)
        order = np.lexsort((s, d))
        self.in_ptr, self.in_idx = _csr(n, d[order], s[order])
        self.out_degree = np.diff(self.out_ptr)
        self.in_degree = np.diff(self.in_ptr)
        for arr in (self.out_ptr, self.out_idx, self.in_ptr, self.in_idx, self.out_degree, self.in_degree):
            arr.setflags(write=False)
        self._index = {name: i for i, name in enumerate(self._names)}

    @property
    def n(self) -> int:
        return len(self._names)

    def __len__(self) -> int:
        return self.n

    def __repr__(self) -> str:
        return f"TypedDigraph(n={self.n}, edges={self.edge_count})"

    @property
    def nodes(self) -> list[NodeMeta]:
        return [self.node(i) for i in range(self.n)]

    def node(self, i: int) -> NodeMeta:
        self._check(i)
        return NodeMeta(
            i, self._names[i], NodeRole.from_code(int(self.roles[i])), self._type_names[i], self._layers[i]
        )

    @property
    def names(self) -> list[str]:
        return list(self._names)

    @property
    def type_names(self) -> list[str]:
        return list(self._type_names)

    @property
    def layers(self) -> list[str | None]:
        return list(self._layers)

    @property
    def has_layers(self) -> bool:
        return any(l is not None for l in self._layers)

    def index_of(self, name: str) -> int:
        return self._index[name]

    def _check(self, u) -> None:
        if not 0 <= u < self.n:
            raise IndexError(f"node id {u} out of range 0..{self.n - 1}")

    def has_edge(self, u: int, v: int) -> bool:
        self._check(u)
        self._check(v)
        lo, hi = self.out_ptr[u], self.out_ptr[u + 1]
        i = lo + np.searchsorted(self.out_idx[lo:hi], v)
        return bool(i < hi and self.out_idx[i] == v)

    def neighbors(self, u: int, direction: Literal["out", "in"] = "out") -> np.ndarray:
        self._check(u)
        if direction == "out":
            return self.out_idx[self.out_ptr[u] : self.out_ptr[u + 1]]
        if direction == "in":
            return self.in_idx[self.in_ptr[u] : self.in_ptr[u + 1]]
        raise ValueError(f"direction must be 'out' or 'in', got {direction!r}")

    def edges(self) -> np.ndarray:
        """Return the collapsed edge list as an ``(m, 2)`` array sorted by (src, dst)."""
        src = np.repeat(np.arange(self.n, dtype=np.int64), self.out_degree)
        return np.column_stack([src, self.out_idx])

    def role_counts(self) -> dict[NodeRole, int]:
        counts = np.bincount(self.roles, minlength=3)
        return {r: int(counts[r.code]) for r in NodeRole}

    @property
    def active_node_count(self) -> int:
        """Nodes with total degree of at least one."""
        return int(np.count_nonzero((self.out_degree + self.in_degree) > 0))

    def dense(self) -> np.ndarray:
        """Dense boolean adjacency matrix; only sensible for small graphs."""
        a = np.zeros((self.n, self.n), dtype=bool)
        e = self.edges()
        a[e[:, 0], e[:, 1]] = True
        return a


def build_graph(nodes: Sequence[NodeMeta], edges: Iterable[tuple[int, int]]) -> TypedDigraph:
    for i, meta in enumerate(nodes):
        if meta.id != i:
            raise GraphError(f"node ids must be dense 0..n-1; position {i} holds id {meta.id}")
    e = np.asarray(list(edges), dtype=np.int64).reshape(-1, 2)
    return TypedDigraph(
        [m.name for m in nodes],
        np.array([m.role.code for m in nodes], dtype=np.uint8),
        [m.type_name for m in nodes],
        [m.layer for m in nodes],
        e[:, 0],
        e[:, 1],
    )


def has_edge(g: TypedDigraph, u: int, v: int) -> bool:
    return g.has_edge(u, v)


def neighbors(g: TypedDigraph, u: int, direction: Literal["out", "in"] = "out") -> np.ndarray:
    return g.neighbors(u, direction)


# -- normalized on-disk format ------------------------------------------------


def _atomic_write(path: Path, write) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            write(fh)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_nodes_file(path: Path, names, roles, type_names, layers) -> None:
    def write(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(NODE_HEADER)
        for i, (name, role, t, layer) in enumerate(zip(names, roles, type_names, layers)):
            w.writerow([i, name, NodeRole.from_code(int(role)).value, t, layer or ""])

    _atomic_write(Path(path), write)


def write_edges_file(path: Path, src: np.ndarray, dst: np.ndarray) -> None:
    def write(fh):
        fh.write("src,dst\n")
        block = 1 << 20
        for i in range(0, len(src), block):
            chunk = np.column_stack([src[i : i + block], dst[i : i + block]])
            fh.write("".join(f"{a},{b}\n" for a, b in chunk.tolist()))

    _atomic_write(Path(path), write)


def write_graph(g: TypedDigraph, directory: str | os.PathLike) -> None:
    """Write ``g`` as normalized ``nodes.csv``/``edges.csv`` (collapsed edges)."""
    d = Path(directory)
    write_nodes_file(d / NODES_FILE, g.names, g.roles, g.type_names, g.layers)
    e = g.edges()
    write_edges_file(d / EDGES_FILE, e[:, 0], e[:, 1])


def read_nodes_file(path: Path):
    import pandas as pd

    try:
        df = pd.read_csv(path, dtype=str, keep_default_na=False, na_filter=False)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
        raise GraphError(f"cannot read node file {path}: {exc}") from exc
    if list(df.columns) != NODE_HEADER:
        raise GraphError(f"{path}: expected header {','.join(NODE_HEADER)}, got {','.join(df.columns)}")
    ids = df["id"].astype(np.int64).to_numpy()
    if not np.array_equal(ids, np.arange(len(df))):
        raise GraphError(f"{path}: node ids must be dense 0..n-1 in file order")
    roles = np.array([NodeRole.parse(r).code for r in df["role"]], dtype=np.uint8)
    layers = [l if l else None for l in df["layer"]]
    bad = {l for l in layers if l is not None and l not in LAYERS}
    if bad:
        raise GraphError(f"{path}: unknown layer value(s) {sorted(bad)}")
    return df["name"].tolist(), roles, df["type_name"].tolist(), layers


def read_edges_file(path: Path) -> tuple[np.ndarray, np.ndarray]:
    import pandas as pd

    try:
        df = pd.read_csv(path, dtype=np.int64)
    except (OSError, ValueError, pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
        raise GraphError(f"cannot read edge file {path}: {exc}") from exc
    if list(df.columns) != EDGE_HEADER:
        raise GraphError(f"{path}: expected header src,dst, got {','.join(df.columns)}")
    return df["src"].to_numpy(), df["dst"].to_numpy()


def read_graph(directory: str | os.PathLike) -> TypedDigraph:
    """Load a graph from a directory holding normalized ``nodes.csv``/``edges.csv``."""
    d = Path(directory)
    if not d.is_dir():
        raise GraphError(f"graph directory {d} does not exist")
    names, roles, types, layers = read_nodes_file(d / NODES_FILE)
    src, dst = read_edges_file(d / EDGES_FILE)
    return TypedDigraph(names, roles, types, layers, src, dst)


def graph_hash(directory: str | os.PathLike) -> str:
    h = hashlib.sha256()
    for name in (NODES_FILE, EDGES_FILE):
        with open(Path(directory) / name, "rb") as fh:
            for chunk in iter(lambda: fh.read(1 << 20), b""):
                h.update(chunk)
    return h.hexdigest()
