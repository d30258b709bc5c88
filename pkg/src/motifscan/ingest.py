"""Convert raw connectome files into the normalized ``nodes.csv``/``edges.csv`` pair.

Two source shapes are supported: a square named adjacency matrix plus a
neuron -> neurotransmitter table (worm), and a node/edge list with an
optional node-type table (fly neuropils, mouse V1). Roles come from a
per-dataset :class:`RoleMapping`; there is deliberately no global default
because datasets disagree (glutamate is excitatory in the worm preset and
inhibitory in the fly preset).
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal

import numpy as np
import pandas as pd

from .graph import (
    EDGES_FILE,
    NODES_FILE,
    GraphError,
    NodeRole,
    _atomic_write,
    read_edges_file,
    read_nodes_file,
    write_edges_file,
    write_nodes_file,
)

log = logging.getLogger(__name__)

__all__ = [
    "IngestError",
    "RoleMapping",
    "IngestSummary",
    "SliceSpec",
    "load_mapping",
    "parse_layer",
    "ingest_adjacency",
    "ingest_edge_list",
    "slice_edges",
    "splitmix64",
    "sample_indices",
]

E, I, O = NodeRole.EXCITATORY, NodeRole.INHIBITORY, NodeRole.OTHER


class IngestError(ValueError):
    pass


def _norm(token: str) -> str:
    return re.sub(r"[^a-z0-9]", "", token.strip().lower())


@dataclass(frozen=True)
class RoleMapping:
    """Token -> role map. ``prefix`` mappings look at the first letter only."""

    name: str
    table: dict[str, NodeRole] = field(default_factory=dict)
    default: NodeRole = O
    prefix: bool = False

    def role(self, token: str) -> tuple[NodeRole, bool]:
        """Return ``(role, known)``; unknown tokens fall back to ``default``."""
        if self.prefix:
            key = token.strip()[:1].lower()
            if key in self.table:
                return self.table[key], True
            return self.default, False
        parts = [p for p in re.split(r"[;|/+]", token) if p.strip()] or [token]
        roles = [self.table.get(_norm(p)) for p in parts]
        known = [r for r in roles if r is not None]
        if not known:
            return self.default, False
        # co-transmitting neurons: an excitatory/inhibitory assignment wins over "other"
        for r in known:
            if r is not O:
                return r, True
        return known[0], True


_WORM = {
    "glutamate": E, "glu": E, "glutamatergic": E,
    "acetylcholine": E, "ach": E, "cholinergic": E,
    "gaba": I, "gabaergic": I,
    "serotonin": O, "5ht": O, "octopamine": O, "dopamine": O, "tyramine": O,
    "unknown": O, "": O,
}  # fmt: skip
_FLY = {
    "acetylcholine": E, "ach": E, "cholinergic": E,
    "gaba": I, "gabaergic": I,
    "glutamate": I, "glu": I, "glut": I, "glutamatergic": I,
}  # fmt: skip

PRESETS = {
    "worm": RoleMapping("worm", _WORM),
    "fly": RoleMapping("fly", _FLY),
    "v1-prefix": RoleMapping("v1-prefix", {"e": E, "i": I}, prefix=True),
}


def load_mapping(spec: str) -> RoleMapping:
    """A preset name or a ``token,role`` file (role in E/I/O)."""
    if spec in PRESETS:
        return PRESETS[spec]
    path = Path(spec)
    if not path.is_file():
        raise IngestError(f"unknown mapping {spec!r}: not a preset ({', '.join(PRESETS)}) or a file")
    table = {}
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        token, _, role = line.rpartition(",")
        if not token and not role:
            continue
        if lineno == 1 and role.strip().lower() == "role":
            continue
        try:
            table[_norm(token)] = NodeRole.parse(role)
        except GraphError as exc:
            raise IngestError(f"{path}:{lineno}: {exc}") from None
    return RoleMapping(path.stem, table)


_LAYER_RE = re.compile(r"^[A-Za-z](\d+)")
_LAYER_DIGITS = {"1": "L1", "23": "L23", "4": "L4", "5": "L5", "6": "L6"}


def parse_layer(type_name: str) -> str | None:
    """``e23Cux2`` -> ``L23``, ``i5Pvalb`` -> ``L5``; anything else -> None."""
    m = _LAYER_RE.match(type_name.strip())
    return _LAYER_DIGITS.get(m.group(1)) if m else None


@dataclass
class IngestSummary:
    nodes: int = 0
    edges: int = 0
    raw_edges: int = 0
    collapsed: int = 0
    self_loops: int = 0
    unknown_role: int = 0
    dropped_isolated: int = 0
    roles: dict[str, int] = field(default_factory=dict)

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def _collapse(src: np.ndarray, dst: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Drop repeated (src, dst) pairs, keeping the first occurrence in file order."""
    key = src.astype(np.int64) * max(n, 1) + dst
    _, first = np.unique(key, return_index=True)
    first.sort()
    return src[first], dst[first]


def _write_normalized(out: Path, names, roles, types, layers, src, dst, summary: IngestSummary) -> IngestSummary:
    out.mkdir(parents=True, exist_ok=True)
    summary.nodes = len(names)
    summary.edges = len(src)
    summary.self_loops = int(np.count_nonzero(src == dst))
    counts = np.bincount(np.asarray(roles, dtype=np.int64), minlength=3)
    summary.roles = {r.value: int(counts[r.code]) for r in NodeRole}
    write_nodes_file(out / NODES_FILE, names, roles, types, layers)
    write_edges_file(out / EDGES_FILE, src, dst)
    _atomic_write(out / "ingest.json", lambda fh: fh.write(json.dumps(summary.as_dict(), indent=2) + "\n"))
    return summary


def _read_role_table(path: Path) -> dict[str, str]:
    try:
        df = pd.read_csv(path, dtype=str, keep_default_na=False)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
        raise IngestError(f"cannot read role table {path}: {exc}") from exc
    if df.shape[1] < 2:
        raise IngestError(f"{path}: role table needs two columns (name, neurotransmitter)")
    return {str(k).strip(): str(v) for k, v in zip(df.iloc[:, 0], df.iloc[:, 1])}


def ingest_adjacency(
    matrix: str | Path,
    roles: str | Path,
    mapping: RoleMapping,
    out: str | Path,
    orientation: Literal["rows-presynaptic", "columns-presynaptic"] = "rows-presynaptic",
    keep_isolated: bool = False,
) -> IngestSummary:
    """Named square adjacency matrix -> normalized files.

    The first row holds column names and the first column row names. A
    nonzero cell ``(r, c)`` is the edge ``r -> c`` (rows presynaptic) or
    ``c -> r``. Neurons without any edge are dropped unless
    ``keep_isolated``; names missing from the role table get role ``O`` and
    are counted in ``unknown_role``.
    """
    try:
        df = pd.read_csv(matrix, index_col=0, dtype=str, keep_default_na=False)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
        raise IngestError(f"cannot read adjacency matrix {matrix}: {exc}") from exc
    rows = [str(x).strip() for x in df.index]
    cols = [str(x).strip() for x in df.columns]
    if len(rows) != len(cols) or set(rows) != set(cols):
        raise IngestError(f"{matrix}: adjacency matrix is not square ({len(rows)} rows x {len(cols)} columns)")
    if len(set(cols)) != len(cols):
        raise IngestError(f"{matrix}: duplicate neuron name in header")
    df.index, df.columns = rows, cols
    df = df.loc[cols, cols]
    try:
        values = df.replace("", "0").to_numpy().astype(float)
    except ValueError as exc:
        raise IngestError(f"{matrix}: unparsable cell: {exc}") from None
    if not np.all(np.isfinite(values)):
        raise IngestError(f"{matrix}: non-finite cell")

    r, c = np.nonzero(values)  # row-major: file order
    src, dst = (r, c) if orientation == "rows-presynaptic" else (c, r)
    n = len(cols)
    summary = IngestSummary(raw_edges=len(src))
    src, dst = _collapse(src, dst, n)
    summary.collapsed = summary.raw_edges - len(src)

    keep = np.arange(n)
    if not keep_isolated:
        used = np.zeros(n, dtype=bool)
        used[src] = used[dst] = True
        keep = np.flatnonzero(used)
        summary.dropped_isolated = n - len(keep)
    remap = np.full(n, -1, dtype=np.int64)
    remap[keep] = np.arange(len(keep))
    names = [cols[i] for i in keep]

    table = _read_role_table(Path(roles))
    role_codes, types = [], []
    for name in names:
        token = table.get(name)
        if token is None:
            summary.unknown_role += 1
            role_codes.append(O.code)
            types.append("")
            continue
        role, _ = mapping.role(token)
        role_codes.append(role.code)
        types.append(token.strip())
    if summary.unknown_role:
        log.warning("%d neuron(s) missing from the role table were assigned role O", summary.unknown_role)
    layers = [None] * len(names)
    return _write_normalized(Path(out), names, role_codes, types, layers, remap[src], remap[dst], summary)


_SRC_COLS = ("src", "source", "source_node_id", "pre", "pre_root_id", "pre_id", "presynaptic")
_DST_COLS = ("dst", "target", "target_node_id", "post", "post_root_id", "post_id", "postsynaptic")
_ID_COLS = ("id", "node_id", "root_id", "neuron_id")
_TYPE_ID_COLS = ("node_type_id", "type_id")
_TYPE_COLS = ("type_name", "pop_name", "nt_type", "neurotransmitter", "transmitter", "type")
_NAME_COLS = ("name",)


def _pick(df: pd.DataFrame, wanted, path, what, required=True):
    lower = {c.strip().lower(): c for c in df.columns}
    for w in wanted:
        if w in lower:
            return lower[w]
    if required:
        raise IngestError(f"{path}: no {what} column (looked for {', '.join(wanted)})")
    return None


def _read_table(path, what) -> pd.DataFrame:
    try:
        return pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=True)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
        raise IngestError(f"cannot read {what} file {path}: {exc}") from exc


def ingest_edge_list(
    edges: str | Path,
    nodes: str | Path,
    types: str | Path | None,
    mapping: RoleMapping,
    out: str | Path,
) -> IngestSummary:
    """Edge list + node table (+ optional node-type table) -> normalized files.

    Node ids are assigned in node-file order. The node type name comes from
    the type table when one is given (joined on ``node_type_id``), otherwise
    from a type column of the node file. Layers are parsed from type names
    such as ``e23Cux2``.
    """
    ndf = _read_table(nodes, "node")
    id_col = _pick(ndf, _ID_COLS, nodes, "node id")
    ids = ndf[id_col].str.strip()
    if ids.duplicated().any():
        raise IngestError(f"{nodes}: duplicate node id {ids[ids.duplicated()].iloc[0]!r}")

    if types is not None:
        tdf = _read_table(types, "type")
        tid = _pick(tdf, _TYPE_ID_COLS, types, "type id")
        tname = _pick(tdf, _TYPE_COLS, types, "type name")
        lookup = dict(zip(tdf[tid].str.strip(), tdf[tname].str.strip()))
        ref = ndf[_pick(ndf, _TYPE_ID_COLS, nodes, "type id")].str.strip()
        missing = ~ref.isin(lookup.keys())
        if missing.any():
            raise IngestError(f"{nodes}: node references unknown type id {ref[missing].iloc[0]!r}")
        type_names = ref.map(lookup).tolist()
    else:
        tcol = _pick(ndf, _TYPE_COLS, nodes, "type", required=False)
        type_names = ndf[tcol].str.strip().tolist() if tcol else [""] * len(ndf)
    ncol = _pick(ndf, _NAME_COLS, nodes, "name", required=False)
    names = ndf[ncol].str.strip().tolist() if ncol else ids.tolist()

    summary = IngestSummary()
    role_codes = []
    for t in type_names:
        role, known = mapping.role(t)
        summary.unknown_role += not known
        role_codes.append(role.code)
    layers = [parse_layer(t) for t in type_names]

    edf = _read_table(edges, "edge")
    s_col = _pick(edf, _SRC_COLS, edges, "source")
    d_col = _pick(edf, _DST_COLS, edges, "target")
    index = pd.Index(ids)
    src = index.get_indexer(edf[s_col].str.strip())
    dst = index.get_indexer(edf[d_col].str.strip())
    bad = np.flatnonzero((src < 0) | (dst < 0))
    if bad.size:
        row = edf.iloc[bad[0]]
        raise IngestError(f"{edges}: edge {row[s_col]}->{row[d_col]} references an unknown node")
    summary.raw_edges = len(src)
    src, dst = _collapse(src.astype(np.int64), dst.astype(np.int64), len(ids))
    summary.collapsed = summary.raw_edges - len(src)
    return _write_normalized(Path(out), names, role_codes, type_names, layers, src, dst, summary)


# -- slicing ----------------------------------------------------------------------

_MASK64 = (1 << 64) - 1
_GAMMA = np.uint64(0x9E3779B97F4A7C15)


def splitmix64(seed: int, counters: np.ndarray) -> np.ndarray:
    """SplitMix64 outputs for the given counter values (stateless, vectorised).

    ``x = seed + (counter + 1) * 0x9E3779B97F4A7C15`` followed by the standard
    SplitMix64 finaliser; all arithmetic is modulo 2**64.
    """
    with np.errstate(over="ignore"):
        z = np.uint64(seed & _MASK64) + (counters.astype(np.uint64) + np.uint64(1)) * _GAMMA
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        return z ^ (z >> np.uint64(31))


def sample_indices(total: int, n: int, seed: int, batch: int = 1 << 20) -> np.ndarray:
    """``n`` distinct indices from ``range(total)``, uniform, returned ascending.

    Draws SplitMix64 values for counters 0, 1, 2, ...; a draw ``r`` is
    rejected when ``r >= total * floor(2**64 / total)`` (removes modulo bias),
    otherwise it proposes ``r % total``. The first ``n`` distinct proposals
    in counter order are kept.
    """
    n = min(n, total)
    if n <= 0:
        return np.empty(0, dtype=np.int64)
    limit = np.uint64(((1 << 64) // total) * total - 1) if total & (total - 1) else None
    taken = np.zeros(total, dtype=bool)
    chosen: list[np.ndarray] = []
    need = n
    counter = 0
    while need:
        step = min(batch, 2 * need + 64)
        r = splitmix64(seed, np.arange(counter, counter + step, dtype=np.uint64))
        counter += step
        if limit is not None:
            r = r[r <= limit]
        idx = (r % np.uint64(total)).astype(np.int64)
        _, first = np.unique(idx, return_index=True)
        first.sort()
        idx = idx[first]
        idx = idx[~taken[idx]][:need]
        taken[idx] = True
        chosen.append(idx)
        need -= len(idx)
    return np.sort(np.concatenate(chosen))


@dataclass(frozen=True)
class SliceSpec:
    kind: Literal["head", "sample"]
    n: int
    seed: int = 0

    def __post_init__(self):
        if self.n < 0:
            raise IngestError("slice size must be >= 0")
        if self.kind not in ("head", "sample"):
            raise IngestError(f"unknown slice kind {self.kind!r}")


def slice_edges(src_dir: str | Path, spec: SliceSpec, out: str | Path) -> IngestSummary:
    """Keep a subset of edges and the nodes they touch.

    ``head`` keeps the first ``n`` edges in file order; ``sample`` keeps ``n``
    distinct edges chosen by :func:`sample_indices`, in their original
    order. Surviving nodes are renumbered densely (preserving order) and
    ``id_map.csv`` records ``new_id,old_id``.
    """
    src_dir, out = Path(src_dir), Path(out)
    names, roles, types, layers = read_nodes_file(src_dir / NODES_FILE)
    src, dst = read_edges_file(src_dir / EDGES_FILE)
    if spec.kind == "head":
        if spec.n > len(src):
            raise IngestError(f"head({spec.n}) exceeds the {len(src)} available edges")
        pick = np.arange(spec.n)
    else:
        pick = sample_indices(len(src), spec.n, spec.seed)
    src, dst = src[pick], dst[pick]
    used = np.zeros(len(names), dtype=bool)
    used[src] = used[dst] = True
    keep = np.flatnonzero(used)
    remap = np.full(len(names), -1, dtype=np.int64)
    remap[keep] = np.arange(len(keep))
    summary = IngestSummary(raw_edges=len(pick))
    out.mkdir(parents=True, exist_ok=True)

    def write_map(fh):
        fh.write("new_id,old_id\n")
        fh.write("".join(f"{i},{o}\n" for i, o in enumerate(keep.tolist())))

    _atomic_write(out / "id_map.csv", write_map)
    return _write_normalized(
        out,
        [names[i] for i in keep],
        roles[keep],
        [types[i] for i in keep],
        [layers[i] for i in keep],
        remap[src],
        remap[dst],
        summary,
    )
