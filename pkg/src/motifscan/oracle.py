"""Brute-force reference enumerator for small graphs.

Independent of the search engine: it works on a dense adjacency matrix and
extends *all* partial assignments one slot at a time (in plain slot order),
rejecting a partial tuple as soon as any constraint among its assigned slots
fails. Every injective assignment is therefore either accepted or rejected
by an explicit check. ``method="naive"`` walks ``itertools.permutations``
directly and is used to cross-check the vectorised path on tiny graphs.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .engine import canonical_form
from .graph import TypedDigraph
from .pattern import MatchMode, MotifPattern

MAX_NODES = 50


class OracleTooLarge(ValueError):
    pass


@dataclass(frozen=True)
class OracleResult:
    raw: int
    deduped: int
    assignments: tuple[tuple[int, ...], ...]


def _role_ok(g: TypedDigraph, p: MotifPattern) -> np.ndarray:
    ok = np.zeros((p.k, g.n), dtype=bool)
    for s, roles in enumerate(p.slot_roles):
        for r in roles:
            ok[s] |= g.roles == r.code
    return ok


def _vectorised(g: TypedDigraph, p: MotifPattern) -> np.ndarray:
    adj = g.dense()
    np.fill_diagonal(adj, False)  # self-loops never matter
    pat = np.zeros((p.k, p.k), dtype=bool)
    for a, b in p.edges:
        pat[a, b] = True
    induced = p.mode is MatchMode.INDUCED
    role_ok = _role_ok(g, p)

    rows = np.flatnonzero(role_ok[0])[:, None]
    for s in range(1, p.k):
        cand = np.flatnonzero(role_ok[s])
        if rows.size == 0 or cand.size == 0:
            return np.empty((0, p.k), dtype=np.int64)
        left = np.repeat(rows, cand.size, axis=0)
        right = np.tile(cand, len(rows))
        keep = np.ones(len(right), dtype=bool)
        for t in range(s):
            u = left[:, t]
            keep &= u != right
            fwd = adj[u, right]
            bwd = adj[right, u]
            keep &= fwd if pat[t, s] else (~fwd if induced else True)
            keep &= bwd if pat[s, t] else (~bwd if induced else True)
        rows = np.column_stack([left[keep], right[keep]])
    return rows.astype(np.int64)


def _naive(g: TypedDigraph, p: MotifPattern) -> np.ndarray:
    adj = g.dense()
    role_ok = _role_ok(g, p)
    k = p.k
    induced = p.mode is MatchMode.INDUCED
    found = []
    for m in itertools.permutations(range(g.n), k):
        if not all(role_ok[s, m[s]] for s in range(k)):
            continue
        good = True
        for a in range(k):
            for b in range(k):
                if a == b:
                    continue
                want = (a, b) in p.edges
                has = bool(adj[m[a], m[b]])
                if (want and not has) or (induced and has and not want):
                    good = False
                    break
            if not good:
                break
        if good:
            found.append(m)
    return np.array(found, dtype=np.int64).reshape(-1, k)


def brute_force(g: TypedDigraph, p: MotifPattern, method: str = "vectorised") -> OracleResult:
    """Enumerate every valid assignment of ``p`` in ``g`` and dedup by automorphism."""
    if g.n > MAX_NODES:
        raise OracleTooLarge(f"oracle is capped at {MAX_NODES} nodes, graph has {g.n}")
    if method == "vectorised":
        rows = _vectorised(g, p)
    elif method == "naive":
        rows = _naive(g, p)
    else:
        raise ValueError(f"unknown method {method!r}")
    if len(rows) == 0:
        return OracleResult(0, 0, ())
    canon = canonical_form(p, rows)
    is_canon = np.all(canon == rows, axis=1)
    kept = sorted(map(tuple, rows[is_canon].tolist()))
    return OracleResult(len(rows), len(kept), tuple(kept))
