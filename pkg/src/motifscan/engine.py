"""Motif enumeration over a :class:`~motifscan.graph.TypedDigraph`.

Every valid slot assignment is visited exactly once by a backtracking search
rooted at an *anchor* slot. An assignment is reported only if it is the
canonical (lexicographically smallest) member of its orbit under the
pattern's automorphism group, so each motif occurrence is counted once
without storing previously seen matches.

Work is split into chunks of anchor candidates. Each worker thread owns a
private sink partial; partials are merged once at the end, which makes
totals independent of thread count and scheduling.
"""

from __future__ import annotations

import itertools
import os
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Protocol, Sequence

import numpy as np

from . import _kernel
from .graph import TypedDigraph
from .pattern import MatchMode, MotifPattern

__all__ = [
    "MatchCounts",
    "MatchSink",
    "CollectSink",
    "MatchWriter",
    "SearchPlan",
    "EnumerationAborted",
    "enumerate_matches",
    "count_parallel",
    "canonical_form",
    "plan_search",
    "matches_of",
    "ENGINE_VERSION",
]

ENGINE_VERSION = "1.0"
BUFFER_ROWS = 1 << 16
ANCHORS_PER_TASK = 64


class MatchSink(Protocol):
    """Consumer of canonical matches.

    ``consume`` receives ``(m, k)`` int64 blocks, one row per canonical match
    with node ids in pattern slot order. The engine calls ``fork`` once per
    worker and folds the partials back with ``merge``; merge must be
    associative and commutative.
    """

    def fork(self) -> "MatchSink": ...

    def consume(self, block: np.ndarray) -> None: ...

    def merge(self, other: "MatchSink") -> None: ...


@dataclass(frozen=True)
class MatchCounts:
    raw: int
    deduped: int
    automorphisms: int
    anchors_total: int = 0
    anchors_completed: int = 0
    per_worker: tuple[tuple[int, int], ...] = field(default=(), compare=False)

    def as_dict(self) -> dict:
        return {
            "raw": self.raw,
            "deduped": self.deduped,
            "automorphisms": self.automorphisms,
            "anchors_total": self.anchors_total,
            "anchors_completed": self.anchors_completed,
        }


class EnumerationAborted(RuntimeError):
    """A sink raised; carries the counts gathered before the failure."""

    def __init__(self, message: str, partial: MatchCounts):
        super().__init__(message)
        self.partial = partial


def canonical_form(p: MotifPattern, m):
    """Lexicographically smallest image of ``m`` under the automorphisms of ``p``.

    ``m`` lists node ids in slot order. A 2-D array is treated as one match
    per row and canonicalised row-wise.
    """
    arr = np.asarray(m, dtype=np.int64)
    if arr.ndim == 1:
        return min(tuple(int(arr[s]) for s in perm) for perm in p.automorphisms)
    perms = np.asarray(p.automorphisms, dtype=np.int64)
    images = arr[:, perms]  # (rows, |Aut|, k)
    best = images[:, 0].copy()
    for a in range(1, perms.shape[0]):
        cand = images[:, a]
        diff = cand != best
        first = np.argmax(diff, axis=1)
        rows = np.arange(len(arr))
        smaller = diff.any(axis=1) & (cand[rows, first] < best[rows, first])
        best[smaller] = cand[smaller]
    return best


# -- plan -----------------------------------------------------------------------


@dataclass(frozen=True)
class SearchPlan:
    order: np.ndarray
    role_mask: np.ndarray
    need_out: np.ndarray
    need_in: np.ndarray
    pat_adj: np.ndarray
    induced: bool
    conn_level: np.ndarray
    conn_dir: np.ndarray
    n_conn: np.ndarray
    autos: np.ndarray
    anchors: np.ndarray

    @property
    def anchor_slot(self) -> int:
        return int(self.order[0])


def _candidate_mask(g: TypedDigraph, p: MotifPattern, s: int) -> np.ndarray:
    mask = np.zeros(g.n, dtype=bool)
    for role in p.slot_roles[s]:
        mask |= g.roles == role.code
    mask &= g.out_degree >= p.out_degree(s)
    mask &= g.in_degree >= p.in_degree(s)
    return mask


def plan_search(g: TypedDigraph, p: MotifPattern) -> SearchPlan:
    """Choose the anchor slot and a static search order for ``p`` on ``g``.

    The anchor is the slot with the fewest role- and degree-compatible
    nodes. Remaining slots follow greedily by number of links to slots
    already placed, then by candidate estimate.
    """
    k = p.k
    masks = [_candidate_mask(g, p, s) for s in range(k)]
    est = [int(m.sum()) for m in masks]
    deg = [p.out_degree(s) + p.in_degree(s) for s in range(k)]
    adj = np.zeros((k, k), dtype=np.bool_)
    for a, b in p.edges:
        adj[a, b] = True

    anchor = min(range(k), key=lambda s: (est[s], -deg[s], s))
    order = [anchor]
    while len(order) < k:
        rest = [s for s in range(k) if s not in order]
        links = {s: sum(int(adj[s, t]) + int(adj[t, s]) for t in order) for s in rest}
        order.append(min(rest, key=lambda s: (-links[s], est[s], s)))

    conn_level = np.zeros((k, 2 * k), dtype=np.int64)
    conn_dir = np.zeros((k, 2 * k), dtype=np.int64)
    n_conn = np.zeros(k, dtype=np.int64)
    for level in range(1, k):
        s = order[level]
        c = 0
        for j in range(level):
            t = order[j]
            if adj[t, s]:
                conn_level[level, c], conn_dir[level, c] = j, _kernel.SRC_OUT
                c += 1
            if adj[s, t]:
                conn_level[level, c], conn_dir[level, c] = j, _kernel.SRC_IN
                c += 1
        n_conn[level] = c

    role_mask = np.array([sum(1 << r.code for r in roles) for roles in p.slot_roles], dtype=np.int64)
    autos = np.array([a for a in p.automorphisms if a != tuple(range(k))], dtype=np.int64).reshape(-1, k)
    return SearchPlan(
        order=np.array(order, dtype=np.int64),
        role_mask=role_mask,
        need_out=np.array([p.out_degree(s) for s in range(k)], dtype=np.int64),
        need_in=np.array([p.in_degree(s) for s in range(k)], dtype=np.int64),
        pat_adj=adj,
        induced=p.mode is MatchMode.INDUCED,
        conn_level=conn_level,
        conn_dir=conn_dir,
        n_conn=n_conn,
        autos=autos,
        anchors=np.flatnonzero(masks[anchor]).astype(np.int64),
    )


# -- execution ------------------------------------------------------------------


def _run_task(g: TypedDigraph, plan: SearchPlan, anchors: np.ndarray, sink, buf: np.ndarray) -> tuple[int, int]:
    k = len(plan.order)
    state = np.zeros(4, dtype=np.int64)
    bound = np.zeros(k, dtype=np.int64)
    cur = np.zeros(k, dtype=np.int64)
    hi = np.zeros(k, dtype=np.int64)
    src = np.zeros(k, dtype=np.int64)
    assign = np.zeros(k, dtype=np.int64)
    emit = sink is not None
    while state[0] < len(anchors):
        written = _kernel.search(
            g.out_ptr, g.out_idx, g.in_ptr, g.in_idx, g.roles, g.out_degree, g.in_degree,
            anchors,
            plan.order, plan.role_mask, plan.need_out, plan.need_in, plan.pat_adj, plan.induced,
            plan.conn_level, plan.conn_dir, plan.n_conn,
            plan.autos,
            state, bound, cur, hi, src, assign,
            buf, emit,
        )  # fmt: skip
        if written:
            sink.consume(buf[:written].copy())
    return int(state[2]), int(state[3])


def default_threads() -> int:
    return len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else (os.cpu_count() or 1)


def enumerate_matches(
    g: TypedDigraph,
    p: MotifPattern,
    sink: MatchSink | None = None,
    *,
    threads: int = 1,
    progress: Callable[[int, int], None] | None = None,
    anchors_per_task: int = ANCHORS_PER_TASK,
    buffer_rows: int = BUFFER_ROWS,
) -> MatchCounts:
    """Enumerate canonical matches of ``p`` in ``g``.

    ``sink`` (optional) receives every canonical match once; with
    ``threads > 1`` it is forked per worker and merged at the end.
    ``progress(done, total)`` is called with the number of anchor candidates
    exhausted so far after each chunk of anchors.
    """
    if threads < 1:
        raise ValueError("threads must be >= 1")
    plan = plan_search(g, p)
    n_aut = len(p.automorphisms)
    anchors = plan.anchors
    tasks = [anchors[i : i + anchors_per_task] for i in range(0, len(anchors), anchors_per_task)]
    workers = max(1, min(threads, len(tasks)))

    next_task = itertools.count()
    lock = threading.Lock()
    stop = threading.Event()
    done = [0]
    failure: list[BaseException] = []

    def work(part) -> tuple[int, int]:
        buf = np.empty((buffer_rows, p.k), dtype=np.int64)
        raw = dedup = 0
        while not stop.is_set():
            with lock:
                t = next(next_task)
            if t >= len(tasks):
                break
            try:
                r, d = _run_task(g, plan, tasks[t], part, buf)
            except BaseException as exc:
                with lock:
                    failure.append(exc)
                stop.set()
                break
            raw += r
            dedup += d
            with lock:
                done[0] += len(tasks[t])
                if progress is not None:
                    progress(done[0], len(anchors))
        return raw, dedup

    parts = [sink.fork() if sink is not None and workers > 1 else sink for _ in range(workers)]
    if workers == 1:
        per_worker = [work(parts[0])]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            per_worker = list(pool.map(work, parts))

    raw = sum(r for r, _ in per_worker)
    dedup = sum(d for _, d in per_worker)
    counts = MatchCounts(raw, dedup, n_aut, len(anchors), done[0], tuple(per_worker))
    if failure:
        raise EnumerationAborted(f"sink failed: {failure[0]!r}", counts) from failure[0]
    if sink is not None and workers > 1:
        for part in parts:
            sink.merge(part)
    return counts


def count_parallel(g: TypedDigraph, p: MotifPattern, threads: int | None = None, sink=None) -> MatchCounts:
    return enumerate_matches(g, p, sink, threads=threads or default_threads())


# -- simple sinks ---------------------------------------------------------------


class CollectSink:
    """Keeps every canonical match in memory; for tests and small graphs."""

    def __init__(self):
        self.blocks: list[np.ndarray] = []

    def fork(self) -> "CollectSink":
        return CollectSink()

    def consume(self, block: np.ndarray) -> None:
        self.blocks.append(block)

    def merge(self, other: "CollectSink") -> None:
        self.blocks.extend(other.blocks)

    def matches(self) -> list[tuple[int, ...]]:
        if not self.blocks:
            return []
        return sorted(map(tuple, np.concatenate(self.blocks).tolist()))


class MatchWriter:
    """Retains the ``limit`` lexicographically smallest canonical matches.

    Selecting by order rather than by arrival keeps the output independent of
    thread scheduling. ``total`` counts everything seen so truncation can be
    reported.
    """

    def __init__(self, limit: int, k: int):
        if limit < 0:
            raise ValueError("limit must be >= 0")
        self.limit = limit
        self.k = k
        self.total = 0
        self._rows = np.empty((0, k), dtype=np.int64)

    def fork(self) -> "MatchWriter":
        return MatchWriter(self.limit, self.k)

    def _shrink(self) -> None:
        order = np.lexsort(self._rows.T[::-1])
        self._rows = self._rows[order[: self.limit]]

    def consume(self, block: np.ndarray) -> None:
        self.total += len(block)
        self._rows = np.concatenate([self._rows, block])
        if len(self._rows) > 2 * self.limit:
            self._shrink()

    def merge(self, other: "MatchWriter") -> None:
        self.total += other.total
        self._rows = np.concatenate([self._rows, other._rows])
        self._shrink()

    @property
    def truncated(self) -> bool:
        return self.total > self.limit

    def rows(self) -> np.ndarray:
        self._shrink()
        return self._rows

    def write(self, path: str | os.PathLike) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for row in self.rows().tolist():
                fh.write(",".join(map(str, row)) + "\n")


def matches_of(g: TypedDigraph, p: MotifPattern, threads: int = 1) -> list[tuple[int, ...]]:
    """Sorted list of canonical matches (convenience for small graphs)."""
    sink = CollectSink()
    enumerate_matches(g, p, sink, threads=threads)
    return sink.matches()

