"""Seeded synthetic graphs for tests, benchmarks and demos."""

from __future__ import annotations

import numpy as np

from .graph import NodeRole, TypedDigraph
from .pattern import MotifPattern

DEFAULT_ROLE_PROBS = (0.7, 0.15, 0.15)


def _roles(rng: np.random.Generator, n: int, role_probs) -> np.ndarray:
    return rng.choice(3, size=n, p=np.asarray(role_probs, dtype=float)).astype(np.uint8)


def _graph(roles: np.ndarray, src, dst, prefix: str = "n") -> TypedDigraph:
    n = len(roles)
    names = [f"{prefix}{i}" for i in range(n)]
    types = [NodeRole.from_code(int(r)).name.lower() for r in roles]
    return TypedDigraph(names, roles, types, [None] * n, src, dst)


def random_graph(n: int, edge_prob: float, role_probs=DEFAULT_ROLE_PROBS, seed: int = 0) -> TypedDigraph:
    """Erdos-Renyi digraph without self-loops; roles E/I/O drawn independently."""
    rng = np.random.default_rng(seed)
    roles = _roles(rng, n, role_probs)
    a = rng.random((n, n)) < edge_prob
    np.fill_diagonal(a, False)
    src, dst = np.nonzero(a)
    return _graph(roles, src, dst)


def random_sparse_graph(n: int, m: int, role_probs=DEFAULT_ROLE_PROBS, seed: int = 0) -> TypedDigraph:
    """About ``m`` distinct uniformly random edges on ``n`` nodes (no self-loops)."""
    rng = np.random.default_rng(seed)
    roles = _roles(rng, n, role_probs)
    draw = int(m * 1.05) + 16
    src = rng.integers(0, n, draw)
    dst = rng.integers(0, n, draw)
    keep = src != dst
    key = np.unique(src[keep] * n + dst[keep])
    key = rng.permutation(key)[:m]
    return _graph(roles, key // n, key % n)


def pattern_graph(p: MotifPattern, roles: dict[str, NodeRole] | None = None) -> TypedDigraph:
    """The pattern itself as a graph; node ``i`` is slot ``i``."""
    codes = []
    for name, allowed in zip(p.slot_names, p.slot_roles):
        role = roles[name] if roles and name in roles else min(allowed, key=lambda r: r.code)
        codes.append(role.code)
    e = np.array(sorted(p.edges), dtype=np.int64).reshape(-1, 2)
    return TypedDigraph(list(p.slot_names), np.array(codes, dtype=np.uint8), list(p.slot_names), [None] * p.k, e[:, 0], e[:, 1])


def xor_fan(pairs: int, outputs: int) -> TypedDigraph:
    """A graph with exactly ``pairs * (pairs - 1) // 2 * outputs`` strict XOR motifs.

    One inhibitory hub receives from ``pairs`` input neurons ``a_j`` and
    projects to ``pairs`` relay neurons ``b_j`` with ``a_j -> b_j``; every
    relay projects to every output neuron. Any two distinct pairs plus one
    output form an induced XOR motif (true role profile), and nothing else
    does.
    """
    hub = 0
    a = 1 + np.arange(pairs)
    b = 1 + pairs + np.arange(pairs)
    x = 1 + 2 * pairs + np.arange(outputs)
    n = 1 + 2 * pairs + outputs
    roles = np.full(n, NodeRole.EXCITATORY.code, dtype=np.uint8)
    roles[hub] = NodeRole.INHIBITORY.code
    src = np.concatenate([a, np.full(pairs, hub), a, np.repeat(b, outputs)])
    dst = np.concatenate([np.full(pairs, hub), b, b, np.tile(x, pairs)])
    return _graph(roles, src, dst)
