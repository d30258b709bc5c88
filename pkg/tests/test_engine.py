import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from networkx.algorithms import isomorphism as iso

from motifscan.engine import (
    CollectSink,
    EnumerationAborted,
    MatchWriter,
    canonical_form,
    count_parallel,
    enumerate_matches,
    matches_of,
    plan_search,
)
from motifscan.graph import NodeRole, TypedDigraph
from motifscan.oracle import brute_force
from motifscan.pattern import (
    BuiltinPatternId,
    MatchMode,
    PatternKind,
    RoleProfile,
    builtin_pattern,
    parse_pattern,
)
from motifscan.synthetic import pattern_graph, random_graph, random_sparse_graph, xor_fan

from .conftest import ALL_BUILTINS, pattern_id, typed_digraphs


def add_edges(g, extra):
    e = np.vstack([g.edges(), np.array(extra).reshape(-1, 2)])
    return TypedDigraph(g.names, g.roles, g.type_names, g.layers, e[:, 0], e[:, 1])


def drop_edge(g, edge):
    e = [tuple(x) for x in g.edges().tolist() if tuple(x) != tuple(edge)]
    e = np.array(e, dtype=np.int64).reshape(-1, 2)
    return TypedDigraph(g.names, g.roles, g.type_names, g.layers, e[:, 0], e[:, 1])


def networkx_raw(g, p):
    """Raw embedding count via networkx's VF2 matcher."""
    G = nx.DiGraph()
    G.add_nodes_from((i, {"role": int(r)}) for i, r in enumerate(g.roles))
    G.add_edges_from((u, v) for u, v in g.edges().tolist() if u != v)
    P = nx.DiGraph()
    P.add_nodes_from((s, {"allowed": {r.code for r in roles}}) for s, roles in enumerate(p.slot_roles))
    P.add_edges_from(p.edges)
    gm = iso.DiGraphMatcher(G, P, node_match=lambda gn, pn: gn["role"] in pn["allowed"])
    it = gm.subgraph_isomorphisms_iter() if p.mode is MatchMode.INDUCED else gm.subgraph_monomorphisms_iter()
    return sum(1 for _ in it)


def test_self_match(strict_true, xor_roles):
    g = pattern_graph(strict_true, xor_roles)
    c = enumerate_matches(g, strict_true)
    assert (c.raw, c.deduped) == (2, 1)
    assert matches_of(g, strict_true) == [(0, 1, 2, 3, 4, 5)]


def test_extra_edge_induced_vs_mono(strict_true, xor_roles):
    g = add_edges(pattern_graph(strict_true, xor_roles), [(0, 3)])  # E1 -> E4
    assert enumerate_matches(g, strict_true).deduped == 0
    assert enumerate_matches(g, strict_true.with_mode(MatchMode.MONOMORPHIC)).deduped == 1


def test_self_loops_do_not_block_induced(strict_true, xor_roles):
    g = add_edges(pattern_graph(strict_true, xor_roles), [(5, 5), (0, 0)])
    assert enumerate_matches(g, strict_true).deduped == 1


def test_empty_graph(strict_true):
    g = TypedDigraph([], np.zeros(0, np.uint8), [], [], [], [])
    assert enumerate_matches(g, strict_true).raw == 0


def test_canonical_form_examples(strict_true):
    assert canonical_form(strict_true, (5, 2, 3, 1, 9, 7)) == (3, 1, 5, 2, 9, 7)
    assert canonical_form(strict_true, (3, 1, 5, 2, 9, 7)) == (3, 1, 5, 2, 9, 7)
    asym = builtin_pattern(PatternKind.EXTENDED_ASYM_FEEDBACK)
    assert canonical_form(asym, (5, 2, 3, 1, 9, 7)) == (5, 2, 3, 1, 9, 7)


def test_canonical_form_rows_match_scalar(strict_true):
    rng = np.random.default_rng(0)
    rows = np.array([rng.permutation(50)[:6] for _ in range(200)])
    vec = canonical_form(strict_true, rows)
    for r, c in zip(rows, vec):
        assert tuple(c) == canonical_form(strict_true, r)


@given(typed_digraphs(max_nodes=10))
def test_canonical_form_idempotent(g):
    p = builtin_pattern(PatternKind.STRICT_XOR)
    rng = np.random.default_rng(g.edge_count)
    m = tuple(rng.permutation(30)[:6].tolist())
    once = canonical_form(p, m)
    assert canonical_form(p, once) == once


def test_anchor_is_inh_for_true_profile(strict_true):
    g = random_sparse_graph(2000, 20000, (0.85, 0.15, 0.0), seed=1)
    assert strict_true.slot_names[plan_search(g, strict_true).anchor_slot] == "INH"


@pytest.mark.parametrize("p", ALL_BUILTINS, ids=pattern_id)
@pytest.mark.parametrize("seed", range(6))
def test_engine_matches_networkx(p, seed):
    g = random_graph(11, 0.3, seed=100 + seed)
    c = enumerate_matches(g, p)
    assert c.raw == networkx_raw(g, p)
    assert c.raw == c.deduped * len(p.automorphisms)


@pytest.mark.parametrize("p", ALL_BUILTINS, ids=pattern_id)
@pytest.mark.parametrize("seed", range(4))
def test_engine_matches_oracle_assignments(p, seed):
    g = random_graph(14, 0.25, seed=seed)
    o = brute_force(g, p)
    assert matches_of(g, p) == list(o.assignments)


@settings(max_examples=60, deadline=None)
@given(typed_digraphs(min_nodes=6, max_nodes=14, self_loops=True))
def test_engine_equals_oracle_property(g):
    for p in ALL_BUILTINS:
        o = brute_force(g, p)
        c = enumerate_matches(g, p)
        assert (c.raw, c.deduped) == (o.raw, o.deduped)


def test_generic_patterns_match_oracle():
    texts = [
        "mode mono\nnode A *\nnode B *\nnode C *\nedge A B\nedge B C\nedge C A\n",
        "mode induced\nnode A E\nnode B *\nnode C I\nedge A B\nedge A C\n",
        "mode induced\nnode A *\nnode B *\nnode C *\nnode D *\nedge A B\n",  # disconnected slots
        "mode mono\nnode A *\nnode B *\nedge A B\nedge B A\n",
    ]
    for seed in range(5):
        g = random_graph(12, 0.3, seed=seed)
        for t in texts:
            p = parse_pattern(t)
            o = brute_force(g, p)
            assert matches_of(g, p) == list(o.assignments), t


@pytest.mark.parametrize("seed", range(5))
def test_mono_at_least_induced(seed):
    g = random_graph(16, 0.3, seed=seed)
    for p in ALL_BUILTINS:
        ind = enumerate_matches(g, p.with_mode(MatchMode.INDUCED)).deduped
        mono = enumerate_matches(g, p.with_mode(MatchMode.MONOMORPHIC)).deduped
        assert mono >= ind


@pytest.mark.parametrize("seed", range(5))
def test_role_monotonicity(seed):
    g = random_graph(16, 0.3, seed=seed)
    for kind in PatternKind:
        for mode in MatchMode:
            counts = [
                enumerate_matches(g, builtin_pattern(BuiltinPatternId(kind, prof), mode)).deduped
                for prof in (RoleProfile.TRUE, RoleProfile.TRUE_WITH_OTHER, RoleProfile.UNCONSTRAINED)
            ]
            assert counts == sorted(counts)


@pytest.mark.parametrize("seed", range(3))
def test_edge_deletion(seed):
    g = random_graph(14, 0.35, seed=seed)
    p = builtin_pattern(BuiltinPatternId(PatternKind.STRICT_XOR, RoleProfile.UNCONSTRAINED), MatchMode.MONOMORPHIC)
    before = matches_of(g, p)
    for u, v in g.edges().tolist()[:25]:
        after = matches_of(drop_edge(g, (u, v)), p)
        uses = {m for m in before if any((m[a], m[b]) == (u, v) for a, b in p.edges)}
        assert set(after) == set(before) - uses


def test_thread_independence():
    g = random_sparse_graph(3000, 60000, seed=3)
    p = builtin_pattern(BuiltinPatternId(PatternKind.STRICT_XOR, RoleProfile.UNCONSTRAINED))
    ref = count_parallel(g, p, 1)
    for t in (2, 3, 8):
        assert count_parallel(g, p, t) == ref
    s1, s8 = CollectSink(), CollectSink()
    enumerate_matches(g, p, s1, threads=1)
    enumerate_matches(g, p, s8, threads=8, anchors_per_task=7)
    assert s1.matches() == s8.matches()


def test_buffer_resume_is_lossless():
    g = xor_fan(12, 9)
    p = builtin_pattern(BuiltinPatternId(PatternKind.STRICT_XOR, RoleProfile.TRUE))
    full = CollectSink()
    enumerate_matches(g, p, full)
    tiny = CollectSink()
    c = enumerate_matches(g, p, tiny, buffer_rows=5)
    assert c.deduped == 12 * 11 // 2 * 9
    assert tiny.matches() == full.matches()
    assert len(tiny.blocks) > 1


def test_xor_fan_count_matches_oracle():
    g = xor_fan(5, 3)
    p = builtin_pattern(BuiltinPatternId(PatternKind.STRICT_XOR, RoleProfile.TRUE))
    assert enumerate_matches(g, p).deduped == brute_force(g, p).deduped == 30


def test_progress_events():
    g = random_sparse_graph(500, 4000, seed=0)
    p = builtin_pattern(BuiltinPatternId(PatternKind.STRICT_XOR, RoleProfile.UNCONSTRAINED))
    seen = []
    c = enumerate_matches(g, p, progress=lambda done, total: seen.append((done, total)), anchors_per_task=50)
    assert seen[-1] == (c.anchors_total, c.anchors_total)
    assert [d for d, _ in seen] == sorted(d for d, _ in seen)


def test_sink_failure_reports_partial_progress():
    class Boom:
        def fork(self):
            return self

        def consume(self, block):
            raise RuntimeError("disk full")

        def merge(self, other):
            pass

    g = xor_fan(6, 4)
    p = builtin_pattern(BuiltinPatternId(PatternKind.STRICT_XOR, RoleProfile.TRUE))
    with pytest.raises(EnumerationAborted) as info:
        enumerate_matches(g, p, Boom())
    assert info.value.partial.anchors_completed == 0
    assert info.value.partial.anchors_total == 1


def test_match_writer_keeps_smallest(tmp_path):
    g = random_sparse_graph(2000, 30000, seed=5)
    p = builtin_pattern(BuiltinPatternId(PatternKind.STRICT_XOR, RoleProfile.UNCONSTRAINED), MatchMode.MONOMORPHIC)
    everything = matches_of(g, p)
    assert len(everything) > 20
    w1, w8 = MatchWriter(10, 6), MatchWriter(10, 6)
    enumerate_matches(g, p, w1, threads=1)
    enumerate_matches(g, p, w8, threads=8, anchors_per_task=3)
    assert w1.truncated and w1.total == len(everything)
    assert [tuple(r) for r in w1.rows().tolist()] == everything[:10]
    w1.write(tmp_path / "a.txt")
    w8.write(tmp_path / "b.txt")
    assert (tmp_path / "a.txt").read_bytes() == (tmp_path / "b.txt").read_bytes()
    first = (tmp_path / "a.txt").read_text().splitlines()[0]
    assert first == ",".join(map(str, everything[0]))


def test_threads_validation(strict_true):
    with pytest.raises(ValueError):
        enumerate_matches(random_graph(5, 0.5), strict_true, threads=0)


def test_roles_respected(strict_true, xor_roles):
    roles = dict(xor_roles, INH=NodeRole.EXCITATORY)
    assert enumerate_matches(pattern_graph(strict_true, roles), strict_true).deduped == 0
