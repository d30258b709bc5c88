import csv
import io
from collections import Counter

import numpy as np
import pytest

from motifscan.engine import enumerate_matches
from motifscan.graph import LAYERS, NodeMeta, NodeRole, TypedDigraph, build_graph, write_graph
from motifscan.oracle import brute_force
from motifscan.pattern import BuiltinPatternId, MatchMode, PatternError, PatternKind, RoleProfile, builtin_pattern
from motifscan.stats import (
    AggregateSink,
    StatsError,
    TableRequest,
    aggregate,
    batch_scan,
    parse_groups,
    scan_with_tables,
    write_batch,
)
from motifscan.synthetic import pattern_graph, random_graph

GROUPS = parse_groups("E1+E3,E2+E4,INH,XOR")
FULL = TableRequest(GROUPS, layers=True, participation="XOR")


def typed_random(n, p, seed):
    """Random graph carrying a small type vocabulary and layers."""
    g = random_graph(n, p, seed=seed)
    rng = np.random.default_rng(seed)
    types = [f"t{int(x)}" for x in rng.integers(0, 4, n)]
    layers = [LAYERS[int(x)] for x in rng.integers(0, len(LAYERS), n)]
    e = g.edges()
    return TypedDigraph(g.names, g.roles, types, layers, e[:, 0], e[:, 1])


def test_parse_groups():
    assert GROUPS == (("E1", "E3"), ("E2", "E4"), ("INH",), ("XOR",))
    with pytest.raises(StatsError):
        parse_groups("E1+,")
    with pytest.raises(StatsError):
        parse_groups("")
    with pytest.raises(StatsError):
        parse_groups("E1,,E2")


def test_single_match_all_ones(strict_true, xor_roles):
    g0 = pattern_graph(strict_true, xor_roles)
    meta = [NodeMeta(i, g0.names[i], NodeRole.from_code(int(g0.roles[i])), "t", "L4") for i in range(6)]
    g = build_graph(meta, g0.edges().tolist())
    req = TableRequest(tuple((s,) for s in strict_true.slot_names), layers=True, participation="INH")
    counts, rep = scan_with_tables(g, strict_true, req)
    assert counts.deduped == 1
    assert all(rows == [("t", 1)] for rows in rep.frequency.values())
    assert rep.layer_signatures == [(("L4",) * 6, 1)]
    assert rep.participation == [(g.names[5], 1)]
    assert rep.layers_csv() == "L(E1),L(E2),L(E3),L(E4),L(XOR),L(INH),count\nL4,L4,L4,L4,L4,L4,1\n"


@pytest.mark.parametrize("seed", range(4))
def test_column_sums_against_oracle(seed):
    g = typed_random(16, 0.35, seed)
    p = builtin_pattern(BuiltinPatternId(PatternKind.STRICT_XOR, RoleProfile.UNCONSTRAINED), MatchMode.MONOMORPHIC)
    oracle = brute_force(g, p)
    _, rep = scan_with_tables(g, p, FULL)
    sums = {label: sum(c for _, c in rows) for label, rows in rep.frequency.items()}
    d = oracle.deduped
    assert d > 0
    assert sums == {"E1/E3": 2 * d, "E2/E4": 2 * d, "INH": d, "XOR": d}
    assert sum(c for _, c in rep.layer_signatures or []) == d
    assert sum(c for _, c in rep.participation or []) == d

    # full tables recomputed straight from the oracle's assignment list
    want = Counter()
    for m in oracle.assignments:
        for s in (0, 2):
            want[g.type_names[m[s]]] += 1
    assert dict(rep.frequency["E1/E3"]) == dict(want)
    sig = Counter(tuple(g.layers[v] for v in m) for m in oracle.assignments)
    assert dict(rep.layer_signatures) == dict(sig)
    part = Counter(g.names[m[4]] for m in oracle.assignments)
    assert dict(rep.participation or []) == dict(part)


def test_rows_sorted_count_then_name():
    g = typed_random(18, 0.4, 11)
    p = builtin_pattern(BuiltinPatternId(PatternKind.STRICT_XOR, RoleProfile.UNCONSTRAINED), MatchMode.MONOMORPHIC)
    _, rep = scan_with_tables(g, p, FULL)
    for rows in list(rep.frequency.values()) + [rep.participation, rep.layer_signatures]:
        assert rows == sorted(rows, key=lambda kc: (-kc[1], kc[0]))


def test_merge_associative():
    g = typed_random(16, 0.35, 3)
    p = builtin_pattern(BuiltinPatternId(PatternKind.STRICT_XOR, RoleProfile.UNCONSTRAINED), MatchMode.MONOMORPHIC)
    rows = np.array(brute_force(g, p).assignments, dtype=np.int64)
    assert len(rows) > 4
    whole = aggregate(g, p, rows, FULL)
    base = AggregateSink(g, p, FULL)
    parts = [base.fork() for _ in range(3)]
    for part, chunk in zip(parts, np.array_split(rows, 3)):
        part.consume(chunk)
    left = base.fork()
    left.merge(parts[0])
    left.merge(parts[1])
    left.merge(parts[2])
    right = base.fork()
    tail = base.fork()
    tail.merge(parts[1])
    tail.merge(parts[2])
    right.merge(parts[0])
    right.merge(tail)
    for r in (left.report(), right.report()):
        assert r.frequency_csv() == whole.frequency_csv()
        assert r.layers_csv() == whole.layers_csv()
        assert r.participation_csv() == whole.participation_csv()


def test_layers_need_annotations(strict_true):
    g = random_graph(8, 0.3)
    with pytest.raises(StatsError, match="layer"):
        AggregateSink(g, strict_true, TableRequest(layers=True))


def test_unknown_slot_in_group(strict_true):
    with pytest.raises(PatternError, match="unknown slot"):
        AggregateSink(random_graph(8, 0.3), strict_true, TableRequest(parse_groups("E9")))


def test_write_files(tmp_path):
    g = typed_random(16, 0.35, 1)
    p = builtin_pattern(BuiltinPatternId(PatternKind.STRICT_XOR, RoleProfile.UNCONSTRAINED), MatchMode.MONOMORPHIC)
    _, rep = scan_with_tables(g, p, FULL)
    names = sorted(x.name for x in rep.write(tmp_path))
    assert names == ["layer_signatures.csv", "participation.csv", "slot_frequency.csv"]
    header = next(csv.reader(io.StringIO((tmp_path / "slot_frequency.csv").read_text())))
    assert header == ["group", "type_name", "count"]


def test_thread_identical_tables():
    g = typed_random(300, 0.05, 2)
    p = builtin_pattern(BuiltinPatternId(PatternKind.STRICT_XOR, RoleProfile.UNCONSTRAINED), MatchMode.MONOMORPHIC)
    reps = [scan_with_tables(g, p, FULL, threads=t)[1] for t in (1, 2, 8)]
    assert reps[0].deduped > 0
    for r in reps[1:]:
        assert r.frequency_csv() == reps[0].frequency_csv()
        assert r.layers_csv() == reps[0].layers_csv()
        assert r.participation_csv() == reps[0].participation_csv()


def test_batch_scan(tmp_path, strict_true, xor_roles):
    write_graph(pattern_graph(strict_true, xor_roles), tmp_path / "one")
    write_graph(build_graph([NodeMeta(0, "a", NodeRole.EXCITATORY)], []), tmp_path / "empty")
    rows = batch_scan([tmp_path / "one", tmp_path / "empty", tmp_path / "missing"], strict_true)
    assert [(r.label, r.motifs, r.status) for r in rows] == [("one", 1, "ok"), ("empty", 0, "ok"), ("missing", 0, "failed")]
    assert rows[0].neurons == 6 and rows[0].connections == 8
    assert rows[1].active_neurons == 0
    write_batch(rows, tmp_path / "t.csv", tmp_path / "s.csv")
    assert (tmp_path / "s.csv").read_text() == "label,connections,motifs\none,8,1\nempty,0,0\n"
    assert len((tmp_path / "t.csv").read_text().splitlines()) == 4


def test_aggregate_count_matches_engine():
    g = typed_random(16, 0.3, 9)
    p = builtin_pattern(BuiltinPatternId(PatternKind.EXTENDED_ASYM_FEEDBACK, RoleProfile.UNCONSTRAINED))
    counts, rep = scan_with_tables(g, p, TableRequest(participation="INH"))
    assert rep.deduped == counts.deduped == enumerate_matches(g, p).deduped
