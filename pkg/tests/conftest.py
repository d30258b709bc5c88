import numpy as np
import pytest
from hypothesis import strategies as st

from motifscan.graph import NodeRole, TypedDigraph
from motifscan.pattern import BuiltinPatternId, MatchMode, PatternKind, RoleProfile, builtin_pattern

ALL_BUILTINS = [
    builtin_pattern(BuiltinPatternId(kind, profile), mode)
    for kind in PatternKind
    for profile in RoleProfile
    for mode in MatchMode
]


def pattern_id(p):
    kind = {8: "strict", 14: "full", 12: "asym"}[len(p.edges)]
    roles = "".join(sorted(r.value for r in p.slot_roles[0]))
    return f"{kind}-{roles}-{p.mode.value}"


@st.composite
def typed_digraphs(draw, min_nodes=0, max_nodes=12, self_loops=False):
    n = draw(st.integers(min_nodes, max_nodes))
    roles = draw(st.lists(st.sampled_from([0, 0, 0, 1, 2]), min_size=n, max_size=n))
    p = draw(st.floats(0.05, 0.6))
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    a = rng.random((n, n)) < p
    if not self_loops:
        np.fill_diagonal(a, False)
    src, dst = np.nonzero(a)
    return TypedDigraph([f"v{i}" for i in range(n)], np.array(roles, dtype=np.uint8), ["t"] * n, [None] * n, src, dst)


@pytest.fixture
def strict_true():
    return builtin_pattern(BuiltinPatternId(PatternKind.STRICT_XOR, RoleProfile.TRUE))


@pytest.fixture
def xor_roles():
    E, I = NodeRole.EXCITATORY, NodeRole.INHIBITORY
    return {"E1": E, "E2": E, "E3": E, "E4": E, "XOR": E, "INH": I}


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
