"""Typed directed motif counting for connectomes, plus a spiking XOR circuit."""

__version__ = "0.1.0"

from .engine import (
    CollectSink,
    MatchCounts,
    MatchWriter,
    canonical_form,
    count_parallel,
    enumerate_matches,
    matches_of,
)
from .graph import NodeMeta, NodeRole, TypedDigraph, build_graph, read_graph, write_graph
from .oracle import brute_force
from .pattern import (
    BuiltinPatternId,
    MatchMode,
    MotifPattern,
    PatternKind,
    RoleProfile,
    automorphism_group,
    builtin_pattern,
    load_pattern,
    parse_pattern,
)
