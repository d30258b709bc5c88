"""Motif patterns: slots with allowed roles, directed edges and a match mode.

Pattern file format (UTF-8)::

    # comment
    mode induced            # or: mono
    node E1 E               # roleset: '*' or comma-joined subset of E,I,O
    node XOR *
    edge E1 XOR

Exactly one ``mode`` line; ``node`` lines must precede the ``edge`` lines that
reference them.
"""

from __future__ import annotations

import enum
import hashlib
from dataclasses import dataclass
from functools import cached_property
from importlib import resources
from typing import Iterable, Sequence

from .graph import NodeRole

__all__ = [
    "MatchMode",
    "RoleSet",
    "ANY_ROLE",
    "MotifPattern",
    "PatternError",
    "PatternKind",
    "RoleProfile",
    "BuiltinPatternId",
    "parse_pattern",
    "render_pattern",
    "load_pattern",
    "automorphism_group",
    "builtin_pattern",
    "parse_roleset",
    "XOR_SLOTS",
    "MAX_SLOTS",
]

MAX_SLOTS = 10
FORMAT_VERSION = "1"

RoleSet = frozenset  # frozenset[NodeRole]
ANY_ROLE: frozenset[NodeRole] = frozenset(NodeRole)


class PatternError(ValueError):
    pass


class MatchMode(enum.Enum):
    INDUCED = "induced"
    MONOMORPHIC = "mono"

    @classmethod
    def parse(cls, text: str) -> "MatchMode":
        t = text.strip().lower()
        aliases = {"strict": "induced", "monomorphic": "mono", "virtual": "mono"}
        try:
            return cls(aliases.get(t, t))
        except ValueError:
            raise PatternError(f"unknown match mode {text!r}; expected 'induced' or 'mono'") from None


def parse_roleset(text: str) -> frozenset[NodeRole]:
    text = text.strip()
    if text == "*":
        return ANY_ROLE
    tokens = [t.strip() for t in text.split(",") if t.strip()]
    if not tokens:
        raise PatternError("empty role set")
    try:
        return frozenset(NodeRole(t.upper()) for t in tokens)
    except ValueError:
        raise PatternError(f"bad role set {text!r}; use '*' or a subset of E,I,O") from None


def _render_roleset(roles: frozenset[NodeRole]) -> str:
    if roles == ANY_ROLE:
        return "*"
    return ",".join(r.value for r in NodeRole if r in roles)


@dataclass(frozen=True)
class MotifPattern:
    """A small directed pattern.

    ``edges`` holds ``(src, dst)`` pairs of slot *indices*; use
    :attr:`edge_names` for the slot-name view.
    """

    slot_names: tuple[str, ...]
    slot_roles: tuple[frozenset[NodeRole], ...]
    edges: frozenset[tuple[int, int]]
    mode: MatchMode = MatchMode.INDUCED

    def __post_init__(self):
        k = len(self.slot_names)
        if not 2 <= k <= MAX_SLOTS:
            raise PatternError(f"pattern must have between 2 and {MAX_SLOTS} slots, got {k}")
        if len(set(self.slot_names)) != k:
            raise PatternError("duplicate slot name")
        if len(self.slot_roles) != k:
            raise PatternError("one role set per slot required")
        if any(not r for r in self.slot_roles):
            raise PatternError("empty role set")
        for a, b in self.edges:
            if not (0 <= a < k and 0 <= b < k):
                raise PatternError(f"edge ({a}, {b}) references an unknown slot")
            if a == b:
                raise PatternError(f"self-edge on slot {self.slot_names[a]!r}")

    @classmethod
    def from_names(
        cls,
        slots: Sequence[tuple[str, Iterable[NodeRole]]],
        edges: Iterable[tuple[str, str]],
        mode: MatchMode = MatchMode.INDUCED,
    ) -> "MotifPattern":
        names = tuple(s for s, _ in slots)
        index = {s: i for i, s in enumerate(names)}
        try:
            e = frozenset((index[a], index[b]) for a, b in edges)
        except KeyError as exc:
            raise PatternError(f"edge references unknown slot {exc.args[0]!r}") from None
        return cls(names, tuple(frozenset(r) for _, r in slots), e, mode)

    @property
    def k(self) -> int:
        return len(self.slot_names)

    @property
    def edge_names(self) -> list[tuple[str, str]]:
        return [(self.slot_names[a], self.slot_names[b]) for a, b in sorted(self.edges)]

    def slot_index(self, name: str) -> int:
        try:
            return self.slot_names.index(name)
        except ValueError:
            raise PatternError(f"unknown slot {name!r}") from None

    def out_degree(self, s: int) -> int:
        return sum(1 for a, _ in self.edges if a == s)

    def in_degree(self, s: int) -> int:
        return sum(1 for _, b in self.edges if b == s)

    def with_mode(self, mode: MatchMode) -> "MotifPattern":
        return MotifPattern(self.slot_names, self.slot_roles, self.edges, mode)

    def with_roles(self, roles: Sequence[Iterable[NodeRole]]) -> "MotifPattern":
        return MotifPattern(self.slot_names, tuple(frozenset(r) for r in roles), self.edges, self.mode)

    @cached_property
    def automorphisms(self) -> tuple[tuple[int, ...], ...]:
        return tuple(automorphism_group(self))

    def render(self) -> str:
        return render_pattern(self)

    @property
    def digest(self) -> str:
        return hashlib.sha256(self.render().encode()).hexdigest()


def render_pattern(p: MotifPattern) -> str:
    lines = [f"mode {p.mode.value}"]
    lines += [f"node {name} {_render_roleset(r)}" for name, r in zip(p.slot_names, p.slot_roles)]
    lines += [f"edge {a} {b}" for a, b in p.edge_names]
    return "\n".join(lines) + "\n"


def parse_pattern(text: str) -> MotifPattern:
    mode = None
    slots: list[tuple[str, frozenset[NodeRole]]] = []
    names: set[str] = set()
    edges: list[tuple[str, str]] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        kw = parts[0].lower()
        where = f"line {lineno}"
        if kw == "mode":
            if len(parts) != 2:
                raise PatternError(f"{where}: expected 'mode induced|mono'")
            if mode is not None:
                raise PatternError(f"{where}: more than one mode line")
            mode = MatchMode.parse(parts[1])
        elif kw == "node":
            if len(parts) != 3:
                raise PatternError(f"{where}: expected 'node <name> <roleset>'")
            if edges:
                raise PatternError(f"{where}: node lines must precede edge lines")
            if parts[1] in names:
                raise PatternError(f"{where}: duplicate slot {parts[1]!r}")
            try:
                roles = parse_roleset(parts[2])
            except PatternError as exc:
                raise PatternError(f"{where}: {exc}") from None
            names.add(parts[1])
            slots.append((parts[1], roles))
        elif kw == "edge":
            if len(parts) != 3:
                raise PatternError(f"{where}: expected 'edge <src> <dst>'")
            a, b = parts[1], parts[2]
            for s in (a, b):
                if s not in names:
                    raise PatternError(f"{where}: unknown slot {s!r}")
            if a == b:
                raise PatternError(f"{where}: self-edge on slot {a!r}")
            edges.append((a, b))
        else:
            raise PatternError(f"{where}: unknown directive {parts[0]!r}")
    if mode is None:
        raise PatternError("missing mode line")
    return MotifPattern.from_names(slots, edges, mode)


def load_pattern(path_or_name: str) -> MotifPattern:
    """Load a pattern from a file path, or a bundled pattern by name.

    Bundled names are the files under ``motifscan/patterns`` with or without
    the ``.motif`` suffix (e.g. ``strict_xor_true``).
    """
    import os

    if os.path.exists(path_or_name):
        with open(path_or_name, encoding="utf-8") as fh:
            return parse_pattern(fh.read())
    name = os.path.basename(path_or_name)
    if not name.endswith(".motif"):
        name += ".motif"
    res = resources.files("motifscan") / "patterns" / name
    if not res.is_file():
        raise FileNotFoundError(f"no pattern file or bundled pattern named {path_or_name!r}")
    return parse_pattern(res.read_text(encoding="utf-8"))


def automorphism_group(p: MotifPattern) -> list[tuple[int, ...]]:
    """All slot permutations preserving the edge set and every slot's role set.

    Permutations are returned as tuples ``perm`` with ``perm[s]`` the image of
    slot ``s``, sorted lexicographically (so the identity comes first).
    """
    k = p.k
    adj = [[False] * k for _ in range(k)]
    for a, b in p.edges:
        adj[a][b] = True
    sig = [(p.slot_roles[s], p.in_degree(s), p.out_degree(s)) for s in range(k)]
    compatible = [[t for t in range(k) if sig[t] == sig[s]] for s in range(k)]

    found: list[tuple[int, ...]] = []
    perm = [-1] * k
    used = [False] * k

    def extend(s: int) -> None:
        if s == k:
            found.append(tuple(perm))
            return
        for t in compatible[s]:
            if used[t]:
                continue
            if any(adj[s][r] != adj[t][perm[r]] or adj[r][s] != adj[perm[r]][t] for r in range(s)):
                continue
            perm[s], used[t] = t, True
            extend(s + 1)
            used[t] = False
        perm[s] = -1

    extend(0)
    return sorted(found)


# -- builtin XOR family -------------------------------------------------------

XOR_SLOTS = ("E1", "E2", "E3", "E4", "XOR", "INH")

_STRICT_EDGES = [
    ("E1", "E2"), ("E1", "INH"), ("E3", "INH"), ("E3", "E4"),
    ("INH", "E2"), ("INH", "E4"), ("E2", "XOR"), ("E4", "XOR"),
]  # fmt: skip
_FEEDBACK_EDGES = [("XOR", "E2"), ("XOR", "E4"), ("E2", "INH"), ("E4", "INH"), ("INH", "E1"), ("INH", "E3")]
_ASYM_DROPPED = {("E2", "INH"), ("INH", "E1")}


class PatternKind(enum.Enum):
    STRICT_XOR = "strict_xor"
    EXTENDED_FULL_FEEDBACK = "extended_full"
    EXTENDED_ASYM_FEEDBACK = "extended_asym"


class RoleProfile(enum.Enum):
    UNCONSTRAINED = "unconstrained"
    TRUE = "true"
    TRUE_WITH_OTHER = "true_other"


@dataclass(frozen=True)
class BuiltinPatternId:
    kind: PatternKind
    profile: RoleProfile = RoleProfile.TRUE

    @property
    def filename(self) -> str:
        return f"{self.kind.value}_{self.profile.value}.motif"


_E, _I, _O = NodeRole.EXCITATORY, NodeRole.INHIBITORY, NodeRole.OTHER
_PROFILE_ROLES = {
    RoleProfile.UNCONSTRAINED: (ANY_ROLE,) * 6,
    RoleProfile.TRUE: (frozenset({_E}),) * 4 + (ANY_ROLE, frozenset({_I})),
    RoleProfile.TRUE_WITH_OTHER: (frozenset({_E, _O}),) * 4 + (ANY_ROLE, frozenset({_I, _O})),
}


def builtin_pattern(
    pid: BuiltinPatternId | PatternKind,
    mode: MatchMode | None = None,
) -> MotifPattern:
    """Build one of the XOR-family patterns.

    Extended (feedback) patterns default to monomorphic matching, the strict
    pattern to induced matching.
    """
    if isinstance(pid, PatternKind):
        pid = BuiltinPatternId(pid)
    edges = list(_STRICT_EDGES)
    if pid.kind is not PatternKind.STRICT_XOR:
        edges += _FEEDBACK_EDGES
    if pid.kind is PatternKind.EXTENDED_ASYM_FEEDBACK:
        edges = [e for e in edges if e not in _ASYM_DROPPED]
    if mode is None:
        mode = MatchMode.INDUCED if pid.kind is PatternKind.STRICT_XOR else MatchMode.MONOMORPHIC
    slots = list(zip(XOR_SLOTS, _PROFILE_ROLES[pid.profile]))
    return MotifPattern.from_names(slots, edges, mode)
