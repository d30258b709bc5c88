"""
XOR motif patterns and their symmetries
=======================================

Builds the bundled patterns, looks at their automorphism groups and shows
how a match is reduced to its canonical representative.
"""

from motifscan.engine import canonical_form, enumerate_matches
from motifscan.pattern import BuiltinPatternId, MatchMode, PatternKind, RoleProfile, builtin_pattern, parse_pattern
from motifscan.synthetic import pattern_graph

# The strict pattern: slots E1..E4, XOR, INH with eight directed edges
strict = builtin_pattern(BuiltinPatternId(PatternKind.STRICT_XOR, RoleProfile.TRUE))
print(strict.render())

for a, b in sorted(strict.edge_names):
    print(f"  {a:>3} -> {b}")

# Swapping the two input branches maps the pattern onto itself
print("automorphisms of the strict pattern:", strict.automorphisms)
asym = builtin_pattern(PatternKind.EXTENDED_ASYM_FEEDBACK)
print("automorphisms of the asymmetric feedback pattern:", asym.automorphisms)

# A match lists one graph node per slot. Its mirror image is the same motif,
# so only the lexicographically smaller of the two is kept.
m = (5, 2, 3, 1, 9, 7)
print(m, "->", canonical_form(strict, m))

# The pattern drawn as a graph contains exactly one motif (two raw embeddings)
g = pattern_graph(strict)
c = enumerate_matches(g, strict)
print("pattern-as-graph: raw", c.raw, "deduped", c.deduped)

# Role profiles only widen the allowed roles per slot
for profile in RoleProfile:
    p = builtin_pattern(BuiltinPatternId(PatternKind.STRICT_XOR, profile))
    print(f"{profile.value:14s}", [",".join(sorted(r.value for r in roles)) for roles in p.slot_roles])

# Patterns can also be written by hand. A feed-forward loop:
ffl = parse_pattern("""
mode induced
node A E
node B E
node C *
edge A B
edge B C
edge A C
""")
print("feed-forward loop:", ffl.k, "slots,", len(ffl.automorphisms), "automorphism(s), mode", ffl.mode.value)
print("same loop, virtual matching:", ffl.with_mode(MatchMode.MONOMORPHIC).mode.value)
