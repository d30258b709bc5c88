"""
From raw files to tables with the command line
==============================================

Writes a toy adjacency matrix and neurotransmitter table, then drives the
``motifscan`` subcommands through ``run`` (the same code the console
script uses).
"""

import json
import tempfile
from pathlib import Path

from motifscan.cli import run
from motifscan.pattern import PatternKind, builtin_pattern
from motifscan.synthetic import pattern_graph

work = Path(tempfile.mkdtemp(prefix="motifscan-demo-"))

# Matrix rows are presynaptic. It holds one XOR motif (A..F) plus a spare neuron.
g = pattern_graph(builtin_pattern(PatternKind.STRICT_XOR))
names = list("ABCDEFG")
adj = [[0] * 7 for _ in range(7)]
for u, v in g.edges().tolist():
    adj[u][v] = 2
adj[6][0] = 1
lines = ["," + ",".join(names)] + [names[i] + "," + ",".join(map(str, row)) for i, row in enumerate(adj)]
(work / "adjacency.csv").write_text("\n".join(lines) + "\n")
(work / "nt.csv").write_text("name,neurotransmitter\nA,ACh\nB,Glutamate\nC,ACh\nD,ACh\nE,ACh\nF,GABA\nG,Serotonin\n")


def step(*argv):
    code, report = run(list(argv) + ["--report", str(work / "report.json")])
    print("$ motifscan", " ".join(argv), "->", code)
    return report


rep = step("ingest", "worm", "--adjacency", str(work / "adjacency.csv"), "--roles", str(work / "nt.csv"), "--out", str(work / "graph"))
print("  roles:", rep["counts"]["roles"])

rep = step("scan", "--graph", str(work / "graph"), "--pattern", "strict_xor_true", "--emit-matches", str(work / "matches.txt"))
print("  counts:", rep["counts"]["raw"], "raw,", rep["counts"]["deduped"], "deduped")
print("  match:", (work / "matches.txt").read_text().strip())

rep = step("stats", "--graph", str(work / "graph"), "--pattern", "strict_xor_true", "--freq", "E1+E3,E2+E4,INH,XOR",
           "--participation", "INH", "--out", str(work / "tables"))
print((work / "tables" / "slot_frequency.csv").read_text())

rep = step("oracle", "--graph", str(work / "graph"), "--pattern", "strict_xor_true")
print("  oracle:", rep["counts"], rep["assignments"])

rep = step("spike", "--inputs", "01", "--out", str(work / "spikes.csv"))
print("  spike counts:", rep["counts"], "classification", rep["classification"])

print(json.dumps({k: rep[k] for k in ("status", "exit_code", "versions")}, indent=1))
print("files in", work)
