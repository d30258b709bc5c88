"""``motifscan`` command line.

Every invocation writes a JSON run report (stdout, or ``--report FILE``),
including on failure. Exit codes: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import hashlib
import json
import logging
import sys
import time
from pathlib import Path

from . import __version__
from .engine import ENGINE_VERSION, EnumerationAborted, MatchWriter, default_threads, enumerate_matches
from .graph import GraphError, graph_hash, read_graph
from .ingest import IngestError, SliceSpec, ingest_adjacency, ingest_edge_list, load_mapping, slice_edges
from .oracle import OracleTooLarge, brute_force
from .pattern import FORMAT_VERSION, MatchMode, PatternError, load_pattern
from .spiking import (
    CalibrationError,
    SimulationError,
    SpikingParams,
    calibrate,
    classify,
    load_grid,
    load_weights,
    save_weights,
    simulate,
)
from .stats import (
    AggregateSink,
    StatsError,
    TableRequest,
    batch_scan,
    parse_groups,
    write_batch,
    write_summary,
)

REPORT_VERSION = "1"
VOLATILE_KEYS = ("started_at", "wall_time_s")
DATA_ERRORS = (
    GraphError, PatternError, IngestError, StatsError, OracleTooLarge,
    CalibrationError, SimulationError, EnumerationAborted, OSError, ValueError,
)  # fmt: skip


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _file_hash(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="motifscan", description="Typed directed motif counting for connectomes.")
    p.add_argument(
        "--version",
        action="version",
        version=f"motifscan {__version__} (engine {ENGINE_VERSION}, pattern format {FORMAT_VERSION}, report format {REPORT_VERSION})",
    )
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    def common(sp, threads=False):
        sp.add_argument("--report", help="write the run report here instead of stdout")
        if threads:
            sp.add_argument("--threads", type=int, default=None, help="worker threads (default: all cores)")

    ing = sub.add_parser("ingest", help="convert raw connectome files to normalized form")
    isub = ing.add_subparsers(dest="source", parser_class=_Parser)
    w = isub.add_parser("worm", help="named adjacency matrix + neurotransmitter table")
    w.add_argument("--adjacency", required=True)
    w.add_argument("--roles", required=True)
    w.add_argument("--columns-presynaptic", action="store_true")
    w.add_argument("--mapping", default="worm")
    w.add_argument("--keep-isolated", action="store_true", help="keep neurons without any connection")
    w.add_argument("--out", required=True)
    common(w)
    e = isub.add_parser("edges", help="edge list + node table (+ node types)")
    e.add_argument("--edges", required=True)
    e.add_argument("--nodes", required=True)
    e.add_argument("--types")
    e.add_argument("--mapping", required=True, help="worm | fly | v1-prefix | token,role file")
    e.add_argument("--out", required=True)
    common(e)

    s = sub.add_parser("slice", help="keep the first N or a seeded random N edges")
    s.add_argument("--in", dest="src", required=True)
    g = s.add_mutually_exclusive_group(required=True)
    g.add_argument("--head", type=int)
    g.add_argument("--sample", type=int)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    common(s)

    def scan_args(sp):
        sp.add_argument("--graph", required=True)
        sp.add_argument("--pattern", required=True, help="pattern file or bundled name, e.g. strict_xor_true")
        sp.add_argument("--mode", choices=["induced", "mono"], help="override the pattern's match mode")

    sc = sub.add_parser("scan", help="count motif matches")
    scan_args(sc)
    sc.add_argument("--emit-matches")
    sc.add_argument("--emit-limit", type=int, default=1_000_000)
    common(sc, threads=True)

    st = sub.add_parser("stats", help="count matches and write frequency / layer / participation tables")
    scan_args(st)
    st.add_argument("--freq", help="slot groups, e.g. E1+E3,E2+E4,INH,XOR")
    st.add_argument("--layers", action="store_true")
    st.add_argument("--participation", metavar="SLOT")
    st.add_argument("--out", required=True)
    common(st, threads=True)

    b = sub.add_parser("batch-scan", help="scan several graph directories")
    b.add_argument("--graphs", nargs="+", required=True)
    b.add_argument("--pattern", required=True)
    b.add_argument("--mode", choices=["induced", "mono"])
    b.add_argument("--out", required=True, help="summary table (csv)")
    b.add_argument("--scatter", help="scatter data file label,connections,motifs")
    common(b, threads=True)

    sp = sub.add_parser("spike", help="simulate the spiking XOR circuit, or calibrate its weights")
    sp.add_argument("action", nargs="?", choices=["run", "calibrate"], default="run")
    sp.add_argument("--inputs", choices=["00", "01", "10", "11"])
    sp.add_argument("--duration", type=float, default=500.0)
    sp.add_argument("--dt", type=float, default=0.1)
    sp.add_argument("--rate", type=float, default=100.0)
    sp.add_argument("--weights", help="name,value weight file (default: bundled calibration)")
    sp.add_argument("--grid", help="calibration grid file name,min,max,steps")
    sp.add_argument("--out")
    common(sp)

    cal = sub.add_parser("calibrate", help="alias for 'spike calibrate'")
    cal.add_argument("--grid", required=True)
    cal.add_argument("--duration", type=float, default=500.0)
    cal.add_argument("--dt", type=float, default=0.1)
    cal.add_argument("--rate", type=float, default=100.0)
    cal.add_argument("--out", required=True)
    common(cal)

    o = sub.add_parser("oracle", help="brute-force reference count (small graphs only)")
    scan_args(o)
    common(o)
    return p


def _pattern(args):
    p = load_pattern(args.pattern)
    if getattr(args, "mode", None):
        p = p.with_mode(MatchMode.parse(args.mode))
    return p


def _threads(args) -> int:
    t = args.threads if args.threads is not None else default_threads()
    if t < 1:
        raise UsageError("--threads must be >= 1")
    return t


def cmd_ingest(args, report):
    if args.source is None:
        raise UsageError("ingest needs a source: worm or edges")
    mapping = load_mapping(args.mapping)
    if args.source == "worm":
        report["inputs"] = {"adjacency": _file_hash(args.adjacency), "roles": _file_hash(args.roles)}
        orient = "columns-presynaptic" if args.columns_presynaptic else "rows-presynaptic"
        summary = ingest_adjacency(args.adjacency, args.roles, mapping, args.out, orient, args.keep_isolated)
        report["orientation"] = orient
    else:
        report["inputs"] = {k: _file_hash(v) for k, v in (("edges", args.edges), ("nodes", args.nodes), ("types", args.types)) if v}
        summary = ingest_edge_list(args.edges, args.nodes, args.types, mapping, args.out)
    report["mapping"] = mapping.name
    report["counts"] = summary.as_dict()
    for key in ("collapsed", "unknown_role", "self_loops", "dropped_isolated"):
        if getattr(summary, key):
            report["warnings"].append(f"{key}={getattr(summary, key)}")


def cmd_slice(args, report):
    spec = SliceSpec("head", args.head) if args.head is not None else SliceSpec("sample", args.sample, args.seed)
    report["inputs"] = {"graph": graph_hash(args.src)}
    summary = slice_edges(args.src, spec, args.out)
    report["slice"] = {"kind": spec.kind, "n": spec.n, "seed": spec.seed if spec.kind == "sample" else None}
    report["counts"] = summary.as_dict()


def _begin_scan(args, report):
    p = _pattern(args)
    report["inputs"] = {"graph": graph_hash(args.graph)}
    report["pattern_hash"] = p.digest
    report["mode"] = p.mode.value
    g = read_graph(args.graph)
    report["graph"] = {"nodes": g.n, "edges": g.edge_count, "self_loops": g.self_loop_count}
    return g, p


def _progress(report):
    def cb(done, total):
        report["progress"] = {"anchors_completed": done, "anchors_total": total}

    return cb


def cmd_scan(args, report):
    threads = _threads(args)
    report["threads"] = threads
    g, p = _begin_scan(args, report)
    writer = MatchWriter(args.emit_limit, p.k) if args.emit_matches else None
    counts = enumerate_matches(g, p, writer, threads=threads, progress=_progress(report))
    report["counts"] = counts.as_dict()
    if writer is not None:
        writer.write(args.emit_matches)
        report["emitted"] = {"path": str(args.emit_matches), "rows": len(writer.rows()), "truncated": writer.truncated}
        if writer.truncated:
            report["warnings"].append(f"match emission truncated at {args.emit_limit} of {writer.total}")


def cmd_stats(args, report):
    threads = _threads(args)
    report["threads"] = threads
    started = time.perf_counter()
    if not (args.freq or args.layers or args.participation):
        raise UsageError("stats needs at least one of --freq, --layers, --participation")
    g, p = _begin_scan(args, report)
    request = TableRequest(parse_groups(args.freq) if args.freq else (), args.layers, args.participation)
    sink = AggregateSink(g, p, request)
    counts = enumerate_matches(g, p, sink, threads=threads, progress=_progress(report))
    rep = sink.report()
    files = rep.write(args.out)
    report["counts"] = counts.as_dict()
    report["tables"] = sorted(str(f) for f in files)
    write_summary(
        Path(args.out) / "summary.json",
        graph_hash=report["inputs"]["graph"],
        pattern_hash=p.digest,
        mode=p.mode.value,
        threads=threads,
        wall_time_s=round(time.perf_counter() - started, 6),
        counts=counts.as_dict(),
    )


def cmd_batch(args, report):
    threads = _threads(args)
    report["threads"] = threads
    p = _pattern(args)
    report["pattern_hash"] = p.digest
    report["mode"] = p.mode.value
    rows = batch_scan(args.graphs, p, threads)
    write_batch(rows, args.out, args.scatter)
    report["counts"] = {r.label: r.motifs for r in rows if r.status == "ok"}
    for r in rows:
        if r.status != "ok":
            report["warnings"].append(f"{r.label}: {r.error}")


def _spike_params(args, weights=None) -> SpikingParams:
    return SpikingParams(dt=args.dt, rate_hz=args.rate, **(weights or {}))


def cmd_spike(args, report):
    if args.action == "calibrate":
        return cmd_calibrate(args, report)
    if args.inputs is None:
        raise UsageError("spike needs --inputs 00|01|10|11")
    weights = load_weights(args.weights)
    params = _spike_params(args, weights)
    bits = (int(args.inputs[0]), int(args.inputs[1]))
    rec = simulate(params, bits, args.duration)
    if args.out:
        rec.to_csv(args.out)
    report["weights"] = weights
    report["inputs"] = {"bits": args.inputs}
    report["counts"] = {n: len(ts) for n, ts in rec.spikes.items()}
    report["classification"] = classify(rec)


def cmd_calibrate(args, report):
    if not args.grid or not args.out:
        raise UsageError("calibrate needs --grid and --out")
    report["inputs"] = {"grid": _file_hash(args.grid)}
    result = calibrate(_spike_params(args), load_grid(args.grid), args.duration)
    save_weights(args.out, result.defaults)
    report["counts"] = {"grid_points": len(result.grid), "feasible": int(result.feasible.sum())}
    report["weights"] = result.defaults


def cmd_oracle(args, report):
    g, p = _begin_scan(args, report)
    res = brute_force(g, p)
    report["counts"] = {"raw": res.raw, "deduped": res.deduped}
    report["assignments"] = [list(a) for a in res.assignments]


COMMANDS = {
    "ingest": cmd_ingest,
    "slice": cmd_slice,
    "scan": cmd_scan,
    "stats": cmd_stats,
    "batch-scan": cmd_batch,
    "spike": cmd_spike,
    "calibrate": cmd_calibrate,
    "oracle": cmd_oracle,
}


def run(argv=None) -> tuple[int, dict]:
    """Execute one command; returns ``(exit_code, report)`` and emits the report."""
    argv = list(sys.argv[1:] if argv is None else argv)
    started = time.perf_counter()
    report: dict = {
        "subcommand": argv[0] if argv and not argv[0].startswith("-") else None,
        "versions": {"engine": ENGINE_VERSION, "pattern_format": FORMAT_VERSION, "report_format": REPORT_VERSION},
        "started_at": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        "warnings": [],
    }
    report_path = None
    try:
        try:
            args = build_parser().parse_args(argv)
        except SystemExit as exc:  # --help / --version
            return int(exc.code or 0), report
        report_path = getattr(args, "report", None)
        if args.command is None:
            raise UsageError("missing subcommand")
        COMMANDS[args.command](args, report)
        code, report["status"] = 0, "ok"
    except UsageError as exc:
        code, report["status"], report["error"] = 1, "usage_error", str(exc)
    except DATA_ERRORS as exc:
        code, report["status"], report["error"] = 2, "data_error", str(exc)
        if isinstance(exc, EnumerationAborted):
            report["counts"] = exc.partial.as_dict()
    report["exit_code"] = code
    report["wall_time_s"] = round(time.perf_counter() - started, 6)
    text = json.dumps(report, indent=2, sort_keys=True, default=str) + "\n"
    if report_path:
        Path(report_path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return code, report


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    code, _ = run(argv)
    return code


if __name__ == "__main__":
    sys.exit(main())
