"""Command-line pipeline: asm -> run/record -> replay -> analyze -> suggest
-> apply -> compare.

Every subcommand exits 0 on success, 1 on usage errors and 2 on
faults/divergence; failures print one `code:<CODE> <message>` line on
stderr. Timing comes from one config file (--config, or the XSHARK_CONFIG
environment variable), whose hash is embedded in traces so `replay` refuses
a mismatched clock.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import __version__
from .analyzer import (analyze_dma, analyze_utilization, analyze_vmem,
                       apply_and_verify, build_dependency_graph,
                       compute_backtails, suggest as make_suggestions,
                       write_report, AnalysisError)
from .analyzer.suggest import Suggestion
from .debugger import Breakpoint, DebugSession
from .isa import Fault
from .recorder import TraceError, read_trace, record, write_trace
from .replayer import ReplayDivergence, replay
from .sim import (RecordingTracker, SimConfig, events_from_jsonl,
                  events_to_jsonl, run_program, state_digest)
from .workloads import AsmError, apply_images, assemble, load_bundle, save_bundle


class CliError(Exception):
    def __init__(self, code: str, message: str, exit_code: int = 2):
        super().__init__(message)
        self.code = code
        self.exit_code = exit_code


def _load_config(path) -> SimConfig:
    path = path or os.environ.get("XSHARK_CONFIG")
    if not path:
        return SimConfig()
    try:
        with open(path) as fh:
            return SimConfig.from_json(json.load(fh))
    except FileNotFoundError:
        raise CliError("CONFIG_NOT_FOUND", f"config file {path!r} missing", 1)
    except (json.JSONDecodeError, ValueError) as e:
        raise CliError("CONFIG_INVALID", f"bad config {path!r}: {e}", 1)


def _read(path, mode="r"):
    try:
        with open(path, mode) as fh:
            return fh.read()
    except OSError as e:
        raise CliError("IO_ERROR", str(e), 1)


def _summary(result, digest: str) -> dict:
    return {"cycles": result.cycles, "executed": result.executed,
            "outcome": getattr(result, "outcome", "replayed"),
            "stall_cycles": dict(result.stall_cycles),
            "total_stall": result.total_stall, "digest": digest}


def _write_events(path, tracker, summary):
    with open(path, "w") as fh:
        fh.write(events_to_jsonl(tracker.events, summary))


def cmd_asm(args, config):
    kernel = assemble(_read(args.source))
    save_bundle(kernel, args.output)
    print(f"assembled {len(kernel.program)} instructions -> {args.output}")
    return 0


def _make_session(bundle_path, config, tracker=None):
    bundle = load_bundle(bundle_path)
    state = config.make_state()
    apply_images(bundle, state)
    session = DebugSession(bundle.program, config, state, tracker)
    session.state.pc = bundle.program.entry_pc
    return bundle, session


def cmd_run(args, config):
    bundle = load_bundle(args.program)
    state = config.make_state()
    apply_images(bundle, state)
    tracker = RecordingTracker() if args.output else None
    result = run_program(bundle.program, config, state, tracker,
                         max_cycles=args.max_cycles)
    digest = state_digest(result.state)
    if args.output:
        _write_events(args.output, tracker, _summary(result, digest))
    print(f"outcome={result.outcome} cycles={result.cycles} "
          f"executed={result.executed} stalls={result.total_stall}")
    if result.outcome == "fault":
        raise CliError(result.fault.kind.upper(), result.fault.describe())
    return 0


def _resolve_break(bundle, spec: str) -> int:
    if spec in bundle.labels:
        return bundle.labels[spec]
    try:
        return int(spec, 0)
    except ValueError:
        raise CliError("BAD_BREAKPOINT", f"unknown label or pc {spec!r}", 1)


def cmd_record(args, config):
    bundle, session = _make_session(args.program, config)
    bp = Breakpoint(_resolve_break(bundle, args.break_at), args.hit)
    result = record(session, bp, args.count, fast_forward_dma=args.fast_forward,
                    max_cycles=args.max_cycles)
    write_trace(result.trace, args.output, binary=args.binary)
    note = " (ended at HALT)" if result.ended_at_halt else ""
    if result.fault:
        note = f" (fault: {result.fault.kind})"
    print(f"recorded {result.recorded} instructions, "
          f"{result.trace.snapshot_bytes} snapshot bytes -> {args.output}{note}")
    return 0


def cmd_replay(args, config):
    trace = read_trace(args.trace, expected_config_hash=config.config_hash())
    tracker = RecordingTracker()
    result = replay(trace, config, tracker)
    _write_events(args.output, tracker, _summary(result, result.digest))
    print(f"replayed {result.executed} instructions, cycles={result.cycles} "
          f"stalls={result.total_stall} -> {args.output}")
    return 0


def cmd_analyze(args, config):
    events, summary = events_from_jsonl(_read(args.events))
    want_all = not (args.dma or args.util or args.vmem or args.deps)
    regions = None
    if args.program:
        bundle = load_bundle(args.program)
        regions = {name: [start, end] for name, start, end in bundle.regions}
    kw = {}
    if args.dma or want_all:
        kw["dma_records"] = analyze_dma(events)
    if args.util or want_all:
        kw["utilization"] = analyze_utilization(events, args.bucket_width)
    if args.vmem or want_all:
        kw["vmem"] = analyze_vmem(events, args.sample_interval,
                                  config.vmem_capacity)
    if args.deps or want_all:
        graph = build_dependency_graph(events)
        kw["graph"] = graph
        kw["backtails"] = compute_backtails(graph)
    written = write_report(args.output, regions=regions, **kw)
    print("wrote " + ", ".join(written))
    return 0


def cmd_suggest(args, config):
    trace = read_trace(args.trace, expected_config_hash=config.config_hash())
    events, _ = events_from_jsonl(_read(args.events))
    records = analyze_dma(events)
    graph = build_dependency_graph(events)
    if graph.n != len(trace.instr_stream):
        raise CliError("EVENTS_TRACE_MISMATCH",
                       f"event log covers {graph.n} instructions, trace has "
                       f"{len(trace.instr_stream)}")
    vmem = analyze_vmem(events, capacity=config.vmem_capacity)
    suggestions = make_suggestions(records, graph, vmem)
    with open(args.output, "w") as fh:
        json.dump([s.to_json() for s in suggestions], fh, indent=1)
    stalled = sum(1 for r in records if r.stall_total > 0)
    print(f"{len(suggestions)} suggestions for {stalled} stalled DMAs "
          f"-> {args.output}")
    return 0


def cmd_apply(args, config):
    trace = read_trace(args.trace, expected_config_hash=config.config_hash())
    suggestions = [Suggestion.from_json(d)
                   for d in json.loads(_read(args.suggestions))]
    if not suggestions:
        raise CliError("NO_SUGGESTIONS", "suggestion list is empty", 1)
    tracker = RecordingTracker()
    updated, applied = apply_and_verify(trace, suggestions, config,
                                        tracker=tracker)
    out_suggestions = args.output + ".suggestions.json"
    with open(out_suggestions, "w") as fh:
        json.dump([s.to_json() for s in updated], fh, indent=1)
    if applied is None:
        raise CliError("REPLAY_DIVERGENCE",
                       f"reorder diverged: {updated[0].diagnostic}")
    _write_events(args.output, tracker, _summary(applied, applied.digest))
    for s in updated:
        extra = f" (+{s.speedup_cycles} cycles)" if s.speedup_cycles else ""
        diag = f" [{s.diagnostic}]" if s.diagnostic else ""
        print(f"dma {s.dma_id}: {s.verified}{extra}{diag}")
    if args.verify and any(s.verified == "unverified" for s in updated):
        raise CliError("VERIFY_FAILED", "some suggestions failed verification")
    return 0


def cmd_compare(args, config):
    _, a = events_from_jsonl(_read(args.before))
    _, b = events_from_jsonl(_read(args.after))
    if a is None or b is None:
        raise CliError("NO_SUMMARY", "event log lacks a summary line", 1)
    dc = b["cycles"] - a["cycles"]
    ds = b["total_stall"] - a["total_stall"]
    basis_a = a["digest"].split(":")[0]
    basis_b = b["digest"].split(":")[0]
    if basis_a != basis_b:
        verdict = "incomparable"
    else:
        verdict = "equal" if a["digest"] == b["digest"] else "DIFFERENT"
    print(f"cycles: {a['cycles']} -> {b['cycles']} ({dc:+d})")
    print(f"stall cycles: {a['total_stall']} -> {b['total_stall']} ({ds:+d})")
    print(f"state: {verdict}")
    return 0 if verdict != "DIFFERENT" else 2


# (name, help, handler, [(flags, kwargs)...])
COMMANDS = [
    ("asm", "assemble a kernel into a program bundle", cmd_asm, [
        (["source"], {"help": "kernel source (.xasm)"}),
        (["-o", "--output"], {"required": True, "help": "program bundle path"}),
    ]),
    ("run", "run a program bundle on the simulator", cmd_run, [
        (["program"], {"help": "program bundle"}),
        (["--max-cycles"], {"type": int, "default": 10_000_000}),
        (["-o", "--output"], {"help": "write the performance event log (JSONL)"}),
    ]),
    ("record", "record an execution window into a trace", cmd_record, [
        (["program"], {"help": "program bundle"}),
        (["--break"], {"dest": "break_at", "required": True,
                       "help": "breakpoint label or pc"}),
        (["--hit"], {"type": int, "default": 1, "help": "break on Nth hit"}),
        (["--count"], {"type": int, "required": True,
                       "help": "instructions to record"}),
        (["--fast-forward"], {"action": "store_true",
                              "help": "step to DMA quiescence before recording"}),
        (["--binary"], {"action": "store_true", "help": "compact trace container"}),
        (["--max-cycles"], {"type": int, "default": 10_000_000}),
        (["-o", "--output"], {"required": True, "help": "trace path"}),
    ]),
    ("replay", "replay a trace and emit the event log", cmd_replay, [
        (["trace"], {"help": "trace container"}),
        (["-o", "--output"], {"required": True, "help": "event log (JSONL)"}),
    ]),
    ("analyze", "produce the report bundle from an event log", cmd_analyze, [
        (["events"], {"help": "event log (JSONL)"}),
        (["--dma"], {"action": "store_true"}),
        (["--util"], {"action": "store_true"}),
        (["--vmem"], {"action": "store_true"}),
        (["--deps"], {"action": "store_true"}),
        (["--bucket-width"], {"type": int, "default": 1}),
        (["--sample-interval"], {"type": int, "default": 64}),
        (["--program"], {"help": "program bundle, for pseudo-HLO regions"}),
        (["-o", "--output"], {"required": True, "help": "report directory"}),
    ]),
    ("suggest", "emit reorder suggestions for stalled DMAs", cmd_suggest, [
        (["trace"], {"help": "trace container"}),
        (["events"], {"help": "event log from `replay`"}),
        (["-o", "--output"], {"required": True, "help": "suggestions.json"}),
    ]),
    ("apply", "apply suggestions to the trace and re-simulate", cmd_apply, [
        (["trace"], {"help": "trace container"}),
        (["suggestions"], {"help": "suggestions.json"}),
        (["--verify"], {"action": "store_true",
                        "help": "fail unless every suggestion verifies"}),
        (["-o", "--output"], {"required": True, "help": "event log of the reorder"}),
    ]),
    ("compare", "compare two event logs (cycles, stalls, state)", cmd_compare, [
        (["before"], {"help": "baseline event log"}),
        (["after"], {"help": "event log to compare"}),
    ]),
]


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"code:USAGE {message}", file=sys.stderr)
        raise SystemExit(1)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="xshark", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version", version=f"xshark {__version__}")
    parser.add_argument("--config", help="SimConfig JSON (default: $XSHARK_CONFIG)")
    subs = parser.add_subparsers(dest="command", metavar="command")
    for name, help_text, handler, arglist in COMMANDS:
        sub = subs.add_parser(name, help=help_text, description=help_text)
        for flags, kwargs in arglist:
            sub.add_argument(*flags, **kwargs)
        sub.set_defaults(handler=handler)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not getattr(args, "handler", None):
        parser.print_help()
        return 1
    try:
        config = _load_config(args.config)
        return args.handler(args, config)
    except CliError as e:
        print(f"code:{e.code} {e}", file=sys.stderr)
        return e.exit_code
    except AsmError as e:
        print(f"code:ASM_ERROR {e}", file=sys.stderr)
        return 2
    except TraceError as e:
        print(f"code:{e.code} {e}", file=sys.stderr)
        return 2
    except ReplayDivergence as e:
        print(f"code:REPLAY_DIVERGENCE {e}", file=sys.stderr)
        return 2
    except (Fault, AnalysisError) as e:
        code = e.kind.upper() if isinstance(e, Fault) else "ANALYSIS_ERROR"
        print(f"code:{code} {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"code:IO_ERROR {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
