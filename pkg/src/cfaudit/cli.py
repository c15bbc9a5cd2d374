"""Command-line front end.

Subcommands:

    compress   trace document + spec file -> serialized log + metrics report
    expand     serialized log + spec file -> original trace document
    select     mine or statically derive a spec file from traces / a CFG
    simulate   generate a workload, run the full prover/verifier protocol
    monitor    check an access-event file against the write-protection rule
    stats      merge metrics report JSON files into one CSV on stdout

Every command is a thin shell over the library modules; exit status 0
means success (and, for simulate, an authentic-and-valid verdict).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import cfg as cfgmod
from . import codec, files, metrics, protocol, selection, workload
from .engine import compress_trace, expand
from .errors import AuditError
from .model import EngineConfig, LogFormat, Mode, Transfer, raw_transfers
from .monitor import Region, RegionMap, run_monitor

_FORMATS = {"image": LogFormat.MEMORY_IMAGE, "tagged": LogFormat.PORTABLE_TAGGED}


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--mode", choices=["pair", "dest"], default=None,
                   help="match mode (defaults to the input document header)")
    p.add_argument("--width", type=int, choices=[16, 32], default=None,
                   help="address width in bits")
    p.add_argument("--slice-size", type=int, default=256, metavar="N",
                   help="slice budget in bytes (default 256)")
    p.add_argument("--max-paths", type=int, default=8, metavar="N",
                   help="detector count bound / selection count (default 8)")
    p.add_argument("--retry-on-mismatch", action="store_true",
                   help="re-test a mismatching transfer against entry 0")


def _config(args, mode: Mode | None = None, width: int | None = None) -> EngineConfig:
    return EngineConfig(
        mode=Mode(args.mode) if args.mode else (mode or Mode.PAIR),
        addr_width=args.width or width or 16,
        slice_size_bytes=args.slice_size,
        max_sub_paths=args.max_paths,
        retry_on_mismatch=getattr(args, "retry_on_mismatch", False),
    )


def _load_specs(path: str | None, config: EngineConfig):
    if not path:
        return ()
    mode, specs = codec.parse_spec_document(Path(path).read_text())
    if specs and mode is not config.mode:
        raise AuditError(f"spec file is {mode.value}-mode, run is {config.mode.value}-mode")
    return specs


def _write_report(args, report: metrics.MetricsReport, default_base: str) -> None:
    path = Path(args.report) if args.report else Path(default_base + ".report.json")
    path.write_text(metrics.report_to_json(report))
    print(metrics.format_report(report))
    print(f"report written to {path}")


def _cmd_compress(args) -> int:
    doc_mode, doc_width, trace = files.parse_trace_document(Path(args.trace).read_text())
    config = _config(args, doc_mode, doc_width)
    specs = _load_specs(args.specs, config)
    log = compress_trace(trace, specs, config)
    data = codec.serialize_log(log, config, _FORMATS[args.format])
    Path(args.out).write_bytes(data)
    report = metrics.build_report(Path(args.trace).stem, trace, specs, config)
    _write_report(args, report, args.out)
    return 0


def _cmd_expand(args) -> int:
    file_mode, specs = (None, ())
    if args.specs:
        file_mode, specs = codec.parse_spec_document(Path(args.specs).read_text())
    config = _config(args, file_mode)
    if file_mode is not None and specs and file_mode is not config.mode:
        raise AuditError(
            f"spec file is {file_mode.value}-mode, run is {config.mode.value}-mode"
        )
    log = codec.deserialize_log(Path(args.log).read_bytes(), config, _FORMATS[args.format])
    raw = expand(log, specs, config)
    trace = raw_transfers(raw)
    Path(args.out).write_text(
        files.write_trace_document(trace, config.mode, config.addr_width)
    )
    print(f"expanded {len(log.elements)} elements to {len(trace)} transfers")
    return 0


def _cmd_select(args) -> int:
    config = _config(args)
    if args.policy == "static":
        if not args.cfg:
            raise AuditError("static policy needs --cfg")
        graph = cfgmod.build_cfg(Path(args.cfg).read_text())
        ranked = selection.static_candidates(graph)
        specs = selection.select_static(ranked, args.max_paths, args.budget, config)
    else:
        if not args.trace:
            raise AuditError(f"policy {args.policy} needs at least one --trace")
        logs = []
        for t in args.trace:
            mode, width, trace = files.parse_trace_document(Path(t).read_text())
            cfg_t = _config(args, mode, width)
            logs.append(codec.encode_raw(trace, cfg_t))
        candidates = selection.enumerate_candidates(
            logs, (args.min_len, args.max_len), mode=config.mode
        )
        if args.policy == "top":
            specs = selection.policy_top(candidates, args.max_paths)
        elif args.policy == "minimize":
            specs = selection.policy_minimize(candidates, args.max_paths, args.threshold)
        else:
            specs = selection.policy_select(candidates, args.budget, config)
            if len(specs) > args.max_paths:
                # the policy is budget-bound; the engine only has
                # max-paths detectors, so keep the highest-ranked prefix
                print(f"capping {len(specs)} selected specs to {args.max_paths}")
                specs = specs[: args.max_paths]
        for spec in specs:
            saved = selection.estimate_savings(spec, logs, config)
            print(f"spec {spec.id} len {spec.length} estimated_savings_bytes {saved}")
    Path(args.out).write_text(codec.write_spec_document(specs, config.mode))
    print(f"wrote {len(specs)} specs to {args.out}")
    return 0


def _parse_flip(text: str) -> tuple[int, int]:
    if ":" in text:
        frame, bit = text.split(":", 1)
        return int(frame), int(bit)
    return int(text), 0


def _cmd_simulate(args) -> int:
    graph = cfgmod.build_cfg(Path(args.cfg).read_text())
    config = _config(args)
    profile = workload.WorkloadProfile(
        seed=args.seed, steps=args.steps, loop_bias=args.loop_bias
    )
    trace = workload.generate_trace(graph, profile)
    if args.inject:
        addr_part, _, idx_part = args.inject.partition("@")
        src_s, _, dest_s = addr_part.partition(":")
        trace.insert(int(idx_part or 0), Transfer(int(src_s, 16), int(dest_s, 16)))

    if args.specs:
        specs = _load_specs(args.specs, config)
    elif args.policy:
        logs = [codec.encode_raw(trace, config)]
        if args.policy == "static":
            ranked = selection.static_candidates(graph)
            specs = selection.select_static(ranked, args.max_paths, args.budget, config)
        else:
            candidates = selection.enumerate_candidates(
                logs, (args.min_len, args.max_len), mode=config.mode
            )
            if args.policy == "top":
                specs = selection.policy_top(candidates, args.max_paths)
            elif args.policy == "minimize":
                specs = selection.policy_minimize(candidates, args.max_paths, args.threshold)
            else:
                specs = selection.policy_select(candidates, args.budget, config)[: args.max_paths]
    else:
        specs = ()

    key = files.load_key(args.key)
    verifier = protocol.Verifier(key, config)
    request = verifier.open_session(specs)
    prover = protocol.Prover(key, config)
    prover.handle_request(request.encode())
    slices = prover.run(trace)

    faults = protocol.ChannelFaults(
        drop=set(args.drop or ()),
        flip=dict(_parse_flip(f) for f in (args.flip or ())),
        replay=set(args.replay or ()),
    )
    channel = protocol.Channel(faults)
    for s in slices:
        channel.send(s.encode())
    for frame in channel.drain():
        verifier.verify_slice(frame)
    verdict = verifier.assemble(cfg=graph)

    report = metrics.build_report("simulate", trace, specs, config, include_baseline=True)
    _write_report(args, report, "simulate")
    detail = ""
    if verdict.invalid_index is not None:
        detail = f" invalid_index={verdict.invalid_index}"
    if verdict.reason:
        detail = f" reason={verdict.reason}"
    print(f"verdict {verdict.outcome.value}{detail}")
    return 0 if verdict.outcome is protocol.Outcome.AUTHENTIC_AND_VALID else 1


def _parse_region(text: str) -> Region:
    lo, _, hi = text.partition(":")
    return Region(int(lo, 16), int(hi, 16))


def _cmd_monitor(args) -> int:
    events = files.parse_event_document(Path(args.events).read_text())
    regions = RegionMap(tcb=_parse_region(args.tcb), blockmem=_parse_region(args.blockmem))
    index = run_monitor(events, regions)
    if index is None:
        print("ok")
        return 0
    print(f"reset_at {index}")
    return 1


def _cmd_stats(args) -> int:
    reports = [metrics.load_report(p) for p in args.reports]
    sys.stdout.write(metrics.reports_to_csv(reports))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cfaudit",
        description="Control-flow log compression, streaming, and verification toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compress", help="compress a trace document")
    p.add_argument("trace")
    p.add_argument("--specs", help="sub-path spec file (optional)")
    p.add_argument("-o", "--out", required=True)
    p.add_argument("--format", choices=list(_FORMATS), default="image")
    p.add_argument("--report", help="metrics JSON path (default <out>.report.json)")
    _add_config_flags(p)
    p.set_defaults(func=_cmd_compress)

    p = sub.add_parser("expand", help="expand a serialized log back to a trace")
    p.add_argument("log")
    p.add_argument("--specs", help="sub-path spec file used during compression")
    p.add_argument("-o", "--out", required=True)
    p.add_argument("--format", choices=list(_FORMATS), default="image")
    _add_config_flags(p)
    p.set_defaults(func=_cmd_expand)

    p = sub.add_parser("select", help="derive a sub-path spec file")
    p.add_argument("--policy", choices=["top", "minimize", "select", "static"], required=True)
    p.add_argument("--trace", action="append", help="prior trace document (repeatable)")
    p.add_argument("--cfg", help="CFG document (static policy)")
    p.add_argument("-o", "--out", required=True)
    p.add_argument("--threshold", type=float, default=100.0, metavar="T",
                   help="minimize replacement threshold in percent")
    p.add_argument("--budget", type=int, default=256, metavar="B",
                   help="block memory byte budget")
    p.add_argument("--min-len", type=int, default=2)
    p.add_argument("--max-len", type=int, default=16)
    _add_config_flags(p)
    p.set_defaults(func=_cmd_select)

    p = sub.add_parser("simulate", help="end-to-end protocol run over a generated trace")
    p.add_argument("cfg")
    p.add_argument("--key", required=True, help="key file (32 bytes or 64 hex chars)")
    p.add_argument("--specs", help="spec file to install")
    p.add_argument("--policy", choices=["top", "minimize", "select", "static"],
                   help="mine specs from the generated trace instead")
    p.add_argument("--steps", type=int, default=2000)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--loop-bias", type=float, default=1.0)
    p.add_argument("--threshold", type=float, default=100.0)
    p.add_argument("--budget", type=int, default=256)
    p.add_argument("--min-len", type=int, default=2)
    p.add_argument("--max-len", type=int, default=16)
    p.add_argument("--inject", metavar="SRC:DEST@IDX",
                   help="splice an arbitrary transfer into the trace")
    p.add_argument("--drop", type=int, action="append", metavar="SEQ",
                   help="drop slice frame SEQ in transit")
    p.add_argument("--flip", action="append", metavar="SEQ[:BIT]",
                   help="flip one bit of slice frame SEQ in transit")
    p.add_argument("--replay", type=int, action="append", metavar="SEQ",
                   help="deliver slice frame SEQ twice")
    p.add_argument("--report", help="metrics JSON path")
    _add_config_flags(p)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("monitor", help="check an access-event file")
    p.add_argument("events")
    p.add_argument("--tcb", required=True, metavar="LO:HI", help="hex bounds, inclusive")
    p.add_argument("--blockmem", required=True, metavar="LO:HI")
    p.set_defaults(func=_cmd_monitor)

    p = sub.add_parser("stats", help="merge metrics reports into CSV on stdout")
    p.add_argument("reports", nargs="*")
    p.set_defaults(func=_cmd_stats)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except AuditError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
