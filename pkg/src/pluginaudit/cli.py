"""Command-line entry point.

Subcommands: ingest, audit, probe, legal, classify, report, diff,
fixture gen, fixture serve. Flags mirror the audit config; a config file
overrides defaults and flags override the config file. Exit codes: 0 for a
clean run, 2 when any exposure was found, 1 for operational failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import signal
import sys
import threading
from pathlib import Path

from .config import AuditConfig
from .errors import PluginAuditError
from .fixture_server import FixtureServer
from .fixtures import ACCEPTANCE_SPEC, SNAPSHOT_FILE, FixtureSpec, generate_store
from .pipeline import audit_store
from .report import (
    canonical_json,
    diff_runs,
    email_domain_histogram,
    ingest_run,
    is_bac,
    render,
)
from .snapshot import load_snapshot, load_store, save_store

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_EXPOSURES = 2

_CONFIG_FLAG_FIELDS = (
    ("theta1", float), ("theta2", float), ("theta3", float),
    ("timeout", float), ("attempts", int), ("per-host-interval", float),
    ("backoff-initial", float), ("user-agent", str), ("workers", int),
    ("lexicon-path", str), ("seed-library-path", str),
    ("keyword-table-path", str), ("gazetteer-path", str),
    ("output-format", str),
)


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON config file (flags override it)")
    for flag, kind in _CONFIG_FLAG_FIELDS:
        parser.add_argument(f"--{flag}", type=kind, default=None)
    parser.add_argument("--aggressive-methods", action="store_true", default=None)
    parser.add_argument("--resolve", action="append", default=None, metavar="HOST=IP:PORT",
                        help="resolve HOST to IP:PORT (HOST may be *)")


def _config_from_args(args: argparse.Namespace) -> AuditConfig:
    config = AuditConfig.load(args.config) if args.config else AuditConfig()
    overrides = {}
    for flag, _ in _CONFIG_FLAG_FIELDS:
        name = flag.replace("-", "_")
        value = getattr(args, name, None)
        if value is not None:
            overrides[name] = value
    if getattr(args, "aggressive_methods", None):
        overrides["aggressive_methods"] = True
    if getattr(args, "resolve", None):
        mapping = dict(config.resolve)
        for item in args.resolve:
            host, _, target = item.partition("=")
            if not target:
                raise PluginAuditError(f"--resolve expects HOST=IP:PORT, got {item!r}")
            mapping[host] = target
        overrides["resolve"] = mapping
    return config.replace(**overrides) if overrides else config


def _write_or_print(text: str, out_path) -> None:
    if out_path:
        Path(out_path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


# --- subcommands ---------------------------------------------------------------

def cmd_ingest(args) -> int:
    listings = load_snapshot(args.snapshot)
    save_store(listings, args.out)
    print(f"ingested {len(listings)} listings -> {args.out}")
    return EXIT_OK


def _run_audit(args, config: AuditConfig):
    listings = load_store(args.store)
    return audit_store(
        listings,
        config,
        run_id=getattr(args, "run_id", None),
        timestamp=getattr(args, "timestamp", None),
    )


def cmd_audit(args) -> int:
    config = _config_from_args(args)
    run = _run_audit(args, config)
    out_dir = Path(args.runs_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    out_path = out_dir / f"{run.run_id}.json"
    out_path.write_text(render(run, "json"), encoding="utf-8")

    counts = run.exposure_counts()
    flagged = sum(counts.values())
    print(f"run {run.run_id}: {len(run.reports)} plugins audited -> {out_path}")
    for key, value in counts.items():
        print(f"  {key}: {value}")
    return EXIT_EXPOSURES if flagged else EXIT_OK


def cmd_probe(args) -> int:
    config = _config_from_args(args)
    run = _run_audit(args, config)
    payload = [
        {
            "plugin_id": r.plugin_id,
            "exposures": {k: r.exposures[k] for k in ("e3", "e4", "e5")},
            "probe": r.probe_summary,
        }
        for r in run.reports
    ]
    _write_or_print(canonical_json(payload), args.out)
    return EXIT_EXPOSURES if any(is_bac(r) for r in run.reports) else EXIT_OK


def cmd_legal(args) -> int:
    config = _config_from_args(args)
    run = _run_audit(args, config)
    payload = [
        {
            "plugin_id": r.plugin_id,
            "accessible": bool(r.legal and r.legal.accessible),
            "category": r.legal.category if r.legal else None,
            "matched_seeds": list(r.legal.matched_seeds) if r.legal else [],
        }
        for r in run.reports
    ]
    _write_or_print(canonical_json(payload), args.out)
    return EXIT_OK


def cmd_classify(args) -> int:
    from .classify import LexicalScorer, classify_category, detect_regions, load_gazetteer, load_keyword_table
    from .errors import EmptyDescription

    config = _config_from_args(args)
    scorer = LexicalScorer(load_keyword_table(config.keyword_table_path))
    gazetteer = load_gazetteer(config.gazetteer_path)
    payload = []
    for listing in load_store(args.store):
        try:
            category, score = classify_category(listing.description, scorer)
        except EmptyDescription:
            category, score = None, 0.0
        payload.append({
            "plugin_id": listing.plugin_id,
            "category": category,
            "score": score,
            "regions": detect_regions(f"{listing.name} {listing.description}", gazetteer),
        })
    _write_or_print(canonical_json(payload), args.out)
    return EXIT_OK


def cmd_report(args) -> int:
    run = ingest_run(Path(args.run).read_text(encoding="utf-8"))
    if args.view == "emails":
        histogram = email_domain_histogram(run, is_bac if args.bac_only else None)
        _write_or_print(canonical_json([list(pair) for pair in histogram]), args.out)
        return EXIT_OK
    _write_or_print(render(run, args.format), args.out)
    return EXIT_OK


def cmd_diff(args) -> int:
    earlier = ingest_run(Path(args.before).read_text(encoding="utf-8"))
    later = ingest_run(Path(args.after).read_text(encoding="utf-8"))
    diff = diff_runs(earlier, later)
    _write_or_print(render(diff, args.format), args.out)
    return EXIT_OK


def cmd_fixture_gen(args) -> int:
    spec = FixtureSpec.from_file(args.spec) if args.spec else ACCEPTANCE_SPEC
    if args.seed is not None:
        spec = dataclasses.replace(spec, seed=args.seed)
    plan = generate_store(spec, args.out)
    print(f"generated {len(plan.listings)} plugins -> {args.out}")
    print(f"snapshot: {Path(args.out) / SNAPSHOT_FILE}")
    return EXIT_OK


def cmd_fixture_serve(args) -> int:
    server = FixtureServer(args.dir, port=args.port, stall_seconds=args.stall).start()
    print(f"serving fixture store on http://{server.address} (Ctrl-C to stop)")
    print(f"audit with: --resolve '*={server.address}'")
    stop = threading.Event()

    def handle_signal(signum, frame):
        stop.set()

    signal.signal(signal.SIGINT, handle_signal)
    signal.signal(signal.SIGTERM, handle_signal)
    try:
        stop.wait()
    finally:
        if args.log_file:
            server.dump_log(args.log_file)
            print(f"request log -> {args.log_file}")
        server.stop()
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pluginaudit",
        description="Three-layer security assessment for LLM plugin stores",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_ingest = sub.add_parser("ingest", help="validate a snapshot into a store file")
    p_ingest.add_argument("snapshot")
    p_ingest.add_argument("--out", required=True)
    p_ingest.set_defaults(func=cmd_ingest)

    p_audit = sub.add_parser("audit", help="run the full three-layer audit")
    p_audit.add_argument("--store", required=True)
    p_audit.add_argument("--runs-dir", default="runs")
    p_audit.add_argument("--run-id", default=None)
    p_audit.add_argument("--timestamp", default=None)
    _add_config_flags(p_audit)
    p_audit.set_defaults(func=cmd_audit)

    p_probe = sub.add_parser("probe", help="API authorization layer only")
    p_probe.add_argument("--store", required=True)
    p_probe.add_argument("--out", default=None)
    _add_config_flags(p_probe)
    p_probe.set_defaults(func=cmd_probe)

    p_legal = sub.add_parser("legal", help="legal-document layer only")
    p_legal.add_argument("--store", required=True)
    p_legal.add_argument("--out", default=None)
    _add_config_flags(p_legal)
    p_legal.set_defaults(func=cmd_legal)

    p_classify = sub.add_parser("classify", help="category and region detection only")
    p_classify.add_argument("--store", required=True)
    p_classify.add_argument("--out", default=None)
    _add_config_flags(p_classify)
    p_classify.set_defaults(func=cmd_classify)

    p_report = sub.add_parser("report", help="render a stored run")
    p_report.add_argument("--run", required=True)
    p_report.add_argument("--format", choices=("json", "csv", "markdown"), default="markdown")
    p_report.add_argument("--view", choices=("full", "emails"), default="full")
    p_report.add_argument("--bac-only", action="store_true",
                          help="with --view emails, count only broken-access-control plugins")
    p_report.add_argument("--out", default=None)
    p_report.set_defaults(func=cmd_report)

    p_diff = sub.add_parser("diff", help="compare two runs of the same config")
    p_diff.add_argument("before")
    p_diff.add_argument("after")
    p_diff.add_argument("--format", choices=("json", "csv", "markdown"), default="markdown")
    p_diff.add_argument("--out", default=None)
    p_diff.set_defaults(func=cmd_diff)

    p_fixture = sub.add_parser("fixture", help="generate or serve a synthetic store")
    fixture_sub = p_fixture.add_subparsers(dest="fixture_command", required=True)

    p_gen = fixture_sub.add_parser("gen", help="generate a store directory")
    p_gen.add_argument("--spec", default=None, help="fixture spec JSON (default: built-in)")
    p_gen.add_argument("--seed", type=int, default=None)
    p_gen.add_argument("--out", required=True)
    p_gen.set_defaults(func=cmd_fixture_gen)

    p_serve = fixture_sub.add_parser("serve", help="serve a generated store over HTTP")
    p_serve.add_argument("--dir", required=True)
    p_serve.add_argument("--port", type=int, default=0)
    p_serve.add_argument("--stall", type=float, default=5.0,
                         help="seconds unresponsive hosts sleep before answering")
    p_serve.add_argument("--log-file", default=None)
    p_serve.set_defaults(func=cmd_fixture_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except PluginAuditError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
