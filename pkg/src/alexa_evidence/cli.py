"""Command line: ingest, acquire, analyze, diff, mock.

Settings resolve as flags, then ``ALEXA_EVIDENCE_*`` environment variables,
then a JSON config file (``--config`` or ``ALEXA_EVIDENCE_CONFIG``).

Exit codes: 0 success, 1 partial (some endpoints failed), 2 hard error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import signal
import sys
from pathlib import Path
from typing import Any, Callable, Mapping, Sequence

from . import __version__
from .analysis import DEFAULT_JOIN_WINDOW_MS, analyze_case, diff_snapshots, write_diff, write_reports
from .canonical import canonical_json
from .capture import DEFAULT_ALLOWLIST, NotAnExport, ingest
from .case import CaseIntegrityError, CaseSource, load_case, seal_records, write_case
from .client import Session, TransportError, acquire_case
from .mock import InvalidFixture, MockState, ScenarioError, default_state, run_script, trace_to_jsonl
from .mock.scenario import load_script
from .mock.server import serve
from .redact import mask_identifier, redact_tree

__all__ = ["EXIT_HARD", "EXIT_OK", "EXIT_PARTIAL", "main"]

EXIT_OK, EXIT_PARTIAL, EXIT_HARD = 0, 1, 2
ENV_PREFIX = "ALEXA_EVIDENCE_"

logger = logging.getLogger("alexa_evidence")

_DEFAULTS: dict[str, Any] = {
    "parallelism": 4,
    "delay_ms": 0,
    "join_window_s": DEFAULT_JOIN_WINDOW_MS / 1000,
    "port": 8765,
    "host": "127.0.0.1",
    "timeout_s": 10.0,
}
_TYPES: dict[str, Callable[[Any], Any]] = {
    "parallelism": int,
    "delay_ms": int,
    "port": int,
    "join_window_s": float,
    "timeout_s": float,
}


class UsageError(Exception):
    pass


class Settings:
    """Lookup with precedence flag > environment > config file > built-in default."""

    def __init__(self, args: argparse.Namespace, environ: Mapping[str, str]) -> None:
        self.args = args
        self.environ = environ
        path = getattr(args, "config", None) or environ.get(ENV_PREFIX + "CONFIG")
        self.file: dict[str, Any] = {}
        if path:
            try:
                self.file = json.loads(Path(path).read_text("utf-8"))
            except (OSError, json.JSONDecodeError) as exc:
                raise UsageError(f"cannot read config {path}: {exc}") from None
            if not isinstance(self.file, dict):
                raise UsageError(f"config {path} must hold a JSON object")

    def get(self, key: str, required: bool = False) -> Any:
        value = getattr(self.args, key, None)
        if value is None:
            value = self.environ.get(ENV_PREFIX + key.upper())
        if value is None:
            value = self.file.get(key)
        if value is None:
            value = _DEFAULTS.get(key)
        if value is None:
            if required:
                raise UsageError(f"--{key.replace('_', '-')} is required (or {ENV_PREFIX}{key.upper()})")
            return None
        conv = _TYPES.get(key)
        if conv is not None:
            try:
                value = conv(value)
            except (TypeError, ValueError):
                raise UsageError(f"{key}: invalid value {value!r}") from None
        return value


class Output:
    def __init__(self, as_json: bool, redact: bool, stream=None) -> None:
        self.as_json = as_json
        self.redact = redact
        self.stream = stream or sys.stdout

    def ident(self, value: str | None) -> str:
        if not value:
            return ""
        return mask_identifier(value) if self.redact else value

    def _prep(self, value: Any) -> Any:
        return redact_tree(value) if self.redact else value

    def result(self, summary: Mapping[str, Any], lines: Sequence[str] = ()) -> None:
        if self.as_json:
            self.stream.write(canonical_json(self._prep(dict(summary))) + "\n")
        else:
            for line in lines:
                self.stream.write(line + "\n")
        self.stream.flush()

    def error(self, kind: str, detail: str) -> None:
        if self.as_json:
            self.stream.write(canonical_json({"ok": False, "error": kind, "detail": detail}) + "\n")
            self.stream.flush()
        else:
            sys.stderr.write(f"error: {kind}: {detail}\n")


# ---------------------------------------------------------------- commands


def cmd_ingest(args: argparse.Namespace, settings: Settings, out: Output) -> int:
    export = Path(args.export)
    case_dir = Path(settings.get("case", required=True))
    try:
        data = export.read_bytes()
    except OSError as exc:
        raise UsageError(f"cannot read {export}: {exc}") from None
    allow = args.allow or settings.file.get("allowlist") or list(DEFAULT_ALLOWLIST)
    result = ingest(data, allow)
    config = {"export": export.name, "allowlist": list(allow)}
    case, manifest = seal_records(case_dir, result.records, CaseSource.CAPTURE, case_id=args.case_id or case_dir.name,
                                  created_at=min((r.captured_at for r in result.records if r.captured_at is not None),
                                                 default=None),
                                  config=config, overwrite=args.force)
    report = result.report.to_dict()
    rejects = [{"index": r.index, "offset": r.offset, "reason": r.reason} for r in result.export.rejects]
    out.result(
        {"ok": True, "command": "ingest", "case": str(case_dir), "records": len(case.records), "report": report,
         "rejects": rejects},
        [f"sealed {case_dir} with {len(case.records)} records",
         "conservation: " + ", ".join(f"{k}={v}" for k, v in report.items())]
        + [f"  reject item {r['index']} at byte {r['offset']}: {r['reason']}" for r in rejects],
    )
    return EXIT_OK


def cmd_acquire(args: argparse.Namespace, settings: Settings, out: Output) -> int:
    base_url = settings.get("base_url", required=True)
    token = settings.get("token", required=True)
    case_dir = Path(settings.get("case", required=True))
    if (case_dir / "manifest.json").exists() and not args.force:
        raise UsageError(f"{case_dir} already holds a sealed case (use --force to replace it)")
    session = Session(base_url, token, settings.get("user_id"))
    source = CaseSource.MOCK if args.mock_source else CaseSource.LIVE
    case, report = acquire_case(
        session,
        case_id=args.case_id or case_dir.name,
        source=source,
        parallelism=settings.get("parallelism"),
        delay_ms=settings.get("delay_ms"),
        timeout=settings.get("timeout_s"),
    )
    write_case(case, case_dir, overwrite=args.force)
    summary = report.to_dict()
    out.result(
        {"ok": not report.partial, "command": "acquire", "case": str(case_dir), "records": len(case.records),
         "session": session.to_dict(), "report": summary},
        [f"sealed {case_dir}: {len(case.records)} records, {summary['succeeded']}/{summary['attempted']} succeeded",
         f"http failures: {len(summary['http_failures'])}, transport errors: {len(summary['transport_errors'])}, "
         f"schema mismatches: {len(summary['schema_mismatches'])}"]
        + [f"  warning: {w}" for w in summary["warnings"]],
    )
    return EXIT_PARTIAL if report.partial else EXIT_OK


def cmd_analyze(args: argparse.Namespace, settings: Settings, out: Output) -> int:
    case_dir = settings.get("case", required=True)
    out_dir = Path(settings.get("out") or Path(case_dir) / "reports")
    window_ms = int(round(settings.get("join_window_s") * 1000))
    if window_ms < 0:
        raise UsageError("join window must be non-negative")
    case = load_case(case_dir)
    result = analyze_case(case, window_ms)
    paths = write_reports(result, out_dir)
    findings = result.findings()
    lines = [f"case {case.case_id}: {findings['summary']['interactions']} interactions, "
             f"{findings['summary']['timeline_events']} timeline events -> {out_dir}"]
    for dev in case.devices():
        lines.append(f"  device {out.ident(dev.serial_number)} type {dev.device_type} software {dev.software_version}")
    for v in result.verdicts:
        lines.append(f"  {v.interaction_id}: {v.state.value} ({v.presence})")
    for u in result.unresolved:
        lines.append(f"  {u['interaction_id']}: unresolved ({u['reason']})")
    for f in result.locations:
        lines.append(f"  location {f.kind.value}: {f.detail}")
    out.result({"ok": True, "command": "analyze", "case": str(case_dir), "summary": findings["summary"],
                "reports": {k: str(v) for k, v in paths.items()}}, lines)
    return EXIT_OK


def cmd_diff(args: argparse.Namespace, settings: Settings, out: Output) -> int:
    cases = list(args.cases or []) + list(args.case_list or [])
    if len(cases) != 2:
        raise UsageError("diff needs exactly two cases")
    a, b = (load_case(c) for c in cases)
    diff = diff_snapshots(a, b)
    target = Path(settings.get("out") or "diff.json")
    if target.is_dir():
        target = target / "diff.json"
    write_diff(diff, target)
    doc = diff.to_dict()
    lines = [f"{len(diff)} differences -> {target}"]
    lines += [f"  {e.endpoint_id} {e.kind.value} {e.path}" for e in diff.entries]
    out.result({"ok": True, "command": "diff", "out": str(target), "counts": doc["counts"]}, lines)
    return EXIT_OK


def cmd_mock(args: argparse.Namespace, settings: Settings, out: Output) -> int:
    fixture_path = settings.get("fixture")
    if fixture_path:
        try:
            fixture = json.loads(Path(fixture_path).read_text("utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise InvalidFixture(f"cannot load {fixture_path}: {exc}") from None
        state = MockState.from_fixture(fixture)
    else:
        state = default_state()
    if args.dump_fixture:
        sys.stdout.write(canonical_json(state.to_fixture(), indent=2) + "\n")
        return EXIT_OK
    if args.scenario:
        steps = load_script(Path(args.scenario).read_text("utf-8"))
        trace, final = run_script(steps, state)
        state = final or state
        text = trace_to_jsonl(trace)
        if args.trace:
            Path(args.trace).write_text(text, encoding="utf-8", newline="\n")
        else:
            sys.stderr.write(text)
    host = settings.get("host")
    port = settings.get("port")

    def announce(url: str) -> None:
        out.result({"ok": True, "command": "mock", "url": url, "interactions": len(state.interactions)},
                   [f"mock service on {url} ({len(state.interactions)} interactions); Ctrl-C to stop"])

    def stop(signum: int, frame: Any) -> None:
        raise KeyboardInterrupt

    previous = signal.signal(signal.SIGTERM, stop)
    try:
        serve(state, host=host, port=port, tokens=[args.require_token] if args.require_token else None,
              on_start=announce)
    finally:
        signal.signal(signal.SIGTERM, previous)
    return EXIT_OK


# ------------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    def shared(default: Any) -> argparse.ArgumentParser:
        # subcommands suppress defaults so a flag given before the subcommand survives
        p = argparse.ArgumentParser(add_help=False, argument_default=default)
        p.add_argument("--json", action="store_true", help="machine-readable JSON summary on stdout")
        p.add_argument("--no-redact", action="store_true", help="show identifiers unmasked")
        p.add_argument("--config", help="JSON config file (lowest precedence)")
        p.add_argument("-v", "--verbose", action="store_true")
        return p

    common = shared(argparse.SUPPRESS)
    parser = argparse.ArgumentParser(prog="alexa-evidence", description=__doc__.splitlines()[0], parents=[shared(None)])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", parents=[common], help="seal a case from a proxy export")
    p.add_argument("export", help="proxy XML export")
    p.add_argument("--case", help="case directory to create")
    p.add_argument("--case-id")
    p.add_argument("--allow", action="append", help="allowed host (repeatable; default: the Alexa hosts)")
    p.add_argument("--force", action="store_true", help="replace an existing sealed case")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("acquire", parents=[common], help="fetch every registry endpoint into a sealed case")
    p.add_argument("--case")
    p.add_argument("--case-id")
    p.add_argument("--base-url")
    p.add_argument("--token")
    p.add_argument("--user-id")
    p.add_argument("--parallelism", type=int)
    p.add_argument("--delay-ms", type=int)
    p.add_argument("--timeout-s", type=float)
    p.add_argument("--mock-source", action="store_true", help="label the case as acquired from the mock")
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_acquire)

    p = sub.add_parser("analyze", parents=[common], help="joins, deletion verdicts, timeline, location checks")
    p.add_argument("--case")
    p.add_argument("--out", help="report directory (default: <case>/reports)")
    p.add_argument("--join-window-s", type=float)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("diff", parents=[common], help="compare two sealed cases")
    p.add_argument("cases", nargs="*", help="two case directories")
    p.add_argument("--case", dest="case_list", action="append", help="case directory (give twice)")
    p.add_argument("--out", help="diff.json path or directory")
    p.set_defaults(func=cmd_diff)

    p = sub.add_parser("mock", parents=[common], help="run the mock service until interrupted")
    p.add_argument("--fixture", help="fixture JSON (default: built-in)")
    p.add_argument("--port", type=int)
    p.add_argument("--host")
    p.add_argument("--scenario", help="scenario script (JSON array or JSONL) to replay before serving")
    p.add_argument("--trace", help="write the scenario trace here as JSONL (default: stderr)")
    p.add_argument("--require-token", help="accept only this bearer token (default: any nonempty token)")
    p.add_argument("--dump-fixture", action="store_true", help="print the fixture and exit")
    p.set_defaults(func=cmd_mock)
    return parser


def main(argv: Sequence[str] | None = None, environ: Mapping[str, str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    out = Output(args.json, not args.no_redact)
    try:
        settings = Settings(args, os.environ if environ is None else environ)
        return args.func(args, settings, out)
    except UsageError as exc:
        out.error("usage", str(exc))
    except NotAnExport as exc:
        out.error("NotAnExport", str(exc))
    except TransportError as exc:
        out.error("TransportError", exc.detail)
    except CaseIntegrityError as exc:
        out.error("CaseIntegrityError", str(exc))
    except (InvalidFixture, ScenarioError) as exc:
        out.error(type(exc).__name__, str(exc))
    except FileExistsError as exc:
        out.error("exists", str(exc))
    except OSError as exc:
        out.error("io", str(exc))
    return EXIT_HARD
