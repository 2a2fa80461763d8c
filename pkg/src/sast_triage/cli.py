"""Command-line entry points.

Subcommands:
  triage   run the full pipeline over a SAST report and emit all outputs
  bench    score a report.json against ground-truth labels
  rulegen  turn a plain-English policy into a candidate rule
  serve    expose a report over the local review API

Exit codes for `triage`: 0 pass, 1 confirmed findings at or above the
severity threshold, 2 error. Other subcommands use 0/2.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import bench as bench_mod
from .config import load_config
from .errors import TriageError
from .pipeline import run_pipeline, sniff_and_parse
from .report import load_report, write_outputs
from .rulegen import accept_rule, synthesize_rule


def _cmd_triage(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    out_dir = Path(args.out)
    report = run_pipeline(
        args.report,
        args.repo,
        config,
        out_dir=out_dir / "tickets",
        validate=True if args.validate_poc else None,
    )
    raw = Path(args.report).read_bytes()
    original_sarif: bytes | None = None
    try:
        data = json.loads(raw.decode("utf-8"))
        if isinstance(data, dict) and data.get("version") == "2.1.0":
            original_sarif = raw
    except ValueError:
        pass
    written = write_outputs(
        report,
        out_dir,
        original_sarif=original_sarif,
        figures=config.report.figures,
    )
    if original_sarif is None:
        print("note: input was not SARIF; findings.suppressed.sarif not emitted", file=sys.stderr)
    gate = report.gate
    print(
        f"{len(report.results)} findings: {len(gate.tickets)} ticket(s), "
        f"{len(gate.suppressed)} suppressed, {len(gate.needs_review)} for review; "
        f"build {gate.build_verdict} (exit {gate.exit_code})"
    )
    for path in written:
        print(f"  wrote {path}")
    return gate.exit_code


def _cmd_bench(args: argparse.Namespace) -> int:
    report = load_report(args.report)
    labels = bench_mod.load_labels(args.labels)
    summary = bench_mod.score(report, labels, nhr_as_fp=args.nhr_as_fp)
    print(bench_mod.format_table(summary))
    for warning in summary.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "metrics.json").write_text(
            json.dumps(summary.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        from .figures import render_metrics_figure

        figure = render_metrics_figure(summary, out / "metrics.png")
        print(f"  wrote {out / 'metrics.json'}")
        print(f"  wrote {figure}")
    return 0


def _cmd_rulegen(args: argparse.Namespace) -> int:
    from .backend import make_backend

    config = load_config(args.config)
    backend = make_backend(config.backend)
    rule = synthesize_rule(args.description, backend)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    candidate = out / "generated_rule.yaml"
    candidate.write_text(rule.rule_text, encoding="utf-8")
    (out / "validation.json").write_text(
        json.dumps(rule.validation.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    print(f"rule id: {rule.rule_id or '(missing)'}  well_formed: {rule.validation.well_formed}")
    if rule.validation.missing_keys:
        print(f"missing keys: {', '.join(rule.validation.missing_keys)}")
    for warning in rule.validation.warnings:
        print(f"warning: {warning}")
    print(f"  wrote {candidate}")
    if args.accept:
        if not rule.validation.well_formed:
            print("refusing --accept: rule is not well formed", file=sys.stderr)
            return 2
        installed = accept_rule(rule, args.rules_dir)
        print(f"  accepted into {installed}")
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    from .server import serve

    config = load_config(args.config)
    server = serve(
        args.report,
        feedback_path=args.feedback or config.server.feedback_path,
        host=args.bind or config.server.bind,
        port=config.server.port if args.port is None else args.port,
        static_dir=args.static_dir or config.server.static_dir,
    )
    print(f"review API on http://{server.host}:{server.port}/api/findings", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        server.stop()
    return 0


def _cmd_parse(args: argparse.Namespace) -> int:
    from .ingest import normalize

    finding_set = normalize(sniff_and_parse(Path(args.report).read_bytes()))
    for f in finding_set.findings:
        print(f"{f.fingerprint}  {f.severity.value:<8}  {f.location.file_path}:{f.location.start_line}  {f.rule_id}")
    for warning in finding_set.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sast-triage", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_triage = sub.add_parser("triage", help="triage a SAST report end to end")
    p_triage.add_argument("--report", required=True, help="SARIF or Semgrep-style JSON report")
    p_triage.add_argument("--repo", required=True, help="repository checkout the report refers to")
    p_triage.add_argument("--config", default=None, help="YAML config file")
    p_triage.add_argument("--out", required=True, help="output directory")
    p_triage.add_argument("--validate-poc", action="store_true", help="execute allowlisted http PoCs")
    p_triage.set_defaults(func=_cmd_triage)

    p_bench = sub.add_parser("bench", help="score report.json against labels")
    p_bench.add_argument("--report", required=True)
    p_bench.add_argument("--labels", required=True)
    p_bench.add_argument("--nhr-as-fp", action="store_true", help="count needs_human_review as fp")
    p_bench.add_argument("--out", default=None, help="write metrics.json and metrics.png here")
    p_bench.set_defaults(func=_cmd_bench)

    p_rulegen = sub.add_parser("rulegen", help="synthesize a rule from plain English")
    p_rulegen.add_argument("description")
    p_rulegen.add_argument("--config", default=None)
    p_rulegen.add_argument("--out", default="rulegen-out")
    p_rulegen.add_argument("--accept", action="store_true")
    p_rulegen.add_argument("--rules-dir", default="rules")
    p_rulegen.set_defaults(func=_cmd_rulegen)

    p_serve = sub.add_parser("serve", help="serve a report over the review API")
    p_serve.add_argument("--report", required=True)
    p_serve.add_argument("--config", default=None)
    p_serve.add_argument("--port", type=int, default=None)
    p_serve.add_argument("--bind", default=None)
    p_serve.add_argument("--feedback", default=None)
    p_serve.add_argument("--static-dir", default=None)
    p_serve.set_defaults(func=_cmd_serve)

    p_parse = sub.add_parser("parse", help="parse and normalize a report, print fingerprints")
    p_parse.add_argument("--report", required=True)
    p_parse.set_defaults(func=_cmd_parse)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except TriageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
