"""Render pipeline results: markdown for humans, canonical JSON for machines,
SARIF-with-suppressions for downstream dashboards, CSV for spreadsheets.

Suppressions use SARIF's standard ``suppressions`` array instead of deleting
results, so downstream tooling can audit exactly what was filtered and why.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path
from typing import Any, Mapping

from .canonical import canonical_json_bytes
from .errors import MalformedReport
from .ingest import canonical_path, fingerprint_fields, vulnerability_type_from_metadata
from .pipeline import PipelineReport, TriageResult, VerdictKind

REPORT_SCHEMA_VERSION = "1"

_BADGES = {
    VerdictKind.TRUE_POSITIVE: "TRUE POSITIVE",
    VerdictKind.FALSE_POSITIVE: "FALSE POSITIVE",
    VerdictKind.NEEDS_HUMAN_REVIEW: "NEEDS HUMAN REVIEW",
}


def emit_json(report: PipelineReport) -> bytes:
    """Canonical JSON bytes of the full report (sorted keys, stable order)."""
    return canonical_json_bytes(report.to_dict())


def load_report(source: Path | str | bytes) -> PipelineReport:
    """Inverse of emit_json; accepts a path or raw bytes."""
    if isinstance(source, bytes):
        raw = source
    else:
        raw = Path(source).read_bytes()
    try:
        data = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, ValueError) as exc:
        raise MalformedReport(f"report.json is not UTF-8 JSON: {exc}") from exc
    if not isinstance(data, dict) or "results" not in data or "gate" not in data:
        raise MalformedReport("report.json misses required fields")
    return PipelineReport.from_dict(data)


def _verdict_counts(report: PipelineReport) -> dict[str, int]:
    counts = {k.value: 0 for k in VerdictKind}
    for r in report.results:
        counts[r.verdict.kind.value] += 1
    return counts


def render_markdown(report: PipelineReport) -> str:
    counts = _verdict_counts(report)
    gate = report.gate
    lines: list[str] = []
    lines.append("# Triage Report")
    lines.append("")
    lines.append(f"{len(report.results)} findings")
    lines.append("")
    lines.append(
        f"| Verdict | Count |\n|---|---|\n"
        f"| true positive | {counts['true_positive']} |\n"
        f"| false positive | {counts['false_positive']} |\n"
        f"| needs human review | {counts['needs_human_review']} |"
    )
    lines.append("")
    lines.append(
        f"Gate: build **{gate.build_verdict}** (exit {gate.exit_code}) — "
        f"{len(gate.tickets)} ticket(s), {len(gate.suppressed)} suppressed, "
        f"{len(gate.needs_review)} queued for review."
    )
    if report.warnings:
        lines.append("")
        lines.append(f"{len(report.warnings)} warning(s); see report.json.")
    for r in report.results:
        f = r.finding
        lines.append("")
        lines.append(
            f"## `{f.fingerprint}` {f.rule_name} — {f.location.file_path}:{f.location.start_line} "
            f"[{_BADGES[r.verdict.kind]}]"
        )
        lines.append("")
        lines.append(f"- rule: `{f.rule_id}` | severity: {f.severity.value} | type: {f.vulnerability_type}")
        lines.append(f"- guard risk: {r.guard_risk}")
        if r.verdict.confidence is not None:
            lines.append(f"- confidence: {r.verdict.confidence:.2f}")
        if r.verdict.reason_code:
            lines.append(f"- review reason: {r.verdict.reason_code}")
        lines.append("")
        lines.append(r.verdict.reasoning)
        if f.taint_path:
            lines.append("")
            lines.append("| step | role | file | line |")
            lines.append("|---|---|---|---|")
            for i, step in enumerate(f.taint_path, start=1):
                lines.append(
                    f"| {i} | {step.role.value} | {step.location.file_path} | {step.location.start_line} |"
                )
        if r.poc is not None:
            lines.append("")
            lines.append(f"PoC ({r.poc.kind}, validation: {r.poc.validation.value}):")
            lines.append("")
            lines.append("```")
            lines.append(r.poc.raw_text)
            lines.append("```")
            if r.poc.expected_evidence:
                lines.append(f"Expected evidence: `{r.poc.expected_evidence}`")
        if r.remediation is not None:
            lines.append("")
            lines.append(f"Remediation: {r.remediation.description}")
            if r.remediation.fix_summary:
                lines.append("")
                lines.append(f"Fix: {r.remediation.fix_summary}")
            if r.remediation.patched_snippet:
                lines.append("")
                lines.append("```")
                lines.append(r.remediation.patched_snippet)
                lines.append("```")
    lines.append("")
    return "\n".join(lines)


def emit_csv(report: PipelineReport) -> str:
    """Delimited summary, one row per finding."""
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(
        [
            "fingerprint", "rule_id", "rule_name", "severity", "vulnerability_type",
            "file", "line", "verdict", "reason_code", "confidence", "guard_risk",
            "poc_kind", "poc_validation",
        ]
    )
    for r in report.results:
        f = r.finding
        writer.writerow(
            [
                f.fingerprint, f.rule_id, f.rule_name, f.severity.value, f.vulnerability_type,
                f.location.file_path, f.location.start_line, r.verdict.kind.value,
                r.verdict.reason_code or "", "" if r.verdict.confidence is None else r.verdict.confidence,
                r.guard_risk, r.poc.kind if r.poc else "", r.poc.validation.value if r.poc else "",
            ]
        )
    return buf.getvalue()


def _sarif_result_fingerprint(rules: Mapping[str, Any], result: Mapping[str, Any]) -> str | None:
    """Recompute the normalized fingerprint for one raw SARIF result, matching
    parse_sarif + normalize."""
    rule_id = result.get("ruleId") or ""
    rule = rules.get(rule_id) or {}
    loc = None
    for entry in result.get("locations") or []:
        ploc = entry.get("physicalLocation") or {}
        uri = (ploc.get("artifactLocation") or {}).get("uri")
        start_line = (ploc.get("region") or {}).get("startLine")
        if uri and isinstance(start_line, int) and start_line >= 1:
            loc = (uri, start_line)
            break
    if loc is None:
        return None
    props: dict[str, Any] = {**(rule.get("properties") or {}), **(result.get("properties") or {})}
    rule_name = rule.get("name") or ((rule.get("shortDescription") or {}).get("text")) or rule_id
    tags = (rule.get("properties") or {}).get("tags") or []
    vtype = vulnerability_type_from_metadata(props, tags, fallback=rule_name)
    return fingerprint_fields(rule_id, canonical_path(loc[0]), loc[1], vtype)


def emit_sarif_suppressed(report: PipelineReport, original_sarif: bytes) -> bytes:
    """Annotate the original SARIF: false positives gain a suppression entry,
    confirmed true positives a property-bag marker. All results survive.

    When duplicate results share a fingerprint, only the first occurrence is
    annotated so the suppression count equals the false-positive verdict
    count exactly.
    """
    try:
        data = json.loads(original_sarif.decode("utf-8"))
    except (UnicodeDecodeError, ValueError) as exc:
        raise MalformedReport(f"original SARIF is not UTF-8 JSON: {exc}") from exc
    if not isinstance(data, dict) or data.get("version") != "2.1.0":
        raise MalformedReport("expected a SARIF object with version 2.1.0")
    by_fp: dict[str, TriageResult] = {r.finding.fingerprint: r for r in report.results}
    used: set[str] = set()
    for run in data.get("runs") or []:
        driver = (run.get("tool") or {}).get("driver") or {}
        rules = {r.get("id"): r for r in (driver.get("rules") or []) if isinstance(r, Mapping)}
        for result in run.get("results") or []:
            fp = _sarif_result_fingerprint(rules, result)
            if fp is None or fp in used or fp not in by_fp:
                continue
            used.add(fp)
            verdict = by_fp[fp].verdict
            if verdict.kind is VerdictKind.FALSE_POSITIVE:
                result["suppressions"] = [
                    {"kind": "external", "justification": verdict.reasoning}
                ]
            elif verdict.kind is VerdictKind.TRUE_POSITIVE:
                props = result.setdefault("properties", {})
                props["triage"] = "confirmed"
                props["reasoning"] = verdict.reasoning
    return json.dumps(data, indent=2, ensure_ascii=False).encode("utf-8")


def write_outputs(
    report: PipelineReport,
    out_dir: Path | str,
    *,
    original_sarif: bytes | None = None,
    figures: bool = True,
) -> list[Path]:
    """Write report.json, report.md, findings.csv, optional suppressed SARIF,
    and figures under the output directory. Returns the written paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    (out / "report.json").write_bytes(emit_json(report))
    written.append(out / "report.json")
    (out / "report.md").write_text(render_markdown(report), encoding="utf-8")
    written.append(out / "report.md")
    (out / "findings.csv").write_text(emit_csv(report), encoding="utf-8")
    written.append(out / "findings.csv")
    if original_sarif is not None:
        (out / "findings.suppressed.sarif").write_bytes(emit_sarif_suppressed(report, original_sarif))
        written.append(out / "findings.suppressed.sarif")
    if figures:
        from .figures import render_report_figures

        written.extend(render_report_figures(report, out / "figures"))
    return written
