"""Parse SAST reports into a normalized finding model with stable fingerprints.

Two input dialects are supported:

* SARIF 2.1.0 — one finding per ``runs[].results[]``. Severity maps from
  ``level`` (error→high, warning→medium, note→info, none→info; missing level
  defaults to warning per the SARIF spec) unless a ``security-severity``
  property (result properties win over rule properties) overrides it on the
  CVSS-style scale: ≥9.0 critical, ≥7.0 high, ≥4.0 medium, >0 low, else info.
  ``codeFlows[0].threadFlows[0].locations[]`` becomes the taint path.

* Semgrep-style JSON — one finding per ``results[]`` entry. Severity maps
  ERROR→high, WARNING→medium, INFO→info; anything else becomes medium with a
  warning. ``extra.dataflow_trace`` (taint_source / intermediate_vars /
  taint_sink) becomes the taint path.

Fingerprints are the first 64 bits (16 hex chars) of SHA-256 over the
unit-separator-joined tuple (rule_id, file_path, start_line,
vulnerability_type). Message text and end positions are deliberately excluded
so cosmetic tool-output changes do not move the join key.
"""

from __future__ import annotations

import enum
import hashlib
import json
import posixpath
import re
from dataclasses import dataclass, replace
from typing import Any, Iterable, Mapping

from .errors import MalformedReport, PathEscape


class Severity(str, enum.Enum):
    INFO = "info"
    LOW = "low"
    MEDIUM = "medium"
    HIGH = "high"
    CRITICAL = "critical"

    @property
    def rank(self) -> int:
        return _SEVERITY_RANK[self]


_SEVERITY_RANK = {
    Severity.INFO: 0,
    Severity.LOW: 1,
    Severity.MEDIUM: 2,
    Severity.HIGH: 3,
    Severity.CRITICAL: 4,
}

SARIF_LEVEL_SEVERITY = {
    "error": Severity.HIGH,
    "warning": Severity.MEDIUM,
    "note": Severity.INFO,
    "none": Severity.INFO,
}

SEMGREP_SEVERITY = {
    "ERROR": Severity.HIGH,
    "WARNING": Severity.MEDIUM,
    "INFO": Severity.INFO,
}


class StepRole(str, enum.Enum):
    SOURCE = "source"
    PROPAGATOR = "propagator"
    SANITIZER_CANDIDATE = "sanitizer-candidate"
    SINK = "sink"


@dataclass(frozen=True)
class SourceLocation:
    """A 1-based, repo-relative source span."""

    file_path: str
    start_line: int
    end_line: int
    start_col: int | None = None
    end_col: int | None = None

    def __post_init__(self) -> None:
        if self.start_line < 1 or self.end_line < 1:
            raise ValueError(f"line numbers are 1-based, got {self.start_line}..{self.end_line}")
        if self.start_line > self.end_line:
            raise ValueError(f"start_line {self.start_line} > end_line {self.end_line}")

    def to_dict(self) -> dict[str, Any]:
        return {
            "file_path": self.file_path,
            "start_line": self.start_line,
            "end_line": self.end_line,
            "start_col": self.start_col,
            "end_col": self.end_col,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "SourceLocation":
        return cls(
            file_path=d["file_path"],
            start_line=d["start_line"],
            end_line=d["end_line"],
            start_col=d.get("start_col"),
            end_col=d.get("end_col"),
        )


@dataclass(frozen=True)
class TaintStep:
    """One hop of the source-to-sink dataflow.

    Snippets may be empty at parse time; the context module fills them from
    the repository checkout, since reports are often parsed elsewhere.
    """

    location: SourceLocation
    role: StepRole
    snippet: str = ""

    def to_dict(self) -> dict[str, Any]:
        return {"location": self.location.to_dict(), "role": self.role.value, "snippet": self.snippet}

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "TaintStep":
        return cls(
            location=SourceLocation.from_dict(d["location"]),
            role=StepRole(d["role"]),
            snippet=d.get("snippet", ""),
        )


@dataclass(frozen=True)
class Finding:
    """One normalized SAST result."""

    id: str
    rule_id: str
    rule_name: str
    severity: Severity
    vulnerability_type: str
    message: str
    location: SourceLocation
    taint_path: tuple[TaintStep, ...]
    origin_tool: str
    fingerprint: str

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "rule_id": self.rule_id,
            "rule_name": self.rule_name,
            "severity": self.severity.value,
            "vulnerability_type": self.vulnerability_type,
            "message": self.message,
            "location": self.location.to_dict(),
            "taint_path": [s.to_dict() for s in self.taint_path],
            "origin_tool": self.origin_tool,
            "fingerprint": self.fingerprint,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "Finding":
        return cls(
            id=d["id"],
            rule_id=d["rule_id"],
            rule_name=d["rule_name"],
            severity=Severity(d["severity"]),
            vulnerability_type=d["vulnerability_type"],
            message=d["message"],
            location=SourceLocation.from_dict(d["location"]),
            taint_path=tuple(TaintStep.from_dict(s) for s in d.get("taint_path", [])),
            origin_tool=d["origin_tool"],
            fingerprint=d["fingerprint"],
        )


@dataclass(frozen=True)
class FindingSet:
    findings: tuple[Finding, ...]
    source_digest: str
    warnings: tuple[str, ...] = ()


def fingerprint_fields(rule_id: str, file_path: str, start_line: int, vulnerability_type: str) -> str:
    """64-bit hex digest of the finding join key; stable across runs and platforms."""
    payload = "\x1f".join((rule_id, file_path, str(int(start_line)), vulnerability_type))
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]


def fingerprint(finding: Finding) -> str:
    return fingerprint_fields(
        finding.rule_id,
        finding.location.file_path,
        finding.location.start_line,
        finding.vulnerability_type,
    )


def canonical_path(path: str) -> str:
    """Canonicalize to a forward-slash, repo-relative path.

    Absolute paths and file:// URIs are taken as repo-root-relative. Raises
    PathEscape when the normalized path climbs above the repo root.
    """
    p = path.replace("\\", "/")
    if p.startswith("file://"):
        p = p[len("file://"):]
    p = p.lstrip("/")
    p = posixpath.normpath(p)
    if p == ".." or p.startswith("../"):
        raise PathEscape(f"path escapes repository root: {path!r}")
    return p


def _decode_json(report_bytes: bytes) -> Any:
    try:
        text = report_bytes.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise MalformedReport(f"report is not UTF-8: {exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedReport(f"report is not JSON: {exc}") from exc


def _cwe_name(cwe: Any) -> str | None:
    if isinstance(cwe, (list, tuple)):
        cwe = cwe[0] if cwe else None
    if not isinstance(cwe, str) or not cwe:
        return None
    # "CWE-22: Improper Limitation ..." -> text after the id; bare ids pass through
    if ":" in cwe:
        tail = cwe.split(":", 1)[1].strip()
        if tail:
            return tail
    return cwe


def vulnerability_type_from_metadata(meta: Mapping[str, Any], tags: Iterable[str], fallback: str) -> str:
    """Pick a vulnerability type: vulnerability_class > cwe > cwe tag > category > fallback."""
    vc = meta.get("vulnerability_class")
    if isinstance(vc, (list, tuple)) and vc:
        return str(vc[0])
    if isinstance(vc, str) and vc:
        return vc
    name = _cwe_name(meta.get("cwe"))
    if name:
        return name
    for tag in tags:
        m = re.search(r"cwe[-/](\d+)", str(tag), re.IGNORECASE)
        if m:
            return f"CWE-{int(m.group(1))}"
    cat = meta.get("category")
    if isinstance(cat, str) and cat:
        return cat
    return fallback


def _loc_from_physical(ploc: Mapping[str, Any]) -> SourceLocation | None:
    art = ploc.get("artifactLocation") or {}
    uri = art.get("uri")
    region = ploc.get("region") or {}
    start_line = region.get("startLine")
    if not uri or not isinstance(start_line, int) or start_line < 1:
        return None
    end_line = region.get("endLine")
    if not isinstance(end_line, int) or end_line < start_line:
        end_line = start_line
    return SourceLocation(
        file_path=uri,
        start_line=start_line,
        end_line=end_line,
        start_col=region.get("startColumn"),
        end_col=region.get("endColumn"),
    )


def _sarif_location(result: Mapping[str, Any]) -> SourceLocation | None:
    for loc in result.get("locations") or []:
        ploc = loc.get("physicalLocation")
        if isinstance(ploc, Mapping):
            parsed = _loc_from_physical(ploc)
            if parsed is not None:
                return parsed
    return None


def _severity_from_score(score: float) -> Severity:
    if score >= 9.0:
        return Severity.CRITICAL
    if score >= 7.0:
        return Severity.HIGH
    if score >= 4.0:
        return Severity.MEDIUM
    if score > 0.0:
        return Severity.LOW
    return Severity.INFO


def _sarif_severity(result: Mapping[str, Any], rule: Mapping[str, Any]) -> tuple[Severity, str | None]:
    props: dict[str, Any] = {**(rule.get("properties") or {}), **(result.get("properties") or {})}
    raw = props.get("security-severity")
    if raw is not None:
        try:
            return _severity_from_score(float(raw)), None
        except (TypeError, ValueError):
            pass  # fall back to level mapping below
    level = result.get("level") or "warning"
    sev = SARIF_LEVEL_SEVERITY.get(level)
    if sev is None:
        return Severity.MEDIUM, f"unknown SARIF level {level!r} mapped to medium"
    return sev, None


def _roles_by_position(n: int) -> list[StepRole]:
    if n == 0:
        return []
    if n == 1:
        return [StepRole.SINK]
    return [StepRole.SOURCE] + [StepRole.PROPAGATOR] * (n - 2) + [StepRole.SINK]


def _sarif_taint_path(result: Mapping[str, Any]) -> tuple[TaintStep, ...]:
    flows = result.get("codeFlows") or []
    if not flows:
        return ()
    thread_flows = flows[0].get("threadFlows") or []
    if not thread_flows:
        return ()
    collected: list[tuple[SourceLocation, str]] = []
    for entry in thread_flows[0].get("locations") or []:
        ploc = ((entry.get("location") or {}).get("physicalLocation")) or {}
        loc = _loc_from_physical(ploc)
        if loc is None:
            continue
        snippet = (((ploc.get("region") or {}).get("snippet")) or {}).get("text") or ""
        collected.append((loc, snippet))
    roles = _roles_by_position(len(collected))
    return tuple(
        TaintStep(location=loc, role=role, snippet=snippet)
        for (loc, snippet), role in zip(collected, roles)
    )


def parse_sarif(report_bytes: bytes) -> FindingSet:
    """Parse a SARIF 2.1.0 report.

    Results without any physical location are skipped and counted in the
    returned warnings list rather than failing the whole report.
    """
    data = _decode_json(report_bytes)
    if not isinstance(data, dict) or data.get("version") != "2.1.0":
        raise MalformedReport("expected a SARIF object with version 2.1.0")
    findings: list[Finding] = []
    warnings: list[str] = []
    for run_idx, run in enumerate(data.get("runs") or []):
        driver = (run.get("tool") or {}).get("driver") or {}
        tool_name = driver.get("name") or "sarif"
        rules = {r.get("id"): r for r in (driver.get("rules") or []) if isinstance(r, Mapping)}
        for idx, result in enumerate(run.get("results") or []):
            rule_id = result.get("ruleId") or ""
            rule = rules.get(rule_id) or {}
            loc = _sarif_location(result)
            if loc is None:
                warnings.append(
                    f"run {run_idx} result {idx} ({rule_id or 'unknown rule'}) skipped: no physical location"
                )
                continue
            severity, sev_warning = _sarif_severity(result, rule)
            if sev_warning:
                warnings.append(sev_warning)
            props: dict[str, Any] = {**(rule.get("properties") or {}), **(result.get("properties") or {})}
            rule_name = rule.get("name") or ((rule.get("shortDescription") or {}).get("text")) or rule_id
            tags = (rule.get("properties") or {}).get("tags") or []
            vtype = vulnerability_type_from_metadata(props, tags, fallback=rule_name)
            message = ((result.get("message") or {}).get("text")) or ""
            fp = fingerprint_fields(rule_id, loc.file_path, loc.start_line, vtype)
            findings.append(
                Finding(
                    id=result.get("guid") or f"{rule_id}#{run_idx}.{idx}",
                    rule_id=rule_id,
                    rule_name=rule_name,
                    severity=severity,
                    vulnerability_type=vtype,
                    message=message,
                    location=loc,
                    taint_path=_sarif_taint_path(result),
                    origin_tool=tool_name,
                    fingerprint=fp,
                )
            )
    return FindingSet(tuple(findings), hashlib.sha256(report_bytes).hexdigest(), tuple(warnings))


def _semgrep_location(node: Any) -> tuple[SourceLocation, str] | None:
    """Unwrap a trace location: plain dict, {location, content} pair, or tagged
    ["CliLoc", [loc, content]] form."""
    content = ""
    loc: Any = None
    if isinstance(node, list) and len(node) == 2 and isinstance(node[0], str):
        inner = node[1]
        if isinstance(inner, list) and inner:
            loc = inner[0]
            if len(inner) > 1 and isinstance(inner[1], str):
                content = inner[1]
        elif isinstance(inner, Mapping):
            loc = inner
    elif isinstance(node, Mapping):
        loc = node.get("location", node)
        raw_content = node.get("content")
        if isinstance(raw_content, str):
            content = raw_content
    if not isinstance(loc, Mapping):
        return None
    path = loc.get("path")
    start = loc.get("start") or {}
    end = loc.get("end") or {}
    start_line = start.get("line")
    if not path or not isinstance(start_line, int) or start_line < 1:
        return None
    end_line = end.get("line")
    if not isinstance(end_line, int) or end_line < start_line:
        end_line = start_line
    return (
        SourceLocation(
            file_path=path,
            start_line=start_line,
            end_line=end_line,
            start_col=start.get("col"),
            end_col=end.get("col"),
        ),
        content,
    )


def _semgrep_trace(trace: Mapping[str, Any]) -> tuple[TaintStep, ...]:
    steps: list[TaintStep] = []
    source = _semgrep_location(trace.get("taint_source"))
    if source:
        steps.append(TaintStep(location=source[0], role=StepRole.SOURCE, snippet=source[1]))
    for node in trace.get("intermediate_vars") or []:
        parsed = _semgrep_location(node)
        if parsed:
            steps.append(TaintStep(location=parsed[0], role=StepRole.PROPAGATOR, snippet=parsed[1]))
    sink = _semgrep_location(trace.get("taint_sink"))
    if sink:
        steps.append(TaintStep(location=sink[0], role=StepRole.SINK, snippet=sink[1]))
    return tuple(steps)


def parse_semgrep_json(report_bytes: bytes) -> FindingSet:
    """Parse Semgrep-style JSON (top-level ``results`` array)."""
    data = _decode_json(report_bytes)
    if not isinstance(data, dict) or not isinstance(data.get("results"), list):
        raise MalformedReport("expected a Semgrep-style object with a 'results' array")
    findings: list[Finding] = []
    warnings: list[str] = []
    for idx, result in enumerate(data["results"]):
        if not isinstance(result, Mapping):
            warnings.append(f"result {idx} skipped: not an object")
            continue
        check_id = result.get("check_id") or ""
        path = result.get("path")
        start = result.get("start") or {}
        end = result.get("end") or {}
        start_line = start.get("line")
        if not path or not isinstance(start_line, int) or start_line < 1:
            warnings.append(f"result {idx} ({check_id or 'unknown rule'}) skipped: no location")
            continue
        end_line = end.get("line")
        if not isinstance(end_line, int) or end_line < start_line:
            end_line = start_line
        loc = SourceLocation(
            file_path=path,
            start_line=start_line,
            end_line=end_line,
            start_col=start.get("col"),
            end_col=end.get("col"),
        )
        extra = result.get("extra") or {}
        raw_sev = str(extra.get("severity") or "").upper()
        severity = SEMGREP_SEVERITY.get(raw_sev)
        if severity is None:
            warnings.append(f"unknown severity {raw_sev!r} on {check_id} mapped to medium")
            severity = Severity.MEDIUM
        rule_name = check_id.rsplit(".", 1)[-1] if check_id else ""
        meta = extra.get("metadata") or {}
        vtype = vulnerability_type_from_metadata(meta, [], fallback=rule_name or check_id)
        fp = fingerprint_fields(check_id, loc.file_path, loc.start_line, vtype)
        findings.append(
            Finding(
                id=extra.get("fingerprint") or f"{check_id}#{idx}",
                rule_id=check_id,
                rule_name=rule_name,
                severity=severity,
                vulnerability_type=vtype,
                message=extra.get("message") or "",
                location=loc,
                taint_path=_semgrep_trace(extra.get("dataflow_trace") or {}),
                origin_tool="semgrep",
                fingerprint=fp,
            )
        )
    return FindingSet(tuple(findings), hashlib.sha256(report_bytes).hexdigest(), tuple(warnings))


def normalize(finding_set: FindingSet) -> FindingSet:
    """Canonicalize paths, recompute fingerprints, dedupe (first wins), sort.

    Sorting is by (file_path, start_line, rule_id). Idempotent.
    """
    canon: list[Finding] = []
    for f in finding_set.findings:
        loc = replace(f.location, file_path=canonical_path(f.location.file_path))
        steps = tuple(
            replace(step, location=replace(step.location, file_path=canonical_path(step.location.file_path)))
            for step in f.taint_path
        )
        nf = replace(f, location=loc, taint_path=steps)
        canon.append(replace(nf, fingerprint=fingerprint(nf)))
    deduped: dict[str, Finding] = {}
    for f in canon:
        deduped.setdefault(f.fingerprint, f)
    ordered = sorted(
        deduped.values(),
        key=lambda f: (f.location.file_path, f.location.start_line, f.rule_id),
    )
    return FindingSet(tuple(ordered), finding_set.source_digest, finding_set.warnings)
