"""Triage orchestration: verdict parsing, PoC generation/validation, CI gates.

A third verdict state (needs_human_review) exists beyond the backend's binary
contract: parsing ambiguity, low confidence, injection risk, and backend
failures must never silently turn into suppressions. Every reason is carried
as a machine-readable reason code.

PoC execution is allowlist-gated (loopback by default), GET/POST only, and
opt-in; command_line and adb payloads are parsed but never executed.

When the scripted backend drives a run, timestamps come from a fixed-epoch
logical clock keyed to the finding's position, which makes report bytes
reproducible across runs.
"""

from __future__ import annotations

import enum
import json
import re
import shlex
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from datetime import datetime, timedelta, timezone
from pathlib import Path
from typing import TYPE_CHECKING, Any, Callable, Mapping, Sequence
from urllib.parse import urlsplit

import requests

from .backend import Backend, BackendResponse, make_backend
from .canonical import canonical_json_bytes, sha256_hex
from .context import ContextBundle, build_symbol_index, extract_context
from .errors import (
    BackendError,
    MalformedReport,
    NoUrl,
    OversizePrompt,
    TicketSinkFailure,
    UnsupportedMethod,
    VerdictMismatch,
)
from .ingest import (
    Finding,
    FindingSet,
    Severity,
    normalize,
    parse_sarif,
    parse_semgrep_json,
)
from .promptkit import (
    DEFAULT_MAX_PROMPT_BYTES,
    RISK_HIGH,
    build_exploit_prompt,
    build_remediation_prompt,
    build_triage_prompt,
)

if TYPE_CHECKING:  # pragma: no cover - import cycle guard
    from .config import AppConfig

try:
    from importlib.metadata import version as _pkg_version

    TOOL_VERSION = _pkg_version("sast-triage")
except Exception:  # pragma: no cover - uninstalled tree
    TOOL_VERSION = "0.1.0"

POC_TIMEOUT_SECONDS = 10.0

REASON_AMBIGUOUS = "ambiguous_verdict"
REASON_INJECTION = "injection_risk"
REASON_LOW_CONFIDENCE = "low_confidence"
REASON_BACKEND = "backend_error"
REASON_OVERSIZE = "oversize_prompt"


class VerdictKind(str, enum.Enum):
    TRUE_POSITIVE = "true_positive"
    FALSE_POSITIVE = "false_positive"
    NEEDS_HUMAN_REVIEW = "needs_human_review"


class PoCValidation(str, enum.Enum):
    NOT_ATTEMPTED = "not_attempted"
    VALIDATED = "validated"
    FAILED = "failed"
    BLOCKED_BY_POLICY = "blocked_by_policy"


@dataclass(frozen=True)
class Verdict:
    kind: VerdictKind
    reasoning: str
    confidence: float | None = None
    reason_code: str | None = None

    def __post_init__(self) -> None:
        if self.kind is VerdictKind.NEEDS_HUMAN_REVIEW and not self.reason_code:
            raise ValueError("needs_human_review verdicts carry a reason code")
        if self.kind is not VerdictKind.NEEDS_HUMAN_REVIEW and not self.reasoning:
            raise ValueError("true/false positive verdicts carry non-empty reasoning")

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": self.kind.value,
            "reasoning": self.reasoning,
            "confidence": self.confidence,
            "reason_code": self.reason_code,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "Verdict":
        return cls(
            kind=VerdictKind(d["kind"]),
            reasoning=d["reasoning"],
            confidence=d.get("confidence"),
            reason_code=d.get("reason_code"),
        )


@dataclass(frozen=True)
class HttpRequestSpec:
    method: str
    url: str
    headers: tuple[tuple[str, str], ...] = ()
    body: bytes | None = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "method": self.method,
            "url": self.url,
            "headers": [[k, v] for k, v in self.headers],
            "body": self.body.decode("utf-8", errors="replace") if self.body is not None else None,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "HttpRequestSpec":
        body = d.get("body")
        return cls(
            method=d["method"],
            url=d["url"],
            headers=tuple((k, v) for k, v in d.get("headers", [])),
            body=body.encode("utf-8") if isinstance(body, str) else None,
        )


@dataclass(frozen=True)
class PoC:
    kind: str  # "http_request" | "command_line" | "adb"
    raw_text: str
    expected_evidence: str
    parsed_request: HttpRequestSpec | None = None
    validation: PoCValidation = PoCValidation.NOT_ATTEMPTED

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": self.kind,
            "raw_text": self.raw_text,
            "expected_evidence": self.expected_evidence,
            "parsed_request": self.parsed_request.to_dict() if self.parsed_request else None,
            "validation": self.validation.value,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "PoC":
        parsed = d.get("parsed_request")
        return cls(
            kind=d["kind"],
            raw_text=d["raw_text"],
            expected_evidence=d.get("expected_evidence", ""),
            parsed_request=HttpRequestSpec.from_dict(parsed) if parsed else None,
            validation=PoCValidation(d.get("validation", "not_attempted")),
        )


@dataclass(frozen=True)
class RemediationAdvice:
    description: str
    fix_summary: str
    patched_snippet: str | None = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "description": self.description,
            "fix_summary": self.fix_summary,
            "patched_snippet": self.patched_snippet,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "RemediationAdvice":
        return cls(
            description=d["description"],
            fix_summary=d.get("fix_summary", ""),
            patched_snippet=d.get("patched_snippet"),
        )


@dataclass(frozen=True)
class Timestamps:
    queued: str
    triaged: str
    completed: str

    def to_dict(self) -> dict[str, str]:
        return {"queued": self.queued, "triaged": self.triaged, "completed": self.completed}

    @classmethod
    def from_dict(cls, d: Mapping[str, str]) -> "Timestamps":
        return cls(queued=d["queued"], triaged=d["triaged"], completed=d["completed"])


@dataclass(frozen=True)
class TriageResult:
    finding: Finding
    verdict: Verdict
    prompt_digest: str
    guard_risk: str
    timestamps: Timestamps
    poc: PoC | None = None
    remediation: RemediationAdvice | None = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "finding": self.finding.to_dict(),
            "verdict": self.verdict.to_dict(),
            "prompt_digest": self.prompt_digest,
            "guard_risk": self.guard_risk,
            "timestamps": self.timestamps.to_dict(),
            "poc": self.poc.to_dict() if self.poc else None,
            "remediation": self.remediation.to_dict() if self.remediation else None,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "TriageResult":
        return cls(
            finding=Finding.from_dict(d["finding"]),
            verdict=Verdict.from_dict(d["verdict"]),
            prompt_digest=d["prompt_digest"],
            guard_risk=d["guard_risk"],
            timestamps=Timestamps.from_dict(d["timestamps"]),
            poc=PoC.from_dict(d["poc"]) if d.get("poc") else None,
            remediation=RemediationAdvice.from_dict(d["remediation"]) if d.get("remediation") else None,
        )


@dataclass(frozen=True)
class PolicyConfig:
    fail_severity_threshold: Severity = Severity.HIGH
    auto_suppress_fp: bool = True
    poc_allowed_hosts: tuple[str, ...] = ("127.0.0.1", "localhost", "::1")
    ticket_sink: str = "file"  # "file" | "webhook"
    webhook_url: str | None = None
    confidence_floor: float = 0.0
    validate_poc: bool = False

    def __post_init__(self) -> None:
        for host in self.poc_allowed_hosts:
            if "*" in host:
                raise ValueError(f"wildcard hosts are not allowed in the PoC allowlist: {host!r}")
        if self.ticket_sink not in ("file", "webhook"):
            raise ValueError(f"unknown ticket sink {self.ticket_sink!r}")

    def to_dict(self) -> dict[str, Any]:
        return {
            "fail_severity_threshold": self.fail_severity_threshold.value,
            "auto_suppress_fp": self.auto_suppress_fp,
            "poc_allowed_hosts": list(self.poc_allowed_hosts),
            "ticket_sink": self.ticket_sink,
            "webhook_url": self.webhook_url,
            "confidence_floor": self.confidence_floor,
            "validate_poc": self.validate_poc,
        }


@dataclass(frozen=True)
class TicketRecord:
    fingerprint: str
    rule_id: str
    rule_name: str
    severity: str
    vulnerability_type: str
    file_path: str
    start_line: int
    reasoning: str
    confidence: float | None
    poc: dict[str, Any] | None
    remediation: dict[str, Any] | None
    created_at: str

    def to_dict(self) -> dict[str, Any]:
        return {
            "fingerprint": self.fingerprint,
            "rule_id": self.rule_id,
            "rule_name": self.rule_name,
            "severity": self.severity,
            "vulnerability_type": self.vulnerability_type,
            "file_path": self.file_path,
            "start_line": self.start_line,
            "reasoning": self.reasoning,
            "confidence": self.confidence,
            "poc": self.poc,
            "remediation": self.remediation,
            "created_at": self.created_at,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "TicketRecord":
        return cls(**{k: d[k] for k in (
            "fingerprint", "rule_id", "rule_name", "severity", "vulnerability_type",
            "file_path", "start_line", "reasoning", "confidence", "poc", "remediation",
            "created_at",
        )})


@dataclass(frozen=True)
class GateOutcome:
    suppressed: tuple[str, ...]
    tickets: tuple[TicketRecord, ...]
    needs_review: tuple[str, ...]
    build_verdict: str  # "pass" | "fail"
    exit_code: int
    delivery_errors: tuple[str, ...] = ()

    def to_dict(self) -> dict[str, Any]:
        return {
            "suppressed": list(self.suppressed),
            "tickets": [t.to_dict() for t in self.tickets],
            "needs_review": list(self.needs_review),
            "build_verdict": self.build_verdict,
            "exit_code": self.exit_code,
            "delivery_errors": list(self.delivery_errors),
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "GateOutcome":
        return cls(
            suppressed=tuple(d["suppressed"]),
            tickets=tuple(TicketRecord.from_dict(t) for t in d["tickets"]),
            needs_review=tuple(d["needs_review"]),
            build_verdict=d["build_verdict"],
            exit_code=d["exit_code"],
            delivery_errors=tuple(d.get("delivery_errors", [])),
        )


@dataclass(frozen=True)
class PipelineReport:
    results: tuple[TriageResult, ...]
    gate: GateOutcome
    tool_versions: dict[str, str]
    config_digest: str
    warnings: tuple[str, ...] = ()

    def to_dict(self) -> dict[str, Any]:
        return {
            "schema_version": "1",
            "results": [r.to_dict() for r in self.results],
            "gate": self.gate.to_dict(),
            "tool_versions": self.tool_versions,
            "config_digest": self.config_digest,
            "warnings": list(self.warnings),
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "PipelineReport":
        return cls(
            results=tuple(TriageResult.from_dict(r) for r in d["results"]),
            gate=GateOutcome.from_dict(d["gate"]),
            tool_versions=dict(d["tool_versions"]),
            config_digest=d["config_digest"],
            warnings=tuple(d.get("warnings", [])),
        )


class WallClock:
    def now(self) -> str:
        return datetime.now(timezone.utc).isoformat()


class LogicalClock:
    """Fixed-epoch clock, +1s per stamp. Keyed to a slot so concurrent
    findings stamp disjoint, schedule-independent times."""

    _EPOCH = datetime(2000, 1, 1, tzinfo=timezone.utc)

    def __init__(self, slot: int, stamps_per_slot: int = 4):
        self._t = self._EPOCH + timedelta(seconds=slot * stamps_per_slot)

    def now(self) -> str:
        current = self._t
        self._t = current + timedelta(seconds=1)
        return current.isoformat()


def _first_json_object(text: str, required_key: str) -> dict[str, Any] | None:
    try:
        whole = json.loads(text)
        if isinstance(whole, dict) and required_key in whole:
            return whole
    except ValueError:
        pass
    starts = [m.start() for m in re.finditer(r"\{", text)][:20]
    for start in starts:
        depth = 0
        for i in range(start, len(text)):
            if text[i] == "{":
                depth += 1
            elif text[i] == "}":
                depth -= 1
                if depth == 0:
                    try:
                        obj = json.loads(text[start : i + 1])
                    except ValueError:
                        break
                    if isinstance(obj, dict) and required_key in obj:
                        return obj
                    break
    return None


def parse_verdict(response: BackendResponse) -> Verdict:
    """Extract a verdict from backend text.

    Primary path: a JSON object matching the triage contract. Fallback: a
    case-insensitive scan of the first 400 characters for exactly one of the
    phrases "true positive" / "false positive". Both or neither yields
    needs_human_review with the ambiguous_verdict reason; ambiguity is a
    verdict, not an error.
    """
    text = response.raw_text or ""
    obj = _first_json_object(text, "verdict")
    if obj is not None:
        raw_kind = str(obj.get("verdict", "")).strip().lower()
        if raw_kind in (VerdictKind.TRUE_POSITIVE.value, VerdictKind.FALSE_POSITIVE.value):
            reasoning = str(obj.get("reasoning") or "").strip() or text.strip()
            confidence = obj.get("confidence")
            if isinstance(confidence, (int, float)) and not isinstance(confidence, bool):
                confidence = min(1.0, max(0.0, float(confidence)))
            else:
                confidence = None
            return Verdict(kind=VerdictKind(raw_kind), reasoning=reasoning, confidence=confidence)
    head = text[:400].lower()
    has_tp = "true positive" in head or "true_positive" in head
    has_fp = "false positive" in head or "false_positive" in head
    if has_tp != has_fp:
        kind = VerdictKind.TRUE_POSITIVE if has_tp else VerdictKind.FALSE_POSITIVE
        return Verdict(kind=kind, reasoning=text.strip() or "(empty response)")
    return Verdict(
        kind=VerdictKind.NEEDS_HUMAN_REVIEW,
        reasoning=text.strip(),
        reason_code=REASON_AMBIGUOUS,
    )


def triage_finding(
    finding: Finding,
    bundle: ContextBundle,
    backend: Backend,
    policy: PolicyConfig,
    *,
    clock: WallClock | LogicalClock | None = None,
    max_prompt_bytes: int = DEFAULT_MAX_PROMPT_BYTES,
) -> TriageResult:
    """Triage one finding. High guard risk short-circuits to human review
    without ever calling the backend; backend failures degrade to review,
    never to a dropped finding."""
    clock = clock or WallClock()
    queued = clock.now()
    try:
        doc = build_triage_prompt(finding, bundle, max_bytes=max_prompt_bytes)
    except OversizePrompt as exc:
        stamp = clock.now()
        return TriageResult(
            finding=finding,
            verdict=Verdict(
                kind=VerdictKind.NEEDS_HUMAN_REVIEW,
                reasoning=str(exc),
                reason_code=REASON_OVERSIZE,
            ),
            prompt_digest="",
            guard_risk="none",
            timestamps=Timestamps(queued=queued, triaged=stamp, completed=clock.now()),
        )
    if doc.guard.risk == RISK_HIGH:
        verdict = Verdict(
            kind=VerdictKind.NEEDS_HUMAN_REVIEW,
            reasoning="prompt content matched injection patterns: "
            + ", ".join(sorted({f.pattern_id for f in doc.guard.flags})),
            reason_code=REASON_INJECTION,
        )
    else:
        try:
            verdict = parse_verdict(backend.complete(doc))
        except BackendError as exc:
            verdict = Verdict(
                kind=VerdictKind.NEEDS_HUMAN_REVIEW,
                reasoning=f"backend failure: {type(exc).__name__}: {exc}",
                reason_code=REASON_BACKEND,
            )
    if (
        verdict.kind is not VerdictKind.NEEDS_HUMAN_REVIEW
        and verdict.confidence is not None
        and verdict.confidence < policy.confidence_floor
    ):
        verdict = Verdict(
            kind=VerdictKind.NEEDS_HUMAN_REVIEW,
            reasoning=verdict.reasoning,
            confidence=verdict.confidence,
            reason_code=REASON_LOW_CONFIDENCE,
        )
    triaged = clock.now()
    return TriageResult(
        finding=finding,
        verdict=verdict,
        prompt_digest=doc.render_digest,
        guard_risk=doc.guard.risk,
        timestamps=Timestamps(queued=queued, triaged=triaged, completed=clock.now()),
    )


def parse_poc_command(text: str, warnings: list[str] | None = None) -> HttpRequestSpec:
    """Parse a curl-style invocation or raw URL into a request spec.

    Recognizes -X/--request, -H/--header, and the -d/--data family (implies
    POST when no method is given). Unknown flags are ignored with a warning.
    """
    warnings = warnings if warnings is not None else []
    s = text.strip()
    if not s:
        raise NoUrl("empty PoC text")
    first_token = s.split(None, 1)[0]
    if first_token.startswith(("http://", "https://")):
        return _finish_spec("GET", first_token, {}, None)
    try:
        tokens = shlex.split(s)
    except ValueError:
        tokens = s.split()
    if not tokens or tokens[0] != "curl":
        raise NoUrl("text is neither a curl invocation nor a raw URL")
    method: str | None = None
    headers: dict[str, str] = {}
    body: bytes | None = None
    bare: list[str] = []
    i = 1
    while i < len(tokens):
        tok = tokens[i]
        if tok in ("-X", "--request"):
            i += 1
            if i < len(tokens):
                method = tokens[i].upper()
        elif tok in ("-H", "--header"):
            i += 1
            if i < len(tokens) and ":" in tokens[i]:
                name, _, value = tokens[i].partition(":")
                headers[name.strip()] = value.strip()
        elif tok in ("-d", "--data", "--data-raw", "--data-binary", "--data-urlencode"):
            i += 1
            if i < len(tokens):
                body = tokens[i].encode("utf-8")
        elif tok.startswith("-"):
            warnings.append(f"ignored unknown curl flag {tok!r}")
        else:
            bare.append(tok)
        i += 1
    if method is None:
        method = "POST" if body is not None else "GET"
    if method not in ("GET", "POST"):
        raise UnsupportedMethod(f"only GET and POST are executable, got {method}")
    url = next((b for b in bare if "://" in b), None)
    if url is None and bare:
        url = bare[0]
    if url is None:
        raise NoUrl("no URL found in PoC command")
    for extra in bare:
        if extra != url:
            warnings.append(f"ignored extra token {extra!r}")
    return _finish_spec(method, url, headers, body)


def _finish_spec(method: str, url: str, headers: dict[str, str], body: bytes | None) -> HttpRequestSpec:
    parsed = urlsplit(url)
    if parsed.scheme not in ("http", "https") or not parsed.netloc:
        raise NoUrl(f"not an http(s) URL: {url!r}")
    return HttpRequestSpec(method=method, url=url, headers=tuple(headers.items()), body=body)


def _parse_exploit_response(text: str) -> tuple[str, str]:
    obj = _first_json_object(text, "command")
    if obj is not None:
        return str(obj.get("command", "")).strip(), str(obj.get("expected_evidence", "")).strip()
    evidence = ""
    m = re.search(r"(?im)^\s*expected_evidence\s*[:=]\s*(.+)$", text)
    if m:
        evidence = m.group(1).strip()
    fenced = re.search(r"```[A-Za-z0-9_-]*\n(.*?)```", text, re.DOTALL)
    if fenced:
        return fenced.group(1).strip(), evidence
    command = re.sub(r"(?im)^\s*expected_evidence\s*[:=].*$", "", text).strip()
    return command, evidence


def generate_poc(
    result: TriageResult,
    bundle: ContextBundle,
    backend: Backend,
    warnings: list[str] | None = None,
) -> PoC:
    """Ask the backend for an exploit and classify the answer.

    curl-style output parses into an executable request spec; ``adb``
    commands are recorded but never executable; anything else is stored as a
    command line. Validation starts as not_attempted.
    """
    if result.verdict.kind is not VerdictKind.TRUE_POSITIVE:
        raise VerdictMismatch(
            f"PoC generation requires a true_positive verdict, got {result.verdict.kind.value}"
        )
    warnings = warnings if warnings is not None else []
    doc = build_exploit_prompt(result.finding, bundle, result.verdict)
    response = backend.complete(doc)
    command, evidence = _parse_exploit_response(response.raw_text)
    first_line = command.splitlines()[0].strip() if command.strip() else ""
    if first_line.startswith("adb"):
        return PoC(kind="adb", raw_text=command, expected_evidence=evidence)
    if first_line.startswith(("curl", "http://", "https://")):
        try:
            spec = parse_poc_command(command, warnings)
        except (NoUrl, UnsupportedMethod) as exc:
            warnings.append(f"unparseable PoC for {result.finding.fingerprint}: {exc}")
            return PoC(kind="command_line", raw_text=command, expected_evidence=evidence)
        return PoC(kind="http_request", raw_text=command, expected_evidence=evidence, parsed_request=spec)
    if not command:
        warnings.append(f"unparseable PoC for {result.finding.fingerprint}: empty command")
    return PoC(kind="command_line", raw_text=command, expected_evidence=evidence)


def default_poc_transport(spec: HttpRequestSpec, timeout: float) -> tuple[int, str]:
    resp = requests.request(
        spec.method,
        spec.url,
        headers=dict(spec.headers),
        data=spec.body,
        timeout=timeout,
        allow_redirects=False,
    )
    return resp.status_code, resp.text


def validate_poc(
    spec: HttpRequestSpec,
    expected_evidence: str,
    policy: PolicyConfig,
    *,
    transport: Callable[[HttpRequestSpec, float], tuple[int, str]] | None = None,
    transcript: list[str] | None = None,
) -> PoCValidation:
    """Execute an http_request PoC against an allowlisted host.

    Hosts outside policy.poc_allowed_hosts are blocked before any network
    I/O. Validated means status < 500 and the body contains the expected
    evidence as an exact substring; anything else, including transport
    failures, is the failed outcome with a captured transcript.
    """
    transcript = transcript if transcript is not None else []
    host = (urlsplit(spec.url).hostname or "").lower()
    allowed = {h.lower() for h in policy.poc_allowed_hosts}
    if host not in allowed:
        transcript.append(f"blocked: host {host!r} not in allowlist {sorted(allowed)}")
        return PoCValidation.BLOCKED_BY_POLICY
    transport = transport or default_poc_transport
    transcript.append(f"request: {spec.method} {spec.url}")
    try:
        status, body_text = transport(spec, POC_TIMEOUT_SECONDS)
    except Exception as exc:
        transcript.append(f"transport error: {type(exc).__name__}: {exc}")
        return PoCValidation.FAILED
    transcript.append(f"status: {status}")
    transcript.append(f"body[:200]: {body_text[:200]!r}")
    if status < 500 and expected_evidence in body_text:
        return PoCValidation.VALIDATED
    return PoCValidation.FAILED


def _ticket_from_result(result: TriageResult) -> TicketRecord:
    f = result.finding
    return TicketRecord(
        fingerprint=f.fingerprint,
        rule_id=f.rule_id,
        rule_name=f.rule_name,
        severity=f.severity.value,
        vulnerability_type=f.vulnerability_type,
        file_path=f.location.file_path,
        start_line=f.location.start_line,
        reasoning=result.verdict.reasoning,
        confidence=result.verdict.confidence,
        poc=result.poc.to_dict() if result.poc else None,
        remediation=result.remediation.to_dict() if result.remediation else None,
        created_at=result.timestamps.completed,
    )


def default_webhook_post(url: str, payload: dict[str, Any]) -> None:
    resp = requests.post(url, json=payload, timeout=10)
    resp.raise_for_status()


def apply_gates(
    results: Sequence[TriageResult],
    policy: PolicyConfig,
    *,
    out_dir: Path | str | None = None,
    webhook_post: Callable[[str, dict[str, Any]], None] | None = None,
) -> GateOutcome:
    """Route verdicts to suppressions, tickets, or the review queue.

    Every result lands in exactly one bucket. The build fails (exit 1) iff
    some true positive meets the severity threshold; ticket-delivery failures
    yield exit 2 with file-sink tickets retained on disk for retry.
    """
    ordered = sorted(results, key=lambda r: r.finding.fingerprint)
    suppressed: list[str] = []
    tickets: list[TicketRecord] = []
    review: list[str] = []
    for r in ordered:
        kind = r.verdict.kind
        if kind is VerdictKind.FALSE_POSITIVE and policy.auto_suppress_fp:
            suppressed.append(r.finding.fingerprint)
        elif kind is VerdictKind.TRUE_POSITIVE:
            tickets.append(_ticket_from_result(r))
        else:
            review.append(r.finding.fingerprint)
    threshold = policy.fail_severity_threshold.rank
    failing = any(
        r.verdict.kind is VerdictKind.TRUE_POSITIVE and r.finding.severity.rank >= threshold
        for r in ordered
    )
    exit_code = 1 if failing else 0
    delivery_errors: list[str] = []
    if out_dir is not None and tickets:
        target = Path(out_dir)
        try:
            target.mkdir(parents=True, exist_ok=True)
            for ticket in tickets:
                path = target / f"ticket-{ticket.fingerprint}.json"
                path.write_text(
                    json.dumps(ticket.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
                )
        except OSError as exc:
            delivery_errors.append(f"file sink failure: {exc}")
        if policy.ticket_sink == "webhook" and policy.webhook_url:
            post = webhook_post or default_webhook_post
            for ticket in tickets:
                try:
                    post(policy.webhook_url, ticket.to_dict())
                except Exception as exc:
                    delivery_errors.append(
                        f"webhook failure for {ticket.fingerprint}: {type(exc).__name__}"
                    )
        if delivery_errors:
            exit_code = 2
    return GateOutcome(
        suppressed=tuple(suppressed),
        tickets=tuple(tickets),
        needs_review=tuple(review),
        build_verdict="fail" if failing else "pass",
        exit_code=exit_code,
        delivery_errors=tuple(delivery_errors),
    )


def parse_remediation(text: str) -> RemediationAdvice | None:
    obj = _first_json_object(text, "description")
    if obj is not None and str(obj.get("description", "")).strip():
        return RemediationAdvice(
            description=str(obj["description"]).strip(),
            fix_summary=str(obj.get("fix_summary", "")).strip(),
            patched_snippet=obj.get("patched_snippet"),
        )
    stripped = text.strip()
    if not stripped:
        return None
    return RemediationAdvice(
        description=stripped,
        fix_summary=stripped.splitlines()[0][:120],
    )


def sniff_and_parse(raw: bytes) -> FindingSet:
    """Route report bytes to the right parser: SARIF when a 'runs' array is
    present, Semgrep-style when 'results' is."""
    try:
        data = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, ValueError) as exc:
        raise MalformedReport(f"report is not UTF-8 JSON: {exc}") from exc
    if isinstance(data, dict) and "runs" in data:
        return parse_sarif(raw)
    if isinstance(data, dict) and "results" in data:
        return parse_semgrep_json(raw)
    raise MalformedReport("report is neither SARIF 2.1.0 nor Semgrep-style JSON")


def run_pipeline(
    report_path: Path | str,
    repo_root: Path | str,
    config: "AppConfig",
    *,
    out_dir: Path | str | None = None,
    validate: bool | None = None,
    transport: Callable[[HttpRequestSpec, float], tuple[int, str]] | None = None,
    webhook_post: Callable[[str, dict[str, Any]], None] | None = None,
) -> PipelineReport:
    """End-to-end run: ingest, index, triage each finding with bounded
    parallelism, gate, and assemble a deterministic report (sorted by
    fingerprint regardless of completion order)."""
    raw = Path(report_path).read_bytes()
    finding_set = normalize(sniff_and_parse(raw))
    index = build_symbol_index(repo_root, config.limits.index_limits())
    backend = make_backend(config.backend)
    policy = config.policy
    deterministic = config.backend.kind == "scripted"
    do_validate = policy.validate_poc if validate is None else validate

    warnings: dict[int, list[str]] = {}
    head_warnings = list(finding_set.warnings) + list(index.warnings)

    def work(item: tuple[int, Finding]) -> tuple[int, TriageResult]:
        idx, finding = item
        local: list[str] = []
        clock = LogicalClock(idx) if deterministic else WallClock()
        bundle = extract_context(finding, index, config.limits.context_limits())
        local.extend(f"{finding.fingerprint}: {w}" for w in bundle.warnings)
        result = triage_finding(
            finding,
            bundle,
            backend,
            policy,
            clock=clock,
            max_prompt_bytes=config.limits.max_prompt_bytes,
        )
        if result.verdict.kind is VerdictKind.TRUE_POSITIVE:
            poc = None
            remediation = None
            try:
                poc = generate_poc(result, bundle, backend, local)
            except BackendError as exc:
                local.append(f"{finding.fingerprint}: PoC generation failed: {type(exc).__name__}")
            if (
                poc is not None
                and do_validate
                and poc.kind == "http_request"
                and poc.parsed_request is not None
            ):
                transcript: list[str] = []
                outcome = validate_poc(
                    poc.parsed_request,
                    poc.expected_evidence,
                    policy,
                    transport=transport,
                    transcript=transcript,
                )
                poc = replace(poc, validation=outcome)
                if outcome is PoCValidation.FAILED:
                    local.append(
                        f"{finding.fingerprint}: PoC validation failed: " + " | ".join(transcript)
                    )
            try:
                rem_doc = build_remediation_prompt(finding, bundle, result.verdict)
                remediation = parse_remediation(backend.complete(rem_doc).raw_text)
            except BackendError as exc:
                local.append(f"{finding.fingerprint}: remediation failed: {type(exc).__name__}")
            result = replace(result, poc=poc, remediation=remediation)
        warnings[idx] = local
        return idx, result

    indexed = list(enumerate(finding_set.findings))
    results: list[TriageResult] = []
    if indexed:
        max_workers = max(1, config.backend.max_parallel)
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            for _idx, result in sorted(pool.map(work, indexed), key=lambda pair: pair[0]):
                results.append(result)
    results.sort(key=lambda r: r.finding.fingerprint)

    gate = apply_gates(results, policy, out_dir=out_dir, webhook_post=webhook_post)
    flat_warnings = head_warnings + [w for idx in sorted(warnings) for w in warnings[idx]]
    return PipelineReport(
        results=tuple(results),
        gate=gate,
        tool_versions={"sast-triage": TOOL_VERSION, "python": _python_version()},
        config_digest=config.digest(),
        warnings=tuple(flat_warnings),
    )


def _python_version() -> str:
    import platform

    return platform.python_version()
