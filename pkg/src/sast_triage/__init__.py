"""Hybrid SAST triage toolkit.

Intercepts scanner output, enriches findings with cross-file context, obtains
exploitability verdicts and proof-of-concept exploits from a pluggable
reasoning backend, applies CI gating policy, and records analyst feedback.
"""

from .backend import BackendConfig, BackendResponse, complete, make_backend, scripted_lookup
from .bench import LabelSet, MetricsSummary, derive_metrics, load_labels, score
from .context import (
    CallEdge,
    ContextBundle,
    ContextLimits,
    IndexLimits,
    SymbolDef,
    SymbolIndex,
    build_symbol_index,
    extract_context,
    resolve_callees,
)
from .ingest import (
    Finding,
    FindingSet,
    Severity,
    SourceLocation,
    StepRole,
    TaintStep,
    fingerprint,
    normalize,
    parse_sarif,
    parse_semgrep_json,
)
from .pipeline import (
    GateOutcome,
    PipelineReport,
    PoC,
    PolicyConfig,
    TriageResult,
    Verdict,
    VerdictKind,
    apply_gates,
    generate_poc,
    parse_poc_command,
    parse_verdict,
    run_pipeline,
    triage_finding,
    validate_poc,
)
from .promptkit import (
    GuardReport,
    PromptDocument,
    build_exploit_prompt,
    build_remediation_prompt,
    build_triage_prompt,
    guard_content,
)
from .report import emit_json, emit_sarif_suppressed, load_report, render_markdown
from .rulegen import GeneratedRule, ValidationReport, synthesize_rule, validate_rule
from .server import FeedbackRecord, ReviewServer, list_feedback, record_feedback, serve

__version__ = "0.1.0"
