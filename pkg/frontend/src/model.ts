/** View-model mapping plus the filter/sort logic behind the finding table.
 *
 * Default ordering surfaces the review queue first (needs_human_review, then
 * true positives, then false positives), higher severities first within each
 * group, fingerprint as the stable tiebreaker.
 */

import type {
  FeedbackRecordDto,
  GuardRisk,
  Severity,
  TriageResultDto,
  VerdictKind,
} from "./types.js";

export interface TaintStepView {
  file: string;
  line: number;
  role: string;
  snippet: string;
}

export interface FindingView {
  fingerprint: string;
  ruleId: string;
  ruleName: string;
  severity: Severity;
  vulnerabilityType: string;
  file: string;
  line: number;
  message: string;
  verdict: VerdictKind;
  reasonCode: string | null;
  reasoning: string;
  confidence: number | null;
  guardRisk: GuardRisk;
  taintPath: TaintStepView[];
  pocText: string | null;
  pocKind: string | null;
  pocValidation: string | null;
  remediationDescription: string | null;
  remediationFix: string | null;
  patchedSnippet: string | null;
  analystVerdict: "true_positive" | "false_positive" | null;
  analystNote: string | null;
}

const VERDICT_ORDER: Record<VerdictKind, number> = {
  needs_human_review: 0,
  true_positive: 1,
  false_positive: 2,
};

const SEVERITY_ORDER: Record<Severity, number> = {
  critical: 0,
  high: 1,
  medium: 2,
  low: 3,
  info: 4,
};

export function toFindingView(dto: TriageResultDto): FindingView {
  return {
    fingerprint: dto.finding.fingerprint,
    ruleId: dto.finding.rule_id,
    ruleName: dto.finding.rule_name,
    severity: dto.finding.severity,
    vulnerabilityType: dto.finding.vulnerability_type,
    file: dto.finding.location.file_path,
    line: dto.finding.location.start_line,
    message: dto.finding.message,
    verdict: dto.verdict.kind,
    reasonCode: dto.verdict.reason_code ?? null,
    reasoning: dto.verdict.reasoning,
    confidence: dto.verdict.confidence ?? null,
    guardRisk: dto.guard_risk,
    taintPath: dto.finding.taint_path.map((step) => ({
      file: step.location.file_path,
      line: step.location.start_line,
      role: step.role,
      snippet: step.snippet,
    })),
    pocText: dto.poc?.raw_text ?? null,
    pocKind: dto.poc?.kind ?? null,
    pocValidation: dto.poc?.validation ?? null,
    remediationDescription: dto.remediation?.description ?? null,
    remediationFix: dto.remediation?.fix_summary ?? null,
    patchedSnippet: dto.remediation?.patched_snippet ?? null,
    analystVerdict: null,
    analystNote: null,
  };
}

/** Fold the append-only feedback log into the views; the latest record per
 * fingerprint wins, machine verdicts stay untouched. */
export function applyFeedback(views: FindingView[], records: FeedbackRecordDto[]): FindingView[] {
  const latest = new Map<string, FeedbackRecordDto>();
  for (const record of records) latest.set(record.fingerprint, record);
  return views.map((view) => {
    const record = latest.get(view.fingerprint);
    if (!record) return view;
    return { ...view, analystVerdict: record.analyst_verdict, analystNote: record.note };
  });
}

export interface FindingFilter {
  verdict?: VerdictKind | "all";
  severity?: Severity | "all";
  guardRisk?: GuardRisk | "all";
}

export function filterFindings(views: FindingView[], filter: FindingFilter): FindingView[] {
  return views.filter((view) => {
    if (filter.verdict && filter.verdict !== "all" && view.verdict !== filter.verdict) return false;
    if (filter.severity && filter.severity !== "all" && view.severity !== filter.severity)
      return false;
    if (filter.guardRisk && filter.guardRisk !== "all" && view.guardRisk !== filter.guardRisk)
      return false;
    return true;
  });
}

export function sortFindings(views: FindingView[]): FindingView[] {
  return [...views].sort((a, b) => {
    const byVerdict = VERDICT_ORDER[a.verdict] - VERDICT_ORDER[b.verdict];
    if (byVerdict !== 0) return byVerdict;
    const bySeverity = SEVERITY_ORDER[a.severity] - SEVERITY_ORDER[b.severity];
    if (bySeverity !== 0) return bySeverity;
    return a.fingerprint < b.fingerprint ? -1 : a.fingerprint > b.fingerprint ? 1 : 0;
  });
}

/** Client-side gate for the feedback form: a verdict must be chosen and the
 * note must fit the server's limit. */
export function validateSubmission(
  verdict: string | null,
  note: string,
): { ok: true } | { ok: false; error: string } {
  if (verdict !== "true_positive" && verdict !== "false_positive") {
    return { ok: false, error: "choose a verdict before submitting" };
  }
  if (note.length > 2000) {
    return { ok: false, error: "note exceeds 2000 characters" };
  }
  return { ok: true };
}

export function verdictBadge(view: FindingView): string {
  switch (view.verdict) {
    case "true_positive":
      return "TRUE POSITIVE";
    case "false_positive":
      return "FALSE POSITIVE";
    case "needs_human_review":
      return `NEEDS REVIEW${view.reasonCode ? ` (${view.reasonCode})` : ""}`;
  }
}
