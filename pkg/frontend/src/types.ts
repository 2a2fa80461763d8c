/** Wire shapes of the review API (GET /api/findings et al.). */

export type VerdictKind = "true_positive" | "false_positive" | "needs_human_review";
export type GuardRisk = "none" | "suspicious" | "high";
export type Severity = "info" | "low" | "medium" | "high" | "critical";
export type PocValidation = "not_attempted" | "validated" | "failed" | "blocked_by_policy";

export interface SourceLocationDto {
  file_path: string;
  start_line: number;
  end_line: number;
  start_col?: number | null;
  end_col?: number | null;
}

export interface TaintStepDto {
  location: SourceLocationDto;
  role: string;
  snippet: string;
}

export interface FindingDto {
  id: string;
  rule_id: string;
  rule_name: string;
  severity: Severity;
  vulnerability_type: string;
  message: string;
  location: SourceLocationDto;
  taint_path: TaintStepDto[];
  origin_tool: string;
  fingerprint: string;
}

export interface VerdictDto {
  kind: VerdictKind;
  reasoning: string;
  confidence?: number | null;
  reason_code?: string | null;
}

export interface PocDto {
  kind: "http_request" | "command_line" | "adb";
  raw_text: string;
  expected_evidence: string;
  parsed_request?: unknown;
  validation: PocValidation;
}

export interface RemediationDto {
  description: string;
  fix_summary: string;
  patched_snippet?: string | null;
}

export interface TriageResultDto {
  finding: FindingDto;
  verdict: VerdictDto;
  prompt_digest: string;
  guard_risk: GuardRisk;
  timestamps: { queued: string; triaged: string; completed: string };
  poc?: PocDto | null;
  remediation?: RemediationDto | null;
}

export interface FeedbackRecordDto {
  timestamp: string;
  fingerprint: string;
  llm_verdict: string;
  analyst_verdict: "true_positive" | "false_positive";
  note: string;
  analyst_id: string;
}

export interface SummaryDto {
  counts: Record<VerdictKind, number>;
  total: number;
  gate: {
    suppressed: string[];
    needs_review: string[];
    build_verdict: "pass" | "fail";
    exit_code: number;
  };
}
