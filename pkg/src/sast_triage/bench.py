"""Score pipeline output against ground-truth labels.

Recall uses an external ground_truth_total denominator rather than the
labeled-finding count: some real vulnerabilities may have produced no finding
at all, and scoring must account for them. Precision is tp/(tp+fp) with an
undefined marker (None) when nothing was ticketed; f1 is the harmonic mean of
the unrounded precision and recall. Reported values round to 3 decimals.

needs_human_review findings are excluded from precision by default; the
``nhr_as_fp`` flag folds them into fp for worst-case scoring.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping

from .errors import MalformedLabels, UnknownLabelValue
from .pipeline import PipelineReport

LABEL_VULNERABLE = "vulnerable"
LABEL_BENIGN = "benign"


@dataclass(frozen=True)
class LabelSet:
    labels: Mapping[str, str]
    ground_truth_total: int


@dataclass(frozen=True)
class MetricsSummary:
    findings_total: int
    tp: int
    fp: int
    precision: float | None
    recall: float
    f1: float | None
    tp_confirmed: int = 0
    fp_suppressed: int = 0
    missed_vulnerable_suppressed: int = 0
    benign_ticketed: int = 0
    nhr_count: int = 0
    unlabeled: int = 0
    warnings: tuple[str, ...] = ()

    def to_dict(self) -> dict[str, Any]:
        return {
            "findings_total": self.findings_total,
            "tp": self.tp,
            "fp": self.fp,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "tp_confirmed": self.tp_confirmed,
            "fp_suppressed": self.fp_suppressed,
            "missed_vulnerable_suppressed": self.missed_vulnerable_suppressed,
            "benign_ticketed": self.benign_ticketed,
            "nhr_count": self.nhr_count,
            "unlabeled": self.unlabeled,
            "warnings": list(self.warnings),
        }


def load_labels(path: Path | str) -> LabelSet:
    """Load {ground_truth_total, labels: {fingerprint: vulnerable|benign}}."""
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise MalformedLabels(f"cannot load labels: {exc}") from exc
    if not isinstance(data, dict) or "labels" not in data or "ground_truth_total" not in data:
        raise MalformedLabels("labels file requires 'ground_truth_total' and 'labels'")
    total = data["ground_truth_total"]
    if not isinstance(total, int) or total < 1:
        raise MalformedLabels(f"ground_truth_total must be a positive integer, got {total!r}")
    labels = data["labels"]
    if not isinstance(labels, dict):
        raise MalformedLabels("'labels' must be an object keyed by fingerprint")
    for fp, value in labels.items():
        if value not in (LABEL_VULNERABLE, LABEL_BENIGN):
            raise UnknownLabelValue(f"label for {fp} must be 'vulnerable' or 'benign', got {value!r}")
    return LabelSet(labels=dict(labels), ground_truth_total=total)


def derive_metrics(tp: int, fp: int, ground_truth_total: int, findings_total: int | None = None) -> MetricsSummary:
    """Precision, recall, f1 from integer counts, rounded to 3 decimals."""
    if tp < 0 or fp < 0:
        raise ValueError("tp and fp must be non-negative")
    if ground_truth_total < 1:
        raise ValueError("ground_truth_total must be at least 1 to score recall")
    precision = tp / (tp + fp) if (tp + fp) > 0 else None
    recall = tp / ground_truth_total
    f1 = None
    if precision is not None and (precision + recall) > 0:
        f1 = 2 * precision * recall / (precision + recall)
    return MetricsSummary(
        findings_total=findings_total if findings_total is not None else tp + fp,
        tp=tp,
        fp=fp,
        precision=round(precision, 3) if precision is not None else None,
        recall=round(recall, 3),
        f1=round(f1, 3) if f1 is not None else None,
    )


def score(report: PipelineReport, labels: LabelSet, *, nhr_as_fp: bool = False) -> MetricsSummary:
    """Score gate buckets against labels.

    Ticketed+vulnerable counts tp; ticketed+benign counts fp.
    Suppressed+vulnerable is the safety-critical missed counter. Unlabeled
    findings are excluded with a warning. Order-invariant.
    """
    ticketed = {t.fingerprint for t in report.gate.tickets}
    suppressed = set(report.gate.suppressed)
    review = set(report.gate.needs_review)
    tp_confirmed = fp_suppressed = missed = benign_ticketed = nhr_count = unlabeled = 0
    warnings: list[str] = []
    for result in report.results:
        fp_key = result.finding.fingerprint
        label = labels.labels.get(fp_key)
        if fp_key in review:
            nhr_count += 1
            continue
        if label is None:
            unlabeled += 1
            warnings.append(f"finding {fp_key} has no label; excluded from scoring")
            continue
        if fp_key in ticketed:
            if label == LABEL_VULNERABLE:
                tp_confirmed += 1
            else:
                benign_ticketed += 1
        elif fp_key in suppressed:
            if label == LABEL_VULNERABLE:
                missed += 1
            else:
                fp_suppressed += 1
    tp = tp_confirmed
    fp = benign_ticketed + (nhr_count if nhr_as_fp else 0)
    base = derive_metrics(tp, fp, labels.ground_truth_total, findings_total=len(report.results))
    return MetricsSummary(
        findings_total=len(report.results),
        tp=tp,
        fp=fp,
        precision=base.precision,
        recall=base.recall,
        f1=base.f1,
        tp_confirmed=tp_confirmed,
        fp_suppressed=fp_suppressed,
        missed_vulnerable_suppressed=missed,
        benign_ticketed=benign_ticketed,
        nhr_count=nhr_count,
        unlabeled=unlabeled,
        warnings=tuple(sorted(warnings)),
    )


def format_table(summary: MetricsSummary) -> str:
    """One-row table mirroring the usual scanner-comparison columns."""

    def pct(x: float | None) -> str:
        return "undef" if x is None else f"{100 * x:.1f}%"

    header = f"{'Findings':>8}  {'TP':>5}  {'FP':>5}  {'Precision':>9}  {'F1':>7}  {'Recall':>7}"
    row = (
        f"{summary.findings_total:>8}  {summary.tp:>5}  {summary.fp:>5}  "
        f"{pct(summary.precision):>9}  {pct(summary.f1):>7}  {pct(summary.recall):>7}"
    )
    confusion = (
        f"confirmed={summary.tp_confirmed} fp_suppressed={summary.fp_suppressed} "
        f"missed_vulnerable_suppressed={summary.missed_vulnerable_suppressed} "
        f"benign_ticketed={summary.benign_ticketed} needs_review={summary.nhr_count} "
        f"unlabeled={summary.unlabeled}"
    )
    return "\n".join([header, row, confusion])
