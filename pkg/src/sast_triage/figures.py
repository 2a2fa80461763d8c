"""Matplotlib figures rendered alongside the report files."""

from __future__ import annotations

from pathlib import Path
from typing import TYPE_CHECKING

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .ingest import Severity
from .pipeline import PipelineReport, VerdictKind

if TYPE_CHECKING:  # pragma: no cover
    from .bench import MetricsSummary

_VERDICT_COLORS = {
    VerdictKind.TRUE_POSITIVE: "#c0392b",
    VerdictKind.FALSE_POSITIVE: "#27ae60",
    VerdictKind.NEEDS_HUMAN_REVIEW: "#f39c12",
}

_VERDICT_LABELS = {
    VerdictKind.TRUE_POSITIVE: "true positive",
    VerdictKind.FALSE_POSITIVE: "false positive",
    VerdictKind.NEEDS_HUMAN_REVIEW: "needs review",
}


def render_report_figures(report: PipelineReport, out_dir: Path | str) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = [
        _verdict_counts_figure(report, out / "verdict_counts.png"),
        _severity_breakdown_figure(report, out / "severity_breakdown.png"),
    ]
    return written


def _verdict_counts_figure(report: PipelineReport, path: Path) -> Path:
    counts = {k: 0 for k in VerdictKind}
    for r in report.results:
        counts[r.verdict.kind] += 1
    fig, ax = plt.subplots(figsize=(5, 3.2))
    kinds = list(VerdictKind)
    bars = ax.bar(
        [_VERDICT_LABELS[k] for k in kinds],
        [counts[k] for k in kinds],
        color=[_VERDICT_COLORS[k] for k in kinds],
    )
    ax.bar_label(bars)
    ax.set_ylabel("findings")
    ax.set_title("Verdicts")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def _severity_breakdown_figure(report: PipelineReport, path: Path) -> Path:
    severities = list(Severity)
    kinds = list(VerdictKind)
    table = {k: [0] * len(severities) for k in kinds}
    for r in report.results:
        table[r.verdict.kind][severities.index(r.finding.severity)] += 1
    fig, ax = plt.subplots(figsize=(6, 3.2))
    bottoms = [0] * len(severities)
    for k in kinds:
        ax.bar(
            [s.value for s in severities],
            table[k],
            bottom=bottoms,
            label=_VERDICT_LABELS[k],
            color=_VERDICT_COLORS[k],
        )
        bottoms = [b + v for b, v in zip(bottoms, table[k])]
    ax.set_ylabel("findings")
    ax.set_title("Severity by verdict")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_metrics_figure(summary: "MetricsSummary", path: Path | str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    labels: list[str] = []
    values: list[float] = []
    for name, value in (("precision", summary.precision), ("recall", summary.recall), ("f1", summary.f1)):
        if value is not None:
            labels.append(name)
            values.append(value)
    fig, ax = plt.subplots(figsize=(5, 3.2))
    bars = ax.bar(labels, values, color="#2980b9")
    ax.bar_label(bars, fmt="%.3f")
    ax.set_ylim(0, 1.05)
    ax.set_title(f"Scores (tp={summary.tp}, fp={summary.fp}, findings={summary.findings_total})")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
