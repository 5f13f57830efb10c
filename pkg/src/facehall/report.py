"""Evaluation reports: CSV rows, a text summary, and comparison figures."""

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List

METHODS = ("bicubic", "cnn_only", "lcge")


@dataclass
class ReportRow:
    subject_id: str
    method: str
    psnr: float
    ssim: float


@dataclass
class MethodSummary:
    method: str
    mean_psnr: float
    mean_ssim: float
    inf_count: int  # rows left out of the PSNR mean because they were +inf


@dataclass
class EvaluationReport:
    rows: List[ReportRow]
    summaries: Dict[str, MethodSummary]


def build_report(rows: List[ReportRow]) -> EvaluationReport:
    """Per-method arithmetic means; +inf PSNR rows are excluded and counted."""
    summaries = {}
    for method in METHODS:
        sub = [r for r in rows if r.method == method]
        if not sub:
            continue
        finite = [r.psnr for r in sub if math.isfinite(r.psnr)]
        inf_count = sum(1 for r in sub if math.isinf(r.psnr))
        mean_psnr = sum(finite) / len(finite) if finite else float("inf")
        mean_ssim = sum(r.ssim for r in sub) / len(sub)
        summaries[method] = MethodSummary(method, mean_psnr, mean_ssim, inf_count)
    return EvaluationReport(rows=rows, summaries=summaries)


def _fmt(value: float) -> str:
    if math.isinf(value):
        return "inf"
    return f"{value:.6f}"


def write_csv(report: EvaluationReport, path):
    """One row per (image, method); header id,method,psnr,ssim."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("id,method,psnr,ssim\n")
        for row in report.rows:
            fh.write(f"{row.subject_id},{row.method},{_fmt(row.psnr)},{_fmt(row.ssim)}\n")


def format_table(report: EvaluationReport) -> str:
    lines = [f"{'method':<10} {'mean psnr':>12} {'mean ssim':>12}"]
    for method in METHODS:
        s = report.summaries.get(method)
        if s is None:
            continue
        note = f"  ({s.inf_count} exact, excluded)" if s.inf_count else ""
        lines.append(f"{method:<10} {_fmt(s.mean_psnr):>12} {_fmt(s.mean_ssim):>12}{note}")
    return "\n".join(lines)


def render_figures(report: EvaluationReport, out_dir, stem: str = "report") -> List[Path]:
    """Bar charts of per-image PSNR and SSIM, one group per subject."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    subjects = []
    for row in report.rows:
        if row.subject_id not in subjects:
            subjects.append(row.subject_id)
    by_method = {
        m: {r.subject_id: r for r in report.rows if r.method == m} for m in METHODS
    }
    paths = []
    for metric, label in (("psnr", "PSNR (dB)"), ("ssim", "SSIM")):
        fig, ax = plt.subplots(figsize=(max(6.0, 0.55 * len(subjects) + 2.0), 4.0))
        width = 0.27
        xs = range(len(subjects))
        for mi, method in enumerate(METHODS):
            rows = by_method.get(method, {})
            vals = []
            for sid in subjects:
                row = rows.get(sid)
                v = getattr(row, metric) if row else float("nan")
                vals.append(v if math.isfinite(v) else float("nan"))
            ax.bar([x + (mi - 1) * width for x in xs], vals, width, label=method)
            summary = report.summaries.get(method)
            if summary:
                mean = summary.mean_psnr if metric == "psnr" else summary.mean_ssim
                if math.isfinite(mean):
                    ax.axhline(mean, ls="--", lw=0.8, color=f"C{mi}", alpha=0.7)
        ax.set_xticks(list(xs))
        ax.set_xticklabels(subjects, rotation=60, ha="right", fontsize=7)
        ax.set_ylabel(label)
        ax.set_title(f"Per-image {label} by method")
        ax.legend(fontsize=8)
        ax.grid(axis="y", alpha=0.3)
        fig.tight_layout()
        path = out_dir / f"{stem}_{metric}.png"
        fig.savefig(path, dpi=120)
        plt.close(fig)
        paths.append(path)
    return paths
