"""Figures for verification reports."""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .verify import VerificationReport  # noqa: E402

_LABELS = {
    "good": "smoothed measure vs main term",
    "interface": "integrated smoothed measure vs interface identity",
    "weyl": "lattice count vs ball volume",
    "bad": "unit-box mass along a bad ray",
    "tail": "tail mass",
}


def _abscissa(report: VerificationReport) -> tuple[list[float], str]:
    if report.kind == "weyl":
        return [r.tau[0] for r in report.rows], "R"
    return [math.hypot(*r.tau) for r in report.rows], "|tau|"


def report_figure(report: VerificationReport, width: float = 8.0):
    """Two panels: measured and predicted values, and the relative error."""
    x, xlabel = _abscissa(report)
    measured = [r.measured for r in report.rows]
    predicted = [r.predicted for r in report.rows]
    fig, (ax_v, ax_e) = plt.subplots(1, 2, figsize=(width, width * 0.4), facecolor="w")
    ax_v.plot(x, measured, "o-", label="measured")
    ax_v.plot(x, predicted, "s--", label="predicted", mfc="none")
    ax_v.set_xlabel(xlabel)
    ax_v.set_title(_LABELS.get(report.kind, report.kind), fontsize=10)
    ax_v.legend(frameon=False)
    if all(v > 0 for v in measured + predicted) and all(v > 0 for v in x):
        ax_v.set_xscale("log")
        ax_v.set_yscale("log")

    if report.kind in ("bad", "tail"):
        ax_e.plot(x, measured, "o-", color="C3")
        ax_e.set_ylabel("mass")
    else:
        errs = [max(r.rel_error, 1e-18) for r in report.rows]
        ax_e.loglog(x, errs, "o-", color="C3")
        ax_e.set_ylabel("relative error")
    ax_e.set_xlabel(xlabel)
    ax_e.set_title(f"policy: {report.policy} [{report.verdict}]", fontsize=9)
    fig.tight_layout()
    return fig


def save_report_figure(report: VerificationReport, path) -> None:
    fig = report_figure(report)
    # fixed metadata keeps reruns byte-identical
    fig.savefig(path, dpi=120, metadata={"Software": None} if str(path).endswith(".png") else None)
    plt.close(fig)
