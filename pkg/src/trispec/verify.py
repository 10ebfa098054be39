"""Scans comparing computed spectral measures against their predicted asymptotics."""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import DomainError
from .geometry import (
    FrequencyTriple,
    Kind,
    ManifoldDescriptor,
    as_triple,
    classify,
    interface_integral,
    leray_volume,
    unit_ball_volume,
)
from .lattice import annulus_count
from .measure import JointSpectralMeasure
from .smoothing import SmoothingKernel, convolve, interface_sum

REL_FLOOR = 1e-300
DEFAULT_THRESHOLD = 0.15
# relative errors at or below this are indistinguishable from rounding
NOISE_FLOOR = 1e-8
THREADS_ENV = "TRISPEC_THREADS"


@dataclass(frozen=True)
class ReportRow:
    tau: FrequencyTriple
    measured: float
    predicted: float
    rel_error: float

    @classmethod
    def make(cls, tau, measured: float, predicted: float) -> "ReportRow":
        rel = abs(measured - predicted) / max(abs(predicted), REL_FLOOR)
        return cls(FrequencyTriple(*map(float, tau)), float(measured), float(predicted), rel)


@dataclass
class VerificationReport:
    kind: str
    context: dict
    rows: list[ReportRow]
    policy: str
    passed: bool
    notes: dict = field(default_factory=dict)

    @property
    def verdict(self) -> str:
        return "pass" if self.passed else "fail"

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "context": self.context,
            "policy": self.policy,
            "verdict": self.verdict,
            "notes": self.notes,
            "rows": [
                {
                    "tau": list(r.tau),
                    "measured": r.measured,
                    "predicted": r.predicted,
                    "rel_error": r.rel_error,
                }
                for r in self.rows
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["tau1", "tau2", "tau3", "measured", "predicted", "rel_error"])
        for r in self.rows:
            w.writerow([repr(x) for x in (*r.tau, r.measured, r.predicted, r.rel_error)])
        return buf.getvalue()


def _threads() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def _map_rows(fn: Callable, items: Sequence) -> list:
    workers = min(_threads(), len(items))
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(workers) as pool:
        return list(pool.map(fn, items))


def _context(measure: JointSpectralMeasure | None, kernel: SmoothingKernel | None, **extra) -> dict:
    ctx = {}
    if measure is not None:
        ctx["manifold"] = measure.manifold.to_dict()
        ctx["cutoff"] = measure.cutoff
    if kernel is not None:
        ctx["kernel"] = {k: float(v) if k != "grid_points" else int(v) for k, v in kernel.params().items()}
    ctx["seed"] = None
    ctx.update(extra)
    return ctx


def decreasing(errors: Iterable[float], floor: float = NOISE_FLOOR) -> bool:
    """Strictly decreasing, except that values at or below ``floor`` always pass."""
    e = list(errors)
    return all(b < a or b <= floor for a, b in zip(e, e[1:]))


def empirical_slope(xs: Sequence[float], ys: Sequence[float]) -> float | None:
    """Least-squares slope of ``log y`` against ``log x`` (``None`` if undefined)."""
    pts = [(math.log(x), math.log(y)) for x, y in zip(xs, ys) if x > 0 and y > 0]
    if len(pts) < 2:
        return None
    a = np.array(pts)
    return float(np.polyfit(a[:, 0], a[:, 1], 1)[0])


def main_term(manifold: ManifoldDescriptor, tau) -> float:
    """``(2 pi)^(-2n) vol M vol F^-1(tau)``."""
    tau = as_triple(tau)
    cls = classify(tau)
    if cls.kind is not Kind.GOOD:
        raise DomainError(f"main term needs a triangle-good tau, {tuple(tau)} is {cls.kind.value}")
    n = manifold.dim
    return (2 * math.pi) ** (-2 * n) * manifold.volume * leray_volume(n, tau)


def good_cone_scan(
    measure: JointSpectralMeasure,
    kernel: SmoothingKernel,
    tau0,
    scales: Sequence[float],
    threshold: float = DEFAULT_THRESHOLD,
) -> VerificationReport:
    """Smoothed measure against the main term along the ray through ``tau0``.

    Passes when the relative error decreases with the scale and ends at most
    ``threshold``.
    """
    tau0 = as_triple(tau0)
    if classify(tau0).kind is not Kind.GOOD:
        raise DomainError(f"direction {tuple(tau0)} is not triangle-good")
    taus = [tau0.scaled(s) for s in scales]

    def row(tau):
        return ReportRow.make(tau, convolve(measure, kernel, tau), main_term(measure.manifold, tau))

    rows = _map_rows(row, taus)
    errs = [r.rel_error for r in rows]
    passed = bool(rows) and decreasing(errs) and errs[-1] <= threshold
    slope = empirical_slope(list(scales), [abs(r.measured - r.predicted) for r in rows])
    return VerificationReport(
        "good",
        _context(measure, kernel, tau0=list(tau0), scales=list(map(float, scales))),
        rows,
        f"decreasing rel_error, final <= {threshold:g}",
        passed,
        {"remainder_slope": slope, "main_term_degree": 2 * measure.manifold.dim - 3},
    )


def bad_cone_scan(measure: JointSpectralMeasure, direction, scales: Sequence[float]) -> VerificationReport:
    """Unit-box masses ``mu(tau + [0, 1)^3)`` along a triangle-bad ray; all must be exactly 0."""
    direction = as_triple(direction)
    cls = classify(direction)
    if cls.kind is not Kind.BAD:
        raise DomainError(
            f"direction {tuple(direction)} is triangle-{cls.kind.value} (margin {cls.margin:g}), not bad"
        )
    taus = [direction.scaled(s) for s in scales]
    need = max((max(t) + 1.0 for t in taus), default=0.0)
    if need > measure.cutoff * (1 + 1e-12):
        raise DomainError(
            f"boxes reach {need:g}, beyond the measure cutoff {measure.cutoff:g}; "
            f"rebuild with cutoff >= {need:g}"
        )

    def row(tau):
        box =[(t, t + 1.0) for t in tau]
        if measure.key_kind == "q":
            count = measure.box_count(box)
            return ReportRow.make(tau, count * measure.weight_scale, 0.0), count == 0
        value = measure.box_measure(box)
        return ReportRow.make(tau, value, 0.0), value == 0.0

    out = _map_rows(row, taus)
    rows = [r for r, _ in out]
    return VerificationReport(
        "bad",
        _context(measure, None, direction=list(direction), scales=list(map(float, scales))),
        rows,
        "exact zero in every box",
        all(z for _, z in out),
    )


def interface_scan(
    measure: JointSpectralMeasure,
    kernel: SmoothingKernel,
    t1: float,
    t2: float,
    scales: Sequence[float] = (1.0,),
    threshold: float = DEFAULT_THRESHOLD,
    quad_nodes: int = 4096,
) -> VerificationReport:
    """Smoothed measure integrated over the third frequency against the integrated main term.

    Rows carry ``tau = (s t1, s t2, 0)``; the third coordinate is integrated out.
    """
    if t1 <= 0 or t2 <= 0:
        raise DomainError("t1 and t2 must be positive")
    n = measure.manifold.dim
    pref = (2 * math.pi) ** (-2 * n) * measure.manifold.volume

    def row(s):
        a, b = s * t1, s * t2
        measured = interface_sum(measure, kernel, a, b)
        return ReportRow.make((a, b, 0.0), measured, pref * interface_integral(n, a, b, quad_nodes))

    rows = _map_rows(row, list(scales))
    errs = [r.rel_error for r in rows]
    passed = bool(rows) and decreasing(errs) and errs[-1] <= threshold
    return VerificationReport(
        "interface",
        _context(measure, kernel, t=[float(t1), float(t2)], scales=list(map(float, scales))),
        rows,
        f"decreasing rel_error, final <= {threshold:g}",
        passed,
        {"remainder_degree": 2 * n - 3},
    )


def weyl_check(n: int, radii: Sequence[float], threshold: float | None = None) -> VerificationReport:
    """Torus lattice counts in balls against ``vol(B^n) R^n``, both scaled by ``(2 pi)^-n``."""
    scale = (2 * math.pi) ** (-n)

    def row(R):
        count = annulus_count(n, 0.0, R)
        return ReportRow.make((R, 0.0, 0.0), scale * count, scale * unit_ball_volume(n) * R**n)

    rows = _map_rows(row, list(radii))
    errs = [r.rel_error for r in rows]
    passed = bool(rows) and decreasing(errs) and (threshold is None or errs[-1] <= threshold)
    policy = "decreasing rel_error" + ("" if threshold is None else f", final <= {threshold:g}")
    manifold = ManifoldDescriptor.torus(n)
    return VerificationReport(
        "weyl",
        {"manifold": manifold.to_dict(), "radii": list(map(float, radii)), "seed": None},
        rows,
        policy,
        passed,
    )


def tail_scan(measure: JointSpectralMeasure, t1: float, t2: float, eps: float) -> VerificationReport:
    """Mass above ``(1 + eps)(t1 + t2)`` in the third frequency; must be exactly 0 for ``eps > 0``."""
    if eps <= 0:
        raise DomainError("the tail bound makes a claim only for eps > 0")
    thr = (1 + eps) * (t1 + t2)
    if measure.key_kind == "q" and hasattr(measure, "tail_count"):
        count = measure.tail_count(t1, t2, eps)
        value, zero = count * measure.weight_scale, count == 0
    else:
        value = measure.tail_sum(t1, t2, eps)
        zero = value == 0.0
    return VerificationReport(
        "tail",
        _context(measure, None, t=[float(t1), float(t2)], eps=float(eps)),
        [ReportRow.make((t1, t2, thr), value, 0.0)],
        "exact zero",
        zero,
    )
