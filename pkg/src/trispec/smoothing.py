"""Band-limited nonnegative smoothing kernels and their action on atomic measures."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numpy.polynomial import Polynomial
from scipy import fft as sfft
from scipy.interpolate import CubicSpline

from .errors import ConstructionError, DomainError
from .geometry import as_triple
from .lattice import TorusMeasure, norm_grid
from .measure import JointSpectralMeasure

TRUNC_REL = 1e-12
TAIL_BOUND_MAX = 1e-10
TABLE_STEP = 1.0 / 256
TABLE_EXTENT = 256.0
DEFAULT_SAFE_REL_TOL = 1e-6


def bump(u: np.ndarray) -> np.ndarray:
    """``exp(-1 / (1 - u^2))`` on ``|u| < 1``, zero elsewhere."""
    u = np.asarray(u, dtype=float)
    inside = np.abs(u) < 1
    out = np.zeros_like(u)
    out[inside] = np.exp(-1.0 / (1.0 - u[inside] ** 2))
    return out


def bump_derivative_l1(k: int, nodes: int = 200001) -> float:
    """``||d^k/du^k bump||_1`` on (-1, 1).

    Uses ``bump^(k) = P_k(u) (1 - u^2)^(-2k) bump(u)`` with
    ``P_{k+1} = P_k' (1 - u^2)^2 + 4 k u P_k (1 - u^2) - 2 u P_k``.
    """
    one_minus = Polynomial([1, 0, -1])
    u_poly = Polynomial([0, 1])
    p = Polynomial([1])
    for j in range(k):
        p = p.deriv() * one_minus**2 + 4 * j * u_poly * p * one_minus - 2 * u_poly * p
    u = np.linspace(-1, 1, nodes)[1:-1]
    vals = np.abs(p(u)) * (1 - u * u) ** (-2.0 * k) * bump(u)
    return float(np.trapezoid(vals, u))


@dataclass(frozen=True, eq=False)
class SmoothingKernel:
    """Even, nonnegative, unit-mass ``chi`` with Fourier support in ``[-delta, delta]``.

    ``chi_hat = c * (g * g~)`` for the bump ``g`` supported on
    ``(-delta/2, delta/2)``. ``chi`` is the trapezoid inverse transform of
    the sampled ``chi_hat``, which equals ``c h^2 / (2 pi) |sum_i g_i e^{i x t_i}|^2``
    and is therefore nonnegative. It is tabulated on ``[0, table_x[-1]]`` and
    cubic-spline interpolated; beyond ``trunc_radius`` it is set to zero, and
    ``tail_bound`` bounds the discarded ``int_{|x| > trunc_radius} chi``.
    """

    delta: float
    grid_points: int
    hat_xi: np.ndarray
    hat_grid: np.ndarray
    table_x: np.ndarray
    eval_table: np.ndarray
    trunc_radius: float
    tail_bound: float
    _spline: CubicSpline = field(repr=False)

    @property
    def peak(self) -> float:
        return float(self.eval_table[0])

    def chi(self, x) -> np.ndarray:
        """Truncated ``chi``, vectorized."""
        ax = np.abs(np.asarray(x, dtype=float))
        out = np.zeros_like(ax)
        inside = ax <= self.trunc_radius
        out[inside] = self._spline(ax[inside])
        return out

    def params(self) -> dict:
        return {
            "delta": self.delta,
            "grid_points": self.grid_points,
            "trunc_radius": self.trunc_radius,
            "tail_bound": self.tail_bound,
        }


def build_kernel(delta: float, grid_points: int = 1024) -> SmoothingKernel:
    if delta <= 0:
        raise DomainError("delta must be positive")
    if grid_points < 512:
        raise DomainError("grid_points must be at least 512")
    half = grid_points // 2
    h = delta / half
    # t-grid covers [-delta/2, delta/2]; autocorrelation lags cover [-delta, delta]
    m = half // 2
    t = np.arange(-m, m + 1) * h
    g = bump(2 * t / delta)
    norm = 1.0 / (h * np.sum(g * g))
    lags = np.arange(-2 * m, 2 * m + 1)
    hat = norm * h * np.correlate(g, g, mode="full")
    hat_xi = lags * h

    # chi(x) = (1/2pi) h sum_k hat_k e^{i x xi_k} is periodic with period 2 pi / h
    extent = TABLE_EXTENT
    if extent > 0.9 * math.pi / h:
        raise ConstructionError(
            f"grid too coarse: the table needs |x| <= {extent:g} but the quadrature "
            f"is only valid for |x| < {math.pi / h:.1f}"
        )
    xs = np.arange(0.0, extent + TABLE_STEP / 2, TABLE_STEP)
    pos = t >= 0
    weights = np.where(t[pos] == 0, 1.0, 2.0) * g[pos]
    G = np.empty_like(xs)
    for s in range(0, len(xs), 4096):
        G[s : s + 4096] = np.cos(np.outer(xs[s : s + 4096], t[pos])) @ weights
    table = norm * h * h / (2 * math.pi) * G * G

    peak = table[0]
    envelope = np.maximum.accumulate(table[::-1])[::-1]
    below = np.nonzero(envelope <= TRUNC_REL * peak)[0]
    if not len(below):
        raise ConstructionError("chi does not fall below the truncation level inside the table")
    trunc = float(xs[below[0]])

    # discarded mass: tabulated part plus, beyond the table,
    # |chi(x)| <= ||chi_hat^(2k)||_1 / (2 pi x^2k) <= norm ||g^(k)||_1^2 / (2 pi x^2k)
    far = min(
        2 * norm * ((2 / delta) ** (k - 1) * bump_derivative_l1(k)) ** 2
        / (2 * math.pi * (2 * k - 1) * extent ** (2 * k - 1))
        for k in (3, 4, 5)
    )
    tail = 2 * float(np.trapezoid(table[below[0]:], xs[below[0]:])) + far
    if tail > TAIL_BOUND_MAX:
        raise ConstructionError(f"tail bound {tail:.3g} exceeds {TAIL_BOUND_MAX:g}")

    for arr in (hat_xi, hat, xs, table):
        arr.setflags(write=False)
    # chi is even: zero slope at the origin
    spline = CubicSpline(xs, table, bc_type=((1, 0.0), "not-a-knot"))
    return SmoothingKernel(float(delta), int(grid_points), hat_xi, hat, xs, table, float(trunc), float(tail), spline)


def eval_rho(kernel: SmoothingKernel, v: Sequence[float]) -> float:
    """``rho(v) = chi(v1) chi(v2) chi(v3)``."""
    v = np.asarray(v, dtype=float)
    return float(np.prod(kernel.chi(v)))


def _spectral_sum(measure: JointSpectralMeasure, kernel: SmoothingKernel, center: float):
    f, mult = measure.spectrum(center - kernel.trunc_radius, center + kernel.trunc_radius)
    return f, mult * kernel.chi(center - f)


def _pair_sum_above(fa, wa, fb, wb, threshold: float) -> float:
    """``sum_{a, b : fa + fb >= threshold} wa * wb``."""
    if not len(fa) or not len(fb):
        return 0.0
    order = np.argsort(fb)
    fb, wb = fb[order], wb[order]
    tail = np.concatenate([np.cumsum(wb[::-1])[::-1], [0.0]])
    idx = np.searchsorted(fb, threshold - fa, side="left")
    return float(np.sum(wa * tail[idx]))


def missing_atom_bound(measure: JointSpectralMeasure, kernel: SmoothingKernel, tau) -> float:
    """Upper bound on what atoms beyond the cutoff would add to ``convolve``.

    An unrepresented atom has some frequency ``lam_k > cutoff``; by the
    triangle support of the model the other two then satisfy
    ``lam_i + lam_j >= cutoff - slack``, and summing the weights over
    ``lam_k`` gives at most ``mult_i mult_j / vol M``.
    """
    tau = as_triple(tau)
    cut = measure.cutoff
    vol = measure.manifold.volume
    R = kernel.trunc_radius
    sums = [_spectral_sum(measure, kernel, c) for c in tau]
    bound = 0.0
    for k in range(3):
        f, mult = measure.spectrum(cut, tau[k] + R)
        f, mult = f[f > cut], mult[f > cut]
        if not len(f):
            continue
        top = float(np.max(kernel.chi(tau[k] - f)))
        if top == 0.0:
            continue
        i, j = [x for x in range(3) if x != k]
        pairs = _pair_sum_above(*sums[i], *sums[j], cut - measure.triangle_slack)
        bound += top * pairs / vol
    return bound


def _check_safe(bound: float, value: float, rel_tol: float, needed: float, cutoff: float, what: str) -> None:
    if bound > rel_tol * abs(value):
        raise DomainError(
            f"{what} is outside the safe region: atoms beyond cutoff {cutoff:g} could contribute "
            f"up to {bound:.3g} (value {value:.6g}); a cutoff of {needed:g} is sufficient"
        )


def _torus_pair_sum(measure: TorusMeasure, a_fn, b_fn, c_fn, reach: float) -> float:
    """``(2 pi)^-n sum_{m, j} a(|m|) b(|j|) c(|m + j|)`` over represented pairs, by FFT."""
    n = measure.n
    K = math.floor(min(measure.cutoff, reach))
    r = norm_grid(n, K)
    inside = r <= measure.cutoff
    a = np.where(inside, a_fn(r), 0.0)
    b = np.where(inside, b_fn(r), 0.0)
    c = np.where(inside, c_fn(r), 0.0)
    # circular length P > 3K keeps |m + j| <= K from aliasing
    P = sfft.next_fast_len(3 * K + 1, real=True)
    shape = (P,) * n
    ab = sfft.irfftn(sfft.rfftn(a, shape) * sfft.rfftn(b, shape), shape)
    # m + j sits at index (m + j) + 2K modulo P
    idx = (np.arange(-K, K + 1) + 2 * K) % P
    ab = ab[np.ix_(*([idx] * n))]
    return float(np.sum(ab * c)) * measure.weight_scale


def convolve(
    measure: JointSpectralMeasure,
    kernel: SmoothingKernel,
    tau,
    rel_tol: float = DEFAULT_SAFE_REL_TOL,
) -> float:
    """``rho * mu (tau) = sum over atoms of weight * rho(tau - freqs)``.

    Raises ``DomainError`` unless the certified contribution of atoms beyond
    the cutoff is at most ``rel_tol`` times the result; it is exactly zero when
    every ``tau_k + trunc_radius <= cutoff``.
    """
    tau = as_triple(tau)
    R = kernel.trunc_radius
    if isinstance(measure, TorusMeasure):
        value = _torus_pair_sum(
            measure,
            lambda r: kernel.chi(tau[0] - r),
            lambda r: kernel.chi(tau[1] - r),
            lambda r: kernel.chi(tau[2] - r),
            max(tau) + R,
        )
    else:
        f = measure.freqs
        near = np.all(np.abs(f - np.asarray(tau)) <= R, axis=1)
        fn = f[near]
        rho = kernel.chi(tau[0] - fn[:, 0]) * kernel.chi(tau[1] - fn[:, 1]) * kernel.chi(tau[2] - fn[:, 2])
        value = float(np.sum(measure.weights[near] * rho))
    bound = missing_atom_bound(measure, kernel, tau)
    _check_safe(bound, value, rel_tol, max(tau) + R, measure.cutoff, f"tau={tuple(tau)}")
    return value


def interface_bound(measure: JointSpectralMeasure, kernel: SmoothingKernel, t1: float, t2: float) -> float:
    """Upper bound on the unrepresented part of ``interface_sum``."""
    cut = measure.cutoff
    f1, w1 = _spectral_sum(measure, kernel, t1)
    f2, w2 = _spectral_sum(measure, kernel, t2)
    # pairs that can carry an atom beyond the cutoff: either frequency above it,
    # or both below with a third side that may exceed it
    in1, in2 = f1 <= cut, f2 <= cut
    risky = float(np.sum(w1[~in1])) * float(np.sum(w2))
    risky += float(np.sum(w1[in1])) * float(np.sum(w2[~in2]))
    risky += _pair_sum_above(f1[in1], w1[in1], f2[in2], w2[in2], cut - measure.triangle_slack)
    return risky / measure.manifold.volume


def interface_sum(
    measure: JointSpectralMeasure,
    kernel: SmoothingKernel,
    t1: float,
    t2: float,
    rel_tol: float = DEFAULT_SAFE_REL_TOL,
) -> float:
    """``int rho * mu (t1, t2, s) ds = sum over atoms of weight * chi(t1 - lam_i) chi(t2 - lam_j)``."""
    if t1 <= 0 or t2 <= 0:
        raise DomainError("t1 and t2 must be positive")
    R = kernel.trunc_radius
    if isinstance(measure, TorusMeasure):
        cut = measure.cutoff
        value = _torus_pair_sum(
            measure,
            lambda r: kernel.chi(t1 - r),
            lambda r: kernel.chi(t2 - r),
            lambda r: (r <= cut).astype(float),
            t1 + t2 + 2 * R,
        )
    else:
        f = measure.freqs
        near = (np.abs(f[:, 0] - t1) <= R) & (np.abs(f[:, 1] - t2) <= R)
        fn = f[near]
        value = float(np.sum(measure.weights[near] * kernel.chi(t1 - fn[:, 0]) * kernel.chi(t2 - fn[:, 1])))
    bound = interface_bound(measure, kernel, t1, t2)
    _check_safe(bound, value, rel_tol, t1 + t2 + 2 * R + measure.triangle_slack, measure.cutoff, f"(t1, t2)=({t1:g}, {t2:g})")
    return value


def separable_interface_sum(measure: JointSpectralMeasure, kernel: SmoothingKernel, t1: float, t2: float) -> float:
    """``(1 / vol M) S(t1) S(t2)`` with ``S(t) = sum_lam mult(lam) chi(t - lam)``.

    Equals ``interface_sum`` when no atom with a nonzero kernel factor is cut off.
    """
    _, w1 = _spectral_sum(measure, kernel, t1)
    _, w2 = _spectral_sum(measure, kernel, t2)
    return float(np.sum(w1)) * float(np.sum(w2)) / measure.manifold.volume
