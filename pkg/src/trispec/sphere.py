"""Joint spectral measure of the round 2-sphere from zero-order Wigner 3j symbols.

For orthonormal spherical harmonics of degrees ``l1, l2, l3`` the sum of
squared triple products over all orders is

    (2 l1 + 1)(2 l2 + 1)(2 l3 + 1) / (4 pi) * (l1 l2 l3; 0 0 0)^2,

which is basis independent. Degree ``l`` has frequency ``sqrt(l (l + 1))``.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import DomainError, ResourceError
from .geometry import ManifoldDescriptor
from .measure import JointSpectralMeasure

L_LIMIT = 10**4
SPHERE_L_MAX_LIMIT = 10**3
MAX_ATOMS = 5 * 10**7


def _log_factorial_table(size: int) -> np.ndarray:
    """``log(k!)`` for ``0 <= k < size`` in extended precision, Kahan-summed."""
    logs = np.log(np.arange(1, size, dtype=np.longdouble))
    out = np.zeros(size, dtype=np.longdouble)
    acc = np.longdouble(0)
    comp = np.longdouble(0)
    for k, v in enumerate(logs, start=1):
        y = v - comp
        t = acc + y
        comp = (t - acc) - y
        acc = t
        out[k] = acc
    out.setflags(write=False)
    return out


_LOG_FACT = None


def log_factorials() -> np.ndarray:
    global _LOG_FACT
    if _LOG_FACT is None:
        _LOG_FACT = _log_factorial_table(4 * L_LIMIT + 2)
    return _LOG_FACT


def _selection(l1, l2, l3):
    J = l1 + l2 + l3
    return (J % 2 == 0) & (l3 >= np.abs(l1 - l2)) & (l3 <= l1 + l2)


def _three_j_zero_array(l1, l2, l3) -> np.ndarray:
    l1, l2, l3 = (np.asarray(x, dtype=np.int64) for x in (l1, l2, l3))
    l1, l2, l3 = np.broadcast_arrays(l1, l2, l3)
    if min(l1.min(initial=0), l2.min(initial=0), l3.min(initial=0)) < 0:
        raise DomainError("degrees must be nonnegative")
    if max(l1.max(initial=0), l2.max(initial=0), l3.max(initial=0)) > L_LIMIT:
        raise ResourceError(f"degrees above {L_LIMIT} exceed the log-factorial table")
    lf = log_factorials()
    ok = _selection(l1, l2, l3)
    out = np.zeros(l1.shape, dtype=float)
    a, b, c = l1[ok], l2[ok], l3[ok]
    J = a + b + c
    g = J // 2
    log_delta = lf[J - 2 * a] + lf[J - 2 * b] + lf[J - 2 * c] - lf[J + 1]
    mag = np.exp(0.5 * log_delta + lf[g] - lf[g - a] - lf[g - b] - lf[g - c])
    sign = np.where(g % 2 == 0, 1.0, -1.0)
    out[ok] = sign * mag.astype(float)
    return out


def three_j_zero(l1, l2=None, l3=None):
    """Wigner 3j symbol ``(l1 l2 l3; 0 0 0)``; arrays broadcast.

    Accepts either three degrees or one degree triple.
    """
    if l2 is None:
        l1, l2, l3 = l1
    out = _three_j_zero_array(l1, l2, l3)
    return float(out) if out.ndim == 0 else out


def gaunt_square_sum(l1, l2=None, l3=None):
    """Sum over all orders of squared triple products of degree ``(l1, l2, l3)`` harmonics."""
    if l2 is None:
        l1, l2, l3 = l1
    w = _three_j_zero_array(l1, l2, l3)
    a, b, c = (np.asarray(x, dtype=float) for x in (l1, l2, l3))
    out = (2 * a + 1) * (2 * b + 1) * (2 * c + 1) / (4 * math.pi) * w * w
    return float(out) if np.ndim(out) == 0 else out


def degree_frequency(l) -> np.ndarray | float:
    l = np.asarray(l, dtype=float)
    out = np.sqrt(l * (l + 1))
    return float(out) if out.ndim == 0 else out


def sphere_measure(l_max: int) -> JointSpectralMeasure:
    """All nonzero atoms with every degree at most ``l_max``.

    The cutoff is the frequency of degree ``l_max``.
    """
    if l_max < 0:
        raise DomainError("l_max must be nonnegative")
    est = (l_max + 1) ** 3 // 4
    if l_max > SPHERE_L_MAX_LIMIT or est > MAX_ATOMS:
        raise ResourceError(
            f"l_max={l_max} gives about {est:.3g} atoms; the limit is l_max <= "
            f"{SPHERE_L_MAX_LIMIT} and {MAX_ATOMS:.3g} atoms"
        )
    keys, weights = [], []
    l = np.arange(l_max + 1, dtype=np.int64)
    for l1 in range(l_max + 1):
        L2, L3 = np.meshgrid(l, l, indexing="ij")
        L1 = np.full_like(L2, l1)
        ok = _selection(L1, L2, L3)
        k = np.stack([L1[ok], L2[ok], L3[ok]], axis=1)
        keys.append(k)
        weights.append(gaunt_square_sum(k[:, 0], k[:, 1], k[:, 2]))
    keys = np.concatenate(keys)
    weights = np.concatenate(weights)
    return JointSpectralMeasure(
        ManifoldDescriptor.sphere2(), degree_frequency(l_max), keys, weights, "l"
    )
