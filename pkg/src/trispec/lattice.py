"""Exact lattice computations for the square flat torus R^n / 2 pi Z^n.

The triple product of three Fourier exponentials is ``(2 pi)^(-n/2)`` when
``m + j = k`` and zero otherwise, so the joint spectral measure puts weight
``(2 pi)^-n`` on ``(|m|, |j|, |m + j|)`` for every pair ``(m, j)`` of lattice
vectors. All norm arithmetic here is on integer squared norms.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from .errors import DomainError, ResourceError
from .geometry import ManifoldDescriptor
from .measure import JointSpectralMeasure, shell_counts

SUPPORTED_DIMS = (2, 3, 4)
DEFAULT_MAX_PAIRS = 2 * 10**8


def _check_dim(n: int, allowed=SUPPORTED_DIMS) -> None:
    if n not in allowed:
        raise DomainError(f"dimension {n} not supported (choose from {allowed})")


def enumerate_shell(n: int, q: int) -> list[tuple[int, ...]]:
    """All ``v`` in Z^n with ``|v|^2 == q``, in lexicographic order."""
    _check_dim(n)
    if q < 0:
        raise DomainError("squared norm must be nonnegative")
    out: list[tuple[int, ...]] = []

    def rec(dims_left: int, rem: int, prefix: tuple[int, ...]) -> None:
        b = math.isqrt(rem)
        if dims_left == 1:
            if b * b == rem:
                out.extend([prefix + (-b,), prefix + (b,)] if b else [prefix + (0,)])
            return
        for x in range(-b, b + 1):
            rec(dims_left - 1, rem - x * x, prefix + (x,))

    rec(n, int(q), ())
    return out


@lru_cache(maxsize=4096)
def shell_array(n: int, q: int) -> np.ndarray:
    pts = enumerate_shell(n, q)
    arr = np.array(pts, dtype=np.int64).reshape(-1, n)
    arr.setflags(write=False)
    return arr


def triangle_count(n: int, q1: int, q2: int, q3: int) -> int:
    """``#{(m, j) in Z^n x Z^n : |m|^2 = q1, |j|^2 = q2, |m + j|^2 = q3}``."""
    _check_dim(n)
    if min(q1, q2, q3) < 0:
        raise DomainError("squared norms must be nonnegative")
    diff = q3 - q1 - q2
    if diff % 2:
        return 0
    dot = diff // 2
    if dot * dot > q1 * q2:
        return 0
    # the count is symmetric in (q1, q2): enumerate the smaller shell
    r = shell_counts(n, max(q1, q2))
    a, b = (q1, q2) if r[q1] <= r[q2] else (q2, q1)
    small, big = shell_array(n, a), shell_array(n, b)
    if not len(small) or not len(big):
        return 0
    return int(np.count_nonzero(small @ big.T == dot))


def lattice_ball(n: int, radius: float) -> tuple[np.ndarray, np.ndarray]:
    """Lattice points with ``|m| <= radius`` and their squared norms, lexicographic."""
    k = math.floor(radius)
    axis = np.arange(-k, k + 1, dtype=np.int64)
    grids = np.meshgrid(*([axis] * n), indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=1)
    q = np.sum(pts * pts, axis=1)
    keep = q <= math.floor(radius * radius)
    return pts[keep], q[keep]


def norm_grid(n: int, k: int) -> np.ndarray:
    """Euclidean norms on the cube ``[-k, k]^n`` as an n-dimensional array."""
    axis = np.arange(-k, k + 1, dtype=float) ** 2
    acc = np.zeros((2 * k + 1,) * n)
    for d in range(n):
        shape = [1] * n
        shape[d] = -1
        acc = acc + axis.reshape(shape)
    return np.sqrt(acc)


def _pair_iter(P1: np.ndarray, q1: np.ndarray, P2: np.ndarray, q2: np.ndarray, chunk_elems: int = 1 << 22):
    """Yield ``(rows, q3)`` blocks of the pairwise squared norms ``|m + j|^2``."""
    rows = max(1, chunk_elems // max(1, len(P2)))
    P2f = P2.T.astype(float)
    for s in range(0, len(P1), rows):
        blk = P1[s : s + rows]
        dots = np.rint(blk.astype(float) @ P2f).astype(np.int64)
        yield s, q1[s : s + rows, None] + q2[None, :] + 2 * dots


def _in_interval(q: np.ndarray, lo: float, hi: float) -> np.ndarray:
    f = np.sqrt(q.astype(float))
    return (f >= lo) & (f < hi)


class TorusMeasure(JointSpectralMeasure):
    """Joint spectral measure of the flat torus, evaluated lazily from the lattice.

    The atoms are all triples ``(|m|^2, |j|^2, |m + j|^2)`` with every
    frequency at most ``cutoff``. Box masses and tail sums are counted
    directly over lattice pairs; the explicit atom list is only built when
    ``keys`` or ``values`` is accessed, subject to ``max_pairs``.
    """

    def __init__(self, n: int, cutoff: float, max_pairs: int = DEFAULT_MAX_PAIRS):
        _check_dim(n, (2, 3))
        if cutoff < 1:
            raise DomainError("cutoff must be at least 1")
        self.manifold = ManifoldDescriptor.torus(n)
        self.cutoff = float(cutoff)
        self.key_kind = "q"
        self.max_pairs = int(max_pairs)
        self._keys = None
        self._values = None

    @property
    def n(self) -> int:
        return self.manifold.dim

    @property
    def q_max(self) -> int:
        return math.floor(self.cutoff * self.cutoff)

    @property
    def keys(self) -> np.ndarray:
        if self._keys is None:
            self._materialize()
        return self._keys

    @property
    def values(self) -> np.ndarray:
        if self._values is None:
            self._materialize()
        return self._values

    def _materialize(self) -> None:
        P, q = lattice_ball(self.n, self.cutoff)
        pairs = len(P) ** 2
        if pairs > self.max_pairs:
            raise ResourceError(
                f"torus{self.n} atoms at cutoff {self.cutoff:g} need {pairs:.3g} lattice pairs, "
                f"over the budget of {self.max_pairs:.3g}; lower the cutoff or use lattice-native "
                "box, tail and convolution routines"
            )
        base = self.q_max + 1
        found_keys, found_counts = [], []
        for s, q3 in _pair_iter(P, q, P, q):
            ok = q3 <= self.q_max
            r, c = np.nonzero(ok)
            code = (q[s + r] * base + q[c]) * base + q3[r, c]
            u, cnt = np.unique(code, return_counts=True)
            found_keys.append(u)
            found_counts.append(cnt)
        code = np.concatenate(found_keys)
        cnt = np.concatenate(found_counts)
        u, inv = np.unique(code, return_inverse=True)
        total = np.zeros(len(u), dtype=np.int64)
        np.add.at(total, inv, cnt)
        keys = np.stack([u // (base * base), (u // base) % base, u % base], axis=1)
        keys.setflags(write=False)
        total.setflags(write=False)
        self._keys, self._values = keys, total

    def _points_in(self, lo: float, hi: float) -> tuple[np.ndarray, np.ndarray]:
        P, q = lattice_ball(self.n, min(hi, self.cutoff))
        keep = _in_interval(q, lo, hi)
        return P[keep], q[keep]

    def box_count(self, box) -> int:
        b = self._checked_box(box)
        if np.any(b[:, 1] <= b[:, 0]):
            return 0
        P1, q1 = self._points_in(*b[0])
        P2, q2 = self._points_in(*b[1])
        total = 0
        for _, q3 in _pair_iter(P1, q1, P2, q2):
            total += int(np.count_nonzero(_in_interval(q3, b[2, 0], b[2, 1])))
        return total

    def box_measure(self, box) -> float:
        return self.box_count(box) * self.weight_scale

    def tail_count(self, t1: float, t2: float, eps: float) -> int:
        thr = self._check_tail(t1, t2, eps)
        P1, q1 = lattice_ball(self.n, t1)
        P2, q2 = lattice_ball(self.n, t2)
        total = 0
        for _, q3 in _pair_iter(P1, q1, P2, q2):
            f3 = np.sqrt(q3.astype(float))
            total += int(np.count_nonzero((f3 >= thr) & (q3 <= self.q_max)))
        return total

    def tail_sum(self, t1: float, t2: float, eps: float) -> float:
        return self.tail_count(t1, t2, eps) * self.weight_scale

    def total_mass(self) -> float:
        return int(self.values.sum()) * self.weight_scale


def torus_measure(n: int, cutoff: float, max_pairs: int = DEFAULT_MAX_PAIRS) -> TorusMeasure:
    """Joint spectral measure of T^n below ``cutoff`` (atoms built on demand)."""
    return TorusMeasure(n, cutoff, max_pairs=max_pairs)


def annulus_count(n: int, r_lo: float, r_hi: float) -> int:
    """``#{m in Z^n : r_lo <= |m| < r_hi}``."""
    if not 0 <= r_lo < r_hi:
        raise DomainError("need 0 <= r_lo < r_hi")
    r = shell_counts(n, math.floor(r_hi * r_hi))
    return int(r[_in_interval(np.arange(len(r)), r_lo, r_hi)].sum())
