"""Atomic joint spectral measures on R^3 and their JSON documents."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, Sequence

import numpy as np

from .errors import DomainError
from .geometry import FrequencyTriple, ManifoldDescriptor

SCHEMA = "trispec.measure"
SCHEMA_VERSION = 1


@dataclass(frozen=True)
class SpectralAtom:
    freqs: FrequencyTriple
    weight: float


Box = Sequence[Sequence[float]]


def _check_box(box: Box) -> np.ndarray:
    b = np.asarray(box, dtype=float)
    if b.shape != (3, 2):
        raise DomainError("a box is three half-open intervals [lo, hi)")
    return b


def key_frequencies(keys: np.ndarray, key_kind: str) -> np.ndarray:
    keys = np.asarray(keys, dtype=np.int64)
    if key_kind == "q":
        return np.sqrt(keys.astype(float))
    if key_kind == "l":
        k = keys.astype(float)
        return np.sqrt(k * (k + 1))
    raise DomainError(f"unknown key kind {key_kind!r}")


@lru_cache(maxsize=16)
def shell_counts(n: int, q_max: int) -> np.ndarray:
    """``r_n(q)`` for ``0 <= q <= q_max``: number of vectors in Z^n with squared norm q."""
    r = np.zeros(q_max + 1, dtype=np.int64)
    r[0] = 1
    squares = np.arange(0, math.isqrt(q_max) + 1, dtype=np.int64) ** 2
    for _ in range(n):
        new = r.copy()
        for s in squares[1:]:
            new[s:] += 2 * r[: q_max + 1 - s]
        r = new
    r.setflags(write=False)
    return r


def model_spectrum(manifold: ManifoldDescriptor, lo: float, hi: float) -> tuple[np.ndarray, np.ndarray]:
    """Distinct frequencies in ``[lo, hi]`` and their multiplicities."""
    lo = max(lo, 0.0)
    if hi < lo:
        return np.empty(0), np.empty(0, dtype=np.int64)
    if manifold.model == "torus":
        q_max = math.floor(hi * hi)
        r = shell_counts(manifold.dim, q_max)
        q = np.nonzero(r)[0]
        f = np.sqrt(q.astype(float))
        keep = f >= lo
        return f[keep], r[q[keep]]
    l = np.arange(0, math.floor(hi) + 1, dtype=np.int64)
    f = key_frequencies(l, "l")
    keep = (f >= lo) & (f <= hi)
    return f[keep], 2 * l[keep] + 1


def triangle_slack(manifold: ManifoldDescriptor) -> float:
    """Every atom satisfies each ``lam_k <= lam_i + lam_j + slack``.

    Exact vector triangles on the torus. On the sphere the selection rule is
    on degrees and ``l <= sqrt(l(l+1)) < l + 1/2``.
    """
    return 0.0 if manifold.model == "torus" else 0.5


class JointSpectralMeasure:
    """Finite atomic measure with exact integer keys.

    Keys are squared lattice norms ``(q1, q2, q3)`` with integer counts
    (``key_kind="q"``, weight ``(2 pi)^-n * count``) or spherical-harmonic
    degrees ``(l1, l2, l3)`` with float weights (``key_kind="l"``). Atoms with
    equal keys are merged and stored in key-sorted order.
    """

    def __init__(self, manifold: ManifoldDescriptor, cutoff: float, keys, values, key_kind: str):
        self.manifold = manifold
        self.cutoff = float(cutoff)
        self.key_kind = key_kind
        keys = np.asarray(keys, dtype=np.int64).reshape(-1, 3)
        values = np.asarray(values)
        if key_kind == "q":
            values = values.astype(np.int64)
        elif key_kind == "l":
            values = values.astype(float)
        else:
            raise DomainError(f"unknown key kind {key_kind!r}")
        if len(values) != len(keys):
            raise DomainError("keys and values differ in length")
        if np.any(values < 0):
            raise DomainError("atom weights must be nonnegative")
        if len(keys):
            uniq, inv = np.unique(keys, axis=0, return_inverse=True)
            inv = inv.reshape(-1)
            if len(uniq) != len(keys) or np.any(inv != np.arange(len(keys))):
                merged = np.zeros(len(uniq), dtype=values.dtype)
                np.add.at(merged, inv, values)
                keys, values = uniq, merged
        self._keys = keys
        self._values = values
        self._keys.setflags(write=False)
        self._values.setflags(write=False)

    # the lazy torus measure overrides these two
    @property
    def keys(self) -> np.ndarray:
        return self._keys

    @property
    def values(self) -> np.ndarray:
        return self._values

    @property
    def weight_scale(self) -> float:
        return (2 * math.pi) ** (-self.manifold.dim) if self.key_kind == "q" else 1.0

    @property
    def weights(self) -> np.ndarray:
        return self.values * self.weight_scale

    @property
    def freqs(self) -> np.ndarray:
        return key_frequencies(self.keys, self.key_kind)

    @property
    def triangle_slack(self) -> float:
        return triangle_slack(self.manifold)

    def __len__(self) -> int:
        return len(self.keys)

    def atoms(self) -> Iterator[SpectralAtom]:
        for f, w in zip(self.freqs, self.weights):
            yield SpectralAtom(FrequencyTriple(*map(float, f)), float(w))

    def total_mass(self) -> float:
        if self.key_kind == "q":
            return int(self.values.sum()) * self.weight_scale
        return float(np.sum(self.values))

    def spectrum(self, lo: float, hi: float) -> tuple[np.ndarray, np.ndarray]:
        return model_spectrum(self.manifold, lo, hi)

    def _box_mask(self, b: np.ndarray) -> np.ndarray:
        f = self.freqs
        return np.all((f >= b[:, 0]) & (f < b[:, 1]), axis=1)

    def box_count(self, box: Box) -> int:
        """Exact integer lattice count in ``box`` (count-keyed measures only)."""
        if self.key_kind != "q":
            raise DomainError("integer counts exist only for lattice-keyed measures")
        b = self._checked_box(box)
        return int(self.values[self._box_mask(b)].sum())

    def box_measure(self, box: Box) -> float:
        b = self._checked_box(box)
        if self.key_kind == "q":
            return self.box_count(b) * self.weight_scale
        return float(np.sum(self.values[self._box_mask(b)]))

    def _checked_box(self, box: Box) -> np.ndarray:
        b = _check_box(box)
        nonempty = bool(np.all(b[:, 1] > b[:, 0]))
        if nonempty and np.any(b[:, 1] > self.cutoff * (1 + 1e-12)):
            raise DomainError(
                f"box reaches {b[:, 1].max():g}, beyond the measure cutoff {self.cutoff:g}; "
                f"rebuild with cutoff >= {b[:, 1].max():g}"
            )
        return b

    def tail_sum(self, t1: float, t2: float, eps: float) -> float:
        thr = self._check_tail(t1, t2, eps)
        f = self.freqs
        mask = (f[:, 0] <= t1) & (f[:, 1] <= t2) & (f[:, 2] >= thr)
        if self.key_kind == "q":
            return int(self.values[mask].sum()) * self.weight_scale
        return float(np.sum(self.values[mask]))

    def _check_tail(self, t1: float, t2: float, eps: float) -> float:
        if t1 <= 0 or t2 <= 0:
            raise DomainError("t1 and t2 must be positive")
        thr = (1 + eps) * (t1 + t2)
        if thr > self.cutoff:
            raise DomainError(f"tail threshold {thr:g} exceeds the measure cutoff {self.cutoff:g}")
        # atoms with third frequency above the cutoff are not represented
        if t1 + t2 + self.triangle_slack > self.cutoff:
            raise DomainError(
                f"tail sum needs cutoff >= t1 + t2 + {self.triangle_slack:g} = "
                f"{t1 + t2 + self.triangle_slack:g} to be complete"
            )
        return thr

    def __add__(self, other: "JointSpectralMeasure") -> "JointSpectralMeasure":
        if other.manifold != self.manifold or other.key_kind != self.key_kind:
            raise DomainError("can only add measures on the same model")
        return JointSpectralMeasure(
            self.manifold,
            min(self.cutoff, other.cutoff),
            np.concatenate([self.keys, other.keys]),
            np.concatenate([self.values, other.values]),
            self.key_kind,
        )

    def to_dict(self) -> dict:
        names = ("q1", "q2", "q3", "count") if self.key_kind == "q" else ("l1", "l2", "l3", "weight")
        if self.key_kind == "q":
            rows = [dict(zip(names, (*map(int, k), int(v)))) for k, v in zip(self.keys, self.values)]
        else:
            rows = [dict(zip(names, (*map(int, k), float(v)))) for k, v in zip(self.keys, self.values)]
        return {
            "schema": SCHEMA,
            "version": SCHEMA_VERSION,
            "manifold": self.manifold.to_dict(),
            "cutoff": self.cutoff,
            "key_kind": self.key_kind,
            "atoms": rows,
        }

    def write_json(self, path) -> None:
        # one atom per line keeps large documents diffable and streamable
        d = self.to_dict()
        atoms = d.pop("atoms")
        head = json.dumps(d, sort_keys=True)
        with open(path, "w") as fh:
            fh.write(head[:-1] + ', "atoms": [\n')
            for i, a in enumerate(atoms):
                fh.write(json.dumps(a, sort_keys=True))
                fh.write(",\n" if i + 1 < len(atoms) else "\n")
            fh.write("]}\n")

    @classmethod
    def from_dict(cls, d: dict) -> "JointSpectralMeasure":
        if d.get("schema") != SCHEMA:
            raise DomainError("not a measure document")
        if d.get("version") != SCHEMA_VERSION:
            raise DomainError(f"unsupported measure document version {d.get('version')}")
        kind = d["key_kind"]
        names = ("q1", "q2", "q3", "count") if kind == "q" else ("l1", "l2", "l3", "weight")
        atoms = d["atoms"]
        keys = np.array([[a[names[0]], a[names[1]], a[names[2]]] for a in atoms], dtype=np.int64)
        values = [a[names[3]] for a in atoms]
        return cls(ManifoldDescriptor.from_dict(d["manifold"]), d["cutoff"], keys.reshape(-1, 3), values, kind)

    @classmethod
    def read_json(cls, path) -> "JointSpectralMeasure":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def box_measure(measure: JointSpectralMeasure, box: Box) -> float:
    """Mass of ``measure`` in the half-open box ``[a1,b1) x [a2,b2) x [a3,b3)``."""
    return measure.box_measure(box)


def tail_sum(measure: JointSpectralMeasure, t1: float, t2: float, eps: float) -> float:
    """Mass of atoms with ``lam_i <= t1``, ``lam_j <= t2`` and ``lam_k >= (1 + eps)(t1 + t2)``."""
    return measure.tail_sum(t1, t2, eps)
