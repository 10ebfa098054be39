"""Triangle geometry in frequency space and Leray measures of F(xi, eta) = (|xi|, |eta|, |xi + eta|)."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple, Sequence

import numpy as np
from scipy.special import gammaln, roots_legendre

from .errors import DomainError

DEFAULT_REL_TOL = 1e-9


class FrequencyTriple(NamedTuple):
    t1: float
    t2: float
    t3: float

    def scaled(self, s: float) -> "FrequencyTriple":
        return FrequencyTriple(s * self.t1, s * self.t2, s * self.t3)


def as_triple(t: Sequence[float]) -> FrequencyTriple:
    if len(t) != 3:
        raise DomainError(f"expected three frequencies, got {len(t)}")
    out = FrequencyTriple(*(float(x) for x in t))
    if not all(math.isfinite(x) for x in out):
        raise DomainError(f"non-finite frequency in {tuple(t)}")
    return out


class Kind(enum.Enum):
    GOOD = "good"
    BAD = "bad"
    DEGENERATE = "degenerate"


@dataclass(frozen=True)
class TriangleClass:
    kind: Kind
    margin: float


@dataclass(frozen=True)
class ManifoldDescriptor:
    """One of the two model manifolds: the square flat torus or the round 2-sphere."""

    model: str  # "torus" or "sphere"
    dim: int

    def __post_init__(self):
        if self.model not in ("torus", "sphere"):
            raise DomainError(f"unknown model {self.model!r}")
        if self.dim < 2:
            raise DomainError("dimension must be at least 2")
        if self.model == "sphere" and self.dim != 2:
            raise DomainError("only the 2-sphere is supported")

    @classmethod
    def torus(cls, n: int) -> "ManifoldDescriptor":
        return cls("torus", int(n))

    @classmethod
    def sphere2(cls) -> "ManifoldDescriptor":
        return cls("sphere", 2)

    @property
    def volume(self) -> float:
        if self.model == "torus":
            return (2 * math.pi) ** self.dim
        return 4 * math.pi

    @property
    def injectivity_radius(self) -> float:
        return math.pi

    @property
    def name(self) -> str:
        return f"torus{self.dim}" if self.model == "torus" else "sphere"

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "dim": self.dim,
            "volume": self.volume,
            "injectivity_radius": self.injectivity_radius,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ManifoldDescriptor":
        return cls(d["model"], int(d["dim"]))


def triangle_margin(t: Sequence[float]) -> float:
    a, b, c = t
    return min(a + b - c, b + c - a, c + a - b)


def classify(t: Sequence[float], tolerance: float | None = None) -> TriangleClass:
    """Classify a positive triple as a good, bad or degenerate triangle.

    The default tolerance is ``1e-9 * |t|``.
    """
    t = as_triple(t)
    if min(t) <= 0:
        raise DomainError(f"frequencies must be strictly positive, got {tuple(t)}")
    if tolerance is None:
        tolerance = DEFAULT_REL_TOL * math.hypot(*t)
    if tolerance < 0:
        raise DomainError("tolerance must be nonnegative")
    margin = triangle_margin(t)
    if margin > tolerance:
        kind = Kind.GOOD
    elif margin < -tolerance:
        kind = Kind.BAD
    else:
        kind = Kind.DEGENERATE
    return TriangleClass(kind, margin)


def _require_good(t: Sequence[float]) -> FrequencyTriple:
    t = as_triple(t)
    cls = classify(t, 0.0)
    if cls.kind is not Kind.GOOD:
        raise DomainError(f"triple {tuple(t)} is triangle-{cls.kind.value} (margin {cls.margin:g})")
    return t


def heron_area(t: Sequence[float]) -> float:
    """Area of the triangle with side lengths ``t`` (Kahan's stable Heron form)."""
    a, b, c = sorted(_require_good(t), reverse=True)
    prod = (a + (b + c)) * (c - (a - b)) * (c + (a - b)) * (a + (b - c))
    return 0.25 * math.sqrt(prod)


def unit_sphere_volume(k: int) -> float:
    """Surface measure of the unit k-sphere in R^(k+1)."""
    if k < 0:
        raise DomainError("sphere dimension must be nonnegative")
    if k == 0:
        return 2.0
    return 2 * math.pi ** ((k + 1) / 2) / math.gamma((k + 1) / 2)


def unit_ball_volume(n: int) -> float:
    return math.exp(0.5 * n * math.log(math.pi) - gammaln(0.5 * n + 1))


def leray_volume(n: int, t: Sequence[float]) -> float:
    """Leray measure of the triangle configurations with side lengths ``t`` in R^n x R^n."""
    if n < 2:
        raise DomainError("dimension must be at least 2")
    t = _require_good(t)
    two_area = 2 * heron_area(t)
    return (
        unit_sphere_volume(n - 1)
        * unit_sphere_volume(n - 2)
        * t.t1 * t.t2 * t.t3
        * two_area ** (n - 3)
    )


def _random_annulus(rng: np.random.Generator, n: int, size: int, r_lo: float, r_hi: float) -> np.ndarray:
    u = rng.random(size)
    r = (r_lo**n + u * (r_hi**n - r_lo**n)) ** (1.0 / n)
    v = rng.standard_normal((size, n))
    v *= (r / np.linalg.norm(v, axis=1))[:, None]
    return v


def leray_volume_oracle(
    n: int,
    t: Sequence[float],
    shell_width: float | None = None,
    samples: int = 10**7,
    seed: int = 0,
    centered: bool = True,
    chunk: int = 1 << 20,
) -> tuple[float, float]:
    """Monte Carlo estimate of ``leray_volume`` from a thickened level set.

    Estimates ``Leb{F in window} / h^3`` where the window is the cube of side
    ``h`` around ``t`` (``centered``) or ``t + [0, h]^3``. The coarea formula
    makes this the window average of the Leray measure, so it converges to
    ``leray_volume(n, t)`` as ``h -> 0``. Centered windows have O(h^2) bias,
    one-sided windows O(h).

    Each chunk of samples draws from its own spawned seed sequence, so the
    result depends only on ``seed``, ``samples`` and ``chunk``.

    Returns ``(estimate, std_error)``.
    """
    if n < 2:
        raise DomainError("dimension must be at least 2")
    t = _require_good(t)
    margin = triangle_margin(t)
    h = margin / 20 if shell_width is None else float(shell_width)
    # a centered window moves the margin by up to 1.5 h, a one-sided one by up to h
    reach = 1.5 * h if centered else h
    if h <= 0 or reach >= margin:
        raise DomainError(f"shell width {h:g} too large for triangle margin {margin:g}")
    if samples < 10**4:
        raise DomainError("at least 1e4 samples are required")

    off = h / 2 if centered else 0.0
    lo = [x - off for x in t]
    hi = [x + h for x in lo]
    ball = unit_ball_volume(n)
    vol1 = ball * (hi[0] ** n - lo[0] ** n)
    vol2 = ball * (hi[1] ** n - lo[1] ** n)

    n_chunks = -(-samples // chunk)
    streams = np.random.SeedSequence(seed).spawn(n_chunks)
    hits = 0
    for i, ss in enumerate(streams):
        size = min(chunk, samples - i * chunk)
        rng = np.random.default_rng(ss)
        xi = _random_annulus(rng, n, size, lo[0], hi[0])
        eta = _random_annulus(rng, n, size, lo[1], hi[1])
        r3 = np.linalg.norm(xi + eta, axis=1)
        hits += int(np.count_nonzero((r3 >= lo[2]) & (r3 < hi[2])))

    p = hits / samples
    scale = vol1 * vol2 / h**3
    return scale * p, scale * math.sqrt(p * (1 - p) / samples)


@lru_cache(maxsize=8)
def _gauss_legendre(nodes: int) -> tuple[np.ndarray, np.ndarray]:
    return roots_legendre(nodes)


def interface_integral(n: int, t1: float, t2: float, quad_nodes: int = 4096) -> float:
    """Integral of ``leray_volume(n, (t1, t2, s))`` over ``|t1 - t2| < s < t1 + t2``.

    Integrated in the exterior angle theta between the two sides, with
    ``s = sqrt(t1^2 + t2^2 + 2 t1 t2 cos theta)`` and ``ds = t1 t2 sin theta / s dtheta``,
    which removes the inverse-area endpoint singularity for n = 2.
    """
    if n < 2:
        raise DomainError("dimension must be at least 2")
    if t1 <= 0 or t2 <= 0:
        raise DomainError("t1 and t2 must be positive")
    if quad_nodes < 64:
        raise DomainError("at least 64 quadrature nodes are required")
    x, w = _gauss_legendre(quad_nodes)
    theta = 0.5 * math.pi * (x + 1)
    w = 0.5 * math.pi * w
    vals = np.empty_like(theta)
    for i, th in enumerate(theta):
        # 2 + 2 cos(theta) = 4 cos^2(theta / 2), without cancellation near theta = pi
        s = math.sqrt((t1 - t2) ** 2 + 4 * t1 * t2 * math.cos(th / 2) ** 2)
        vals[i] = leray_volume(n, (t1, t2, s)) * t1 * t2 * math.sin(th) / s
    return math.fsum(w * vals)
