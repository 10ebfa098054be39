import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import roots_legendre, sph_harm_y

from trispec.errors import ResourceError
from trispec.sphere import degree_frequency, gaunt_square_sum, sphere_measure, three_j_zero


@pytest.mark.parametrize(
    "l, v",
    [
        ((1, 1, 2), math.sqrt(2 / 15)),
        ((1, 1, 0), -1 / math.sqrt(3)),
        ((2, 2, 2), -math.sqrt(2 / 35)),
        ((1, 1, 1), 0.0),
        ((0, 0, 0), 1.0),
        ((1, 2, 4), 0.0),
    ],
)
def test_three_j_table(l, v):
    assert three_j_zero(*l) == pytest.approx(v, abs=1e-14)


def test_three_j_closed_form_l_l_0():
    for l in range(0, 300, 7):
        assert three_j_zero(l, l, 0) == pytest.approx((-1) ** l / math.sqrt(2 * l + 1), rel=1e-12)


def test_three_j_vectorized():
    l1 = np.array([1, 2, 3])
    v = three_j_zero(l1, l1, 2 * l1)
    assert v.shape == (3,)
    assert v[0] == pytest.approx(math.sqrt(2 / 15))


def test_three_j_table_limit():
    with pytest.raises(ResourceError):
        three_j_zero(20000, 20000, 0)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 150), st.integers(0, 150), st.integers(0, 300))
def test_three_j_symmetric(a, b, c):
    v = three_j_zero(a, b, c)
    for p in itertools.permutations((a, b, c)):
        assert three_j_zero(*p) == pytest.approx(v, rel=1e-13, abs=1e-300)


def _quadrature_gaunt(l1, l2, l3, nodes=16):
    x, w = roots_legendre(nodes)
    theta = np.arccos(x)
    phi = 2 * np.pi * np.arange(2 * nodes) / (2 * nodes)
    T, P = np.meshgrid(theta, phi, indexing="ij")
    W = np.outer(w, np.full(phi.size, 2 * np.pi / phi.size))
    Y = {(l, m): sph_harm_y(l, m, T, P) for l in {l1, l2, l3} for m in range(-l, l + 1)}
    total = 0.0
    for m1 in range(-l1, l1 + 1):
        for m2 in range(-l2, l2 + 1):
            for m3 in range(-l3, l3 + 1):
                v = np.sum(W * Y[l1, m1] * Y[l2, m2] * np.conj(Y[l3, m3]))
                total += abs(v) ** 2
    return total


@pytest.mark.parametrize("l", list(itertools.product(range(4), repeat=3)))
def test_gaunt_against_quadrature(l):
    assert gaunt_square_sum(*l) == pytest.approx(_quadrature_gaunt(*l), abs=1e-12)


@pytest.mark.parametrize("l, v", [((1, 1, 2), 3 / (2 * math.pi)), ((1, 1, 3), 0.0), ((0, 0, 0), 1 / (4 * math.pi))])
def test_gaunt_examples(l, v):
    assert gaunt_square_sum(*l) == pytest.approx(v, rel=1e-14)


def test_gaunt_completeness():
    for l1, l2 in [(0, 0), (3, 5), (40, 17), (120, 120)]:
        l3 = np.arange(abs(l1 - l2), l1 + l2 + 1)
        total = math.fsum(gaunt_square_sum(np.full_like(l3, l1), np.full_like(l3, l2), l3))
        assert total == pytest.approx((2 * l1 + 1) * (2 * l2 + 1) / (4 * math.pi), rel=1e-12)


def test_sphere_measure_small():
    m = sphere_measure(2)
    # the 11 ordered degree triples with l <= 2, even sum and the triangle rule
    assert len(m) == 11
    for l1, l2, l3 in m.keys:
        assert (l1 + l2 + l3) % 2 == 0
        assert abs(l1 - l2) <= l3 <= l1 + l2
    assert m.cutoff == pytest.approx(math.sqrt(6))
    assert m.freqs[0] == pytest.approx(degree_frequency(np.array(m.keys[0])))


def test_sphere_measure_matches_gaunt():
    m = sphere_measure(8)
    for k, v in zip(m.keys, m.values):
        assert v == pytest.approx(gaunt_square_sum(*k), rel=1e-14)
    brute = [
        l for l in itertools.product(range(9), repeat=3) if gaunt_square_sum(*l) > 0
    ]
    assert len(m) == len(brute)


def test_sphere_measure_limits():
    with pytest.raises(ResourceError):
        sphere_measure(5000)
