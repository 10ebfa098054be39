import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from trispec.errors import ConstructionError, DomainError
from trispec.geometry import ManifoldDescriptor
from trispec.lattice import torus_measure
from trispec.measure import JointSpectralMeasure
from trispec.smoothing import (
    build_kernel,
    bump_derivative_l1,
    convolve,
    eval_rho,
    interface_sum,
    missing_atom_bound,
    separable_interface_sum,
)
from trispec.sphere import sphere_measure
from trispec.verify import main_term

DELTA = 0.9 * math.pi


@pytest.fixture(scope="module")
def kernel():
    return build_kernel(DELTA)


def explicit(m):
    return JointSpectralMeasure(m.manifold, m.cutoff, m.keys, m.values, m.key_kind)


def fourier(kernel, xi, step=1 / 512):
    x = np.arange(0, kernel.trunc_radius, step)
    c = kernel.chi(x)
    return np.array([2 * np.trapezoid(c * np.cos(z * x), x) for z in np.atleast_1d(xi)])


def test_unit_mass(kernel):
    x = np.arange(0, kernel.trunc_radius, 1 / 512)
    assert abs(2 * np.trapezoid(kernel.chi(x), x) - 1) <= 1e-9


def test_nonnegative(kernel):
    assert kernel.chi(np.linspace(-400, 400, 400_001)).min() >= -1e-12


def test_fourier_leakage(kernel):
    leak = np.abs(fourier(kernel, np.linspace(1.02 * DELTA, 4 * DELTA, 200))).max()
    assert leak <= 1e-8 * fourier(kernel, 0.0)[0]


def test_fourier_matches_hat_grid(kernel):
    idx = np.arange(0, len(kernel.hat_xi), 37)
    assert np.allclose(fourier(kernel, kernel.hat_xi[idx]), kernel.hat_grid[idx], atol=1e-9)


def test_hat_support(kernel):
    assert np.abs(kernel.hat_xi).max() <= DELTA * (1 + 1e-12)


def test_truncation_and_tail(kernel):
    assert kernel.tail_bound <= 1e-10
    assert kernel.chi(kernel.trunc_radius + 1e-9) == 0.0
    assert kernel.chi(0.0) == pytest.approx(kernel.peak)
    beyond = kernel.eval_table[kernel.table_x >= kernel.trunc_radius]
    assert beyond.max() <= 1e-12 * kernel.peak


def test_grid_doubling_stable(kernel):
    x = np.linspace(-kernel.trunc_radius, kernel.trunc_radius, 20001)
    finer = build_kernel(DELTA, 2 * kernel.grid_points)
    assert np.abs(finer.chi(x) - kernel.chi(x)).max() <= 1e-8


def test_build_errors():
    with pytest.raises(DomainError):
        build_kernel(-1)
    with pytest.raises(ConstructionError):
        # too narrow a band: chi decays too slowly for the table
        build_kernel(0.02)


def test_bump_derivative_norm():
    # ||g'||_1 = 2 max g = 2 / e for the unit bump
    assert bump_derivative_l1(1) == pytest.approx(2 / math.e, rel=1e-6)


def test_eval_rho(kernel):
    assert eval_rho(kernel, (0, 0, 0)) == pytest.approx(kernel.peak**3)
    assert eval_rho(kernel, (kernel.trunc_radius + 1, 0, 0)) == 0.0


def test_single_atom(kernel):
    man = ManifoldDescriptor.torus(2)
    m = JointSpectralMeasure(man, 300, [[9, 16, 25]], [3], "q")
    w = 3 * (2 * math.pi) ** -2
    assert convolve(m, kernel, (3, 4, 5), rel_tol=math.inf) == pytest.approx(w * kernel.peak**3, rel=1e-14)


def test_empty_measure(kernel):
    m = JointSpectralMeasure(ManifoldDescriptor.sphere2(), 10, np.zeros((0, 3), int), [], "l")
    assert convolve(m, kernel, (3, 4, 5), rel_tol=math.inf) == 0.0


@pytest.mark.parametrize("tau", [(5, 6, 8), (2.5, 7, 6.2), (10, 10, 1)])
def test_fft_equals_atom_sum(kernel, tau):
    lazy = torus_measure(2, 25)
    a = convolve(lazy, kernel, tau, rel_tol=math.inf)
    b = convolve(explicit(lazy), kernel, tau, rel_tol=math.inf)
    assert a == pytest.approx(b, rel=1e-10, abs=1e-15)


def test_linearity(kernel):
    a = sphere_measure(30)
    tau = (10, 12, 15)
    assert convolve(a + a, kernel, tau, rel_tol=math.inf) == pytest.approx(
        2 * convolve(a, kernel, tau, rel_tol=math.inf), rel=1e-14
    )


@settings(max_examples=20, deadline=None)
@given(st.floats(0.5, 20), st.floats(0.5, 20), st.floats(0.5, 20))
def test_convolve_nonnegative(t1, t2, t3):
    k = build_kernel(DELTA)
    assert convolve(sphere_measure(20), k, (t1, t2, t3), rel_tol=math.inf) >= 0


def test_safe_region_violation_names_cutoff(kernel):
    with pytest.raises(DomainError, match="sufficient"):
        convolve(torus_measure(2, 40), kernel, (24, 32, 40))


def test_missing_atom_bound_zero_inside(kernel):
    m = torus_measure(2, 300)
    assert missing_atom_bound(m, kernel, (48, 64, 80)) == 0.0


def test_torus_main_term(kernel):
    tau = (48, 64, 80)
    value = convolve(torus_measure(2, 300), kernel, tau)
    assert abs(value / main_term(ManifoldDescriptor.torus(2), tau) - 1) <= 0.15


def test_sphere_safe_by_bound(kernel):
    m = sphere_measure(100)
    tau = (36, 48, 60)
    value = convolve(m, kernel, tau)
    assert missing_atom_bound(m, kernel, tau) <= 1e-6 * value


def test_interface_sum_fft_vs_atoms(kernel):
    lazy = torus_measure(2, 25)
    a = interface_sum(lazy, kernel, 6, 7, rel_tol=math.inf)
    b = interface_sum(explicit(lazy), kernel, 6, 7, rel_tol=math.inf)
    assert a == pytest.approx(b, rel=1e-10)


def test_interface_sum_separable(kernel):
    m = torus_measure(2, 400)
    assert interface_sum(m, kernel, 40, 40) == pytest.approx(
        separable_interface_sum(m, kernel, 40, 40), rel=1e-10
    )
