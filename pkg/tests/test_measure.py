import math

import numpy as np
import pytest

from trispec.errors import DomainError
from trispec.geometry import ManifoldDescriptor
from trispec.lattice import torus_measure
from trispec.measure import JointSpectralMeasure, box_measure, model_spectrum, shell_counts, tail_sum
from trispec.sphere import sphere_measure


def explicit(m):
    return JointSpectralMeasure(m.manifold, m.cutoff, m.keys, m.values, m.key_kind)


def test_shell_counts():
    r = shell_counts(2, 25)
    assert list(r[:6]) == [1, 4, 4, 0, 4, 8]
    assert r[25] == 12
    assert shell_counts(3, 3)[3] == 8


def test_model_spectrum_sphere():
    f, mult = model_spectrum(ManifoldDescriptor.sphere2(), 0, 3)
    assert np.allclose(f, [0, math.sqrt(2), math.sqrt(6)])
    assert list(mult) == [1, 3, 5]


def test_merge_duplicate_keys():
    man = ManifoldDescriptor.torus(2)
    m = JointSpectralMeasure(man, 3, [[1, 1, 2], [1, 1, 2], [0, 1, 1]], [3, 5, 4], "q")
    assert len(m) == 2
    assert m.box_count([(1, 1.1), (1, 1.1), (1.4, 1.5)]) == 8


def test_empty_box_is_zero():
    m = sphere_measure(5)
    assert box_measure(m, [(1, 1), (0, 2), (0, 2)]) == 0.0


def test_box_beyond_cutoff():
    m = sphere_measure(5)
    with pytest.raises(DomainError, match="rebuild with cutoff"):
        box_measure(m, [(0, 1), (0, 1), (0, 100)])


def test_bad_cone_box_zero():
    m = explicit(torus_measure(2, 30))
    assert box_measure(m, [(3, 4), (4, 5), (12, 13)]) == 0.0


def test_box_additivity():
    m = sphere_measure(12)
    whole = box_measure(m, [(0, 12.4), (0, 12.4), (0, 12.4)])
    parts = sum(box_measure(m, [(a, b), (0, 12.4), (0, 12.4)]) for a, b in [(0, 4), (4, 9.5), (9.5, 12.4)])
    assert parts == pytest.approx(whole, rel=1e-13)


def test_tail_sum_function():
    m = explicit(torus_measure(2, 25))
    assert tail_sum(m, 10, 10, 0.1) == 0
    assert tail_sum(m, 10, 10, -0.5) > 0
    with pytest.raises(DomainError):
        tail_sum(m, 10, 10, 0.5)
    with pytest.raises(DomainError):
        tail_sum(m, 0, 10, 0.1)


def test_tail_needs_complete_third_frequency():
    m = explicit(torus_measure(2, 15))
    with pytest.raises(DomainError, match="cutoff"):
        tail_sum(m, 10, 10, -0.5)


def test_json_round_trip(tmp_path):
    for m in (explicit(torus_measure(2, 6)), sphere_measure(6)):
        p = tmp_path / f"{m.manifold.name}.json"
        m.write_json(p)
        back = JointSpectralMeasure.read_json(p)
        assert back.manifold == m.manifold
        assert back.cutoff == m.cutoff
        assert np.array_equal(back.keys, m.keys)
        assert np.array_equal(back.values, m.values)
        text = p.read_text()
        m.write_json(p)
        assert p.read_text() == text


def test_json_schema_check(tmp_path):
    p = tmp_path / "x.json"
    p.write_text('{"schema": "other", "version": 1}')
    with pytest.raises(DomainError):
        JointSpectralMeasure.read_json(p)


def test_addition():
    a = sphere_measure(4)
    b = a + a
    assert b.total_mass() == pytest.approx(2 * a.total_mass())
    with pytest.raises(DomainError):
        a + explicit(torus_measure(2, 3))


def test_atoms_iteration():
    atoms = list(sphere_measure(1).atoms())
    assert atoms[0].freqs == (0.0, 0.0, 0.0)
    assert atoms[0].weight == pytest.approx(1 / (4 * math.pi))
