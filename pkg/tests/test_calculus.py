import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cryamabe.calculus import FrameCalculus, real_part
from cryamabe.errors import NumericalConsistencyError, UsageError
from cryamabe.polynomial import random_smooth_field
from cryamabe.sphere import build_grid

GRID = build_grid(16, 16, 16)
CALC = FrameCalculus(GRID)


def _field(seed, degree=3):
    f, _ = random_smooth_field(seed, degree, GRID)
    return f


def test_spherical_harmonic_eigenvalues():
    z1 = np.broadcast_to(GRID.z1, GRID.shape)
    z2 = np.broadcast_to(GRID.z2, GRID.shape)
    assert np.max(np.abs(CALC.sublaplacian(z1.real) + 0.5 * z1.real)) < 1e-10
    lap = CALC.sublaplacian(np.abs(z1) ** 2)
    assert np.max(np.abs(lap - (np.abs(z2) ** 2 - np.abs(z1) ** 2))) < 1e-8


@pytest.mark.parametrize("order", [4, 6, 8])
def test_error_drops_with_order(order):
    errs = []
    for n in (8, 16):
        g = build_grid(n, 16, 16)
        z1 = np.broadcast_to(g.z1, g.shape)
        z2 = np.broadcast_to(g.z2, g.shape)
        lap = FrameCalculus(g, order).sublaplacian(np.abs(z1) ** 2)
        errs.append(np.max(np.abs(lap - (np.abs(z2) ** 2 - np.abs(z1) ** 2))))
    assert np.log2(errs[0] / errs[1]) > order - 1.5


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 10_000))
def test_conjugation_symmetry(seed):
    f = _field(seed)
    assert np.allclose(CALC.z1bar(f), np.conj(CALC.z1(np.conj(f))), atol=1e-12)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 10_000))
def test_commutator_is_reeb(seed):
    f = _field(seed)
    _, f11b, f1b1 = CALC.covariant_second(f)
    assert np.max(np.abs(f11b - f1b1 - 1j * CALC.reeb(f))) < 1e-10


@settings(max_examples=5, deadline=None)
@given(st.integers(0, 10_000))
def test_sublaplacian_is_symmetric_and_mean_free(seed):
    f, g = _field(seed).real, _field(seed + 1).real
    a = GRID.integrate(g * CALC.sublaplacian(f))
    b = GRID.integrate(f * CALC.sublaplacian(g))
    assert a == pytest.approx(b, rel=1e-6, abs=1e-6)
    assert abs(GRID.integrate(CALC.sublaplacian(f))) < 1e-6


def test_subgradient_components_are_conjugate_for_real_input():
    f = _field(3).real
    f1b, f1 = CALC.subgradient(f)
    assert np.allclose(f1b, np.conj(f1))


def test_complex_input_with_large_imaginary_part_is_rejected():
    f = _field(4)
    with pytest.raises(NumericalConsistencyError):
        CALC.sublaplacian(f.real + 1j)
    out, res = CALC.sublaplacian(f.real + 0j, return_residue=True)
    assert res == 0.0 and out.dtype == float


def test_real_part_and_levi_inner_guards():
    with pytest.raises(NumericalConsistencyError):
        real_part(np.array([1.0 + 1e-3j]))
    with pytest.raises(UsageError):
        CALC.levi_inner((np.ones(3), np.ones(3)), (np.ones(4), np.ones(4)))
    u = (np.array([1 + 2j]), np.array([1 - 2j]))
    assert CALC.levi_inner(u, u, lam=np.array([0.5]))[0] == pytest.approx(np.e * 10.0)


def test_nonfinite_input_is_rejected():
    f = np.zeros(GRID.shape)
    f[3, 2, 1] = np.nan
    with pytest.raises(Exception):
        CALC.sublaplacian(f)
