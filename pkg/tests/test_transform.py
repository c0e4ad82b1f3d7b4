import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cryamabe.calculus import FrameCalculus
from cryamabe.polynomial import random_smooth_field
from cryamabe.sphere import build_grid
from cryamabe.transform import (PseudohermitianState, cartan_Q11, flowed_covariant_second,
                                flowed_gradient, flowed_sublaplacian, reeb_derivative, torsion,
                                webster_curvature)

GRID = build_grid(12, 12, 12)
CALC = FrameCalculus(GRID)


def _lam(seed, scale=0.2, grid=GRID):
    f, _ = random_smooth_field(seed, 2, grid)
    return scale * f.real


@settings(max_examples=10, deadline=None)
@given(st.floats(-1.0, 1.0))
def test_constant_factor_scales_curvature(c):
    lam = np.full(GRID.shape, c)
    assert np.allclose(webster_curvature(CALC, lam), np.exp(-2 * c), rtol=1e-12)
    assert np.max(np.abs(torsion(CALC, lam))) < 1e-12


def test_zero_factor_reduces_to_fixed_frame():
    f = _lam(1).astype(complex)
    zero = np.zeros(GRID.shape)
    assert np.allclose(flowed_sublaplacian(CALC, zero, f.real), CALC.sublaplacian(f.real))
    g1b, g1 = flowed_gradient(CALC, zero, f)
    assert np.allclose(g1, CALC.z1(f)) and np.allclose(g1b, CALC.z1bar(f))


@settings(max_examples=5, deadline=None)
@given(st.integers(0, 1000))
def test_flowed_commutator_and_trace(seed):
    lam, f = _lam(seed), _lam(seed + 7).astype(complex)
    f11, f11b, f1b1 = flowed_covariant_second(CALC, lam, f)
    assert np.allclose(f11b + f1b1, flowed_sublaplacian(CALC, lam, f.real), atol=1e-10)
    t, residue = reeb_derivative(CALC, lam, f, return_residue=True)
    assert np.allclose(f11b - f1b1, 1j * t, atol=1e-10)


def test_cartan_tensor_vanishes_under_refinement():
    # any conformal factor leaves the CR structure spherical
    errs = []
    for n in (12, 16, 20):
        g = build_grid(n, n, n)
        q, _ = cartan_Q11(FrameCalculus(g), _lam(1, grid=g))
        errs.append(np.max(np.abs(q)))
    assert errs[0] > 4 * errs[1] > 16 * errs[2]


def test_state_caches_and_read_only_factor():
    st_ = PseudohermitianState(CALC, _lam(2), 0.1)
    w = st_.W
    assert st_.W is w
    with pytest.raises(ValueError):
        st_.lam[0, 0, 0] = 1.0
    nxt = st_.with_lambda(st_.lam + 0.1, 0.2)
    assert nxt.t == 0.2 and np.allclose(nxt.W, w * np.exp(-0.2))
    st_.lam = st_.lam + 0.0
    assert not np.shares_memory(st_.W, w) or st_.W is not w


def test_state_gradient_norm_and_diagnostics():
    s = PseudohermitianState(CALC, _lam(3), 0.0)
    w1b, w1 = s.grad_W
    assert np.allclose(w1b, np.conj(w1))
    assert np.allclose(s.grad_W_norm2, 2 * np.abs(w1) ** 2)
    d = s.diagnostics(cartan=True).to_dict()
    assert d["max_abs_Q11"] is not None and d["res_2_7"] is None
    assert d["index_convention"] == "flowed"
