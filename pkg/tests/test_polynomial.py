from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cryamabe.polynomial import (I, GaussianRational, PolyField, poly_covariant_second,
                                 poly_frame_derivative, poly_sublaplacian, random_smooth_field)

fracs = st.fractions(min_value=-10, max_value=10, max_denominator=50)
gauss = st.builds(GaussianRational, fracs, fracs)


@given(gauss, gauss, gauss)
def test_gaussian_rational_field_axioms(a, b, c):
    assert (a + b) * c == a * c + b * c
    assert (a * b).conj() == a.conj() * b.conj()
    if not b.is_zero():
        assert (a / b) * b == a
    assert (a * a.conj()).im == 0 and (a * a.conj()).re == a.abs2()


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.integers(0, 4))
def test_commutation_identity_is_exact(seed, degree):
    _, P = random_smooth_field(seed, degree)
    _, a, b = poly_covariant_second(P)
    assert (a - b - poly_frame_derivative(P, "T") * I).is_zero()


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_conjugate_frame_derivative(seed):
    _, P = random_smooth_field(seed, 3)
    lhs = poly_frame_derivative(P, "Z1bar")
    rhs = poly_frame_derivative(P.conj(), "Z1").conj()
    assert (lhs - rhs).is_zero()


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_sublaplacian_is_trace_of_mixed_second(seed):
    _, P = random_smooth_field(seed, 3)
    _, a, b = poly_covariant_second(P)
    assert (poly_sublaplacian(P) - (a + b)).is_zero()


def test_known_values():
    z1 = PolyField.z1()
    # Lap_b |z1|^2 = |z2|^2 - |z1|^2 on the sphere
    lap = poly_sublaplacian(z1 * PolyField.zbar1())
    assert complex(lap.evaluate(np.array([0.6]), np.array([0.8j]))[0]) == pytest.approx(0.28)
    assert poly_frame_derivative(PolyField.constant(3), "T").is_zero()
    assert (poly_frame_derivative(z1, "T") - z1 * GaussianRational(0, Fraction(1, 2))).is_zero()


def test_exact_and_float_evaluation_agree():
    _, P = random_smooth_field(5, 4)
    z1, z2 = Fraction(3, 5), GaussianRational(0, Fraction(4, 5))
    value, root2 = P.evaluate_exact(z1, z2)
    exact = complex(value) * 2.0 ** (-0.5 * root2)
    approx = complex(P.evaluate(np.array([0.6]), np.array([0.8j]))[0])
    assert abs(exact - approx) < 1e-12
