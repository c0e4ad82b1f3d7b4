import pytest
from hypothesis import given
from hypothesis import strategies as st

from cryamabe.errors import UsageError
from cryamabe.timeseries import backward_weights, central_weights, check_uniform, combine

steps = st.floats(0.01, 1.0)
coef = st.floats(-5, 5)


@given(steps, steps, coef, coef, coef)
def test_three_point_weights_differentiate_quadratics_exactly(h1, h2, a, b, c):
    t = (0.3, 0.3 + h1, 0.3 + h1 + h2)
    vals = [a + b * s + c * s * s for s in t]
    assert combine(central_weights(*t), vals) == pytest.approx(b + 2 * c * t[1], abs=1e-8)
    assert combine(backward_weights(*t), vals) == pytest.approx(b + 2 * c * t[2], abs=1e-8)


def test_uniform_window_checks():
    assert check_uniform([0.0, 0.1, 0.2]) == pytest.approx(0.1)
    with pytest.raises(UsageError):
        check_uniform([0.0, 0.1])
    with pytest.raises(UsageError):
        check_uniform([0.0, 0.1, 0.25])
    with pytest.raises(UsageError):
        central_weights(0.0, 0.0, 1.0)
