import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cryamabe.errors import UsageError
from cryamabe.legendrian import (LambdaHistory, brute_force_action, chordal, exact_endpoint,
                                 harnack_ratio_bound, integrate_path, levi_norm2,
                                 minimize_action, ratio_bound_check)
from cryamabe.sphere import SpherePoint, build_grid, contact_form, random_points

GRID = build_grid(8, 8, 8)
X1 = SpherePoint.from_hopf(0.5, 0.3, 1.1)
X2 = SpherePoint.from_hopf(0.9, 2.0, -0.4)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31))
def test_integrator_converges_to_exact_segment_flow(seed):
    rng = np.random.default_rng(seed)
    controls = rng.normal(scale=3.0, size=(4, 2))
    exact = exact_endpoint(np.array(X1.as_c2()), controls, 0.4)
    errs = [chordal(integrate_path(X1, controls, 0.1, 0.5, substeps=m).knots[-1], exact)
            for m in (8, 16)]
    assert errs[0] < 1e-6
    # fourth order, until round-off takes over
    assert errs[1] < errs[0] / 10 or errs[1] < 1e-13


def test_path_is_horizontal_and_action_is_levi_energy():
    controls = np.array([[1.0, -2.0], [0.5, 0.5], [-1.0, 0.0]])
    path = integrate_path(X1, controls, 0.0, 0.3, substeps=8)
    vel = path.knot_velocities()
    for z, v in zip(path.knots, vel):
        p = SpherePoint(*z)
        assert abs(contact_form(p, v)) < 1e-12
    speed2 = [levi_norm2(SpherePoint(*z), v) for z, v in zip(path.knots[:-1], vel[:-1])]
    assert path.action == pytest.approx(np.sum(speed2) * 0.1, rel=1e-10)


def test_action_scales_with_constant_shift():
    controls = np.random.default_rng(1).normal(size=(4, 2))
    base = LambdaHistory.constant(GRID, 0.0)
    a0 = integrate_path(X1, controls, 0.1, 0.3, base).action
    a1 = integrate_path(X1, controls, 0.1, 0.3, base.shifted(0.3)).action
    assert a1 == pytest.approx(np.exp(0.6) * a0, rel=1e-12)


def test_minimiser_reaches_endpoint_and_beats_lattice_search():
    res = minimize_action(X1, 0.1, X2, 0.3, n_segments=4)
    assert res.defect < 1e-6 and chordal(res.path.knots[-1], np.array(X2.as_c2())) < 1e-6
    assert res.L_hat > 0
    lattice = brute_force_action(X1, 0.1, X2, 0.3, n_segments=2)
    assert res.L_hat <= lattice * (1 + 1e-6)


def test_same_point_costs_nothing_and_validation():
    assert minimize_action(X1, 0.1, X1, 0.2).L_hat == 0.0
    with pytest.raises(UsageError):
        minimize_action(X1, 0.2, X2, 0.1)
    hist = LambdaHistory(GRID, [0.1, 0.2], [np.zeros(GRID.shape)] * 2)
    with pytest.raises(UsageError):
        minimize_action(X1, 0.05, X2, 0.2, hist)
    with pytest.raises(UsageError):
        LambdaHistory(GRID, [0.2, 0.1], [np.zeros(GRID.shape)] * 2)


def test_ratio_check_on_static_sphere():
    hist = LambdaHistory.constant(GRID, 0.0)
    chk = ratio_bound_check(X1, 0.1, X2, 0.2, hist, n_segments=4)
    assert chk.W1 == pytest.approx(1.0) and chk.passed
    assert chk.rhs == pytest.approx(harnack_ratio_bound(0.1, 0.2, chk.L_hat))
    same = ratio_bound_check(X1, 0.1, X1, 0.1, hist)
    assert same.passed and same.L_hat == 0.0
    with pytest.raises(UsageError):
        ratio_bound_check(X1, 0.1, X2, 0.1, hist)


def test_interpolated_factor_is_linear_in_time():
    rng = np.random.default_rng(3)
    a, b = rng.standard_normal(GRID.shape), rng.standard_normal(GRID.shape)
    hist = LambdaHistory(GRID, [0.0, 1.0], [a, b])
    pts = np.array([p.as_c2() for p in random_points(rng, 5)])
    mid = hist.lam_at(pts, 0.25)
    assert np.allclose(mid, 0.75 * hist.lam_at(pts, 0.0) + 0.25 * hist.lam_at(pts, 1.0))
