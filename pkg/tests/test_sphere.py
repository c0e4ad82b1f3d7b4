import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cryamabe.errors import ConfigurationError
from cryamabe.sphere import (VOLUME, HopfGrid, SpherePoint, build_grid, connection_form,
                             contact_differential, contact_form, frame_at, hopf_coordinates)

angles = st.floats(0.0, 2 * np.pi, allow_nan=False)
etas = st.floats(1e-3, np.pi / 2 - 1e-3)


def test_quadrature_volume_and_moments():
    g = build_grid(12, 8, 8)
    assert g.integrate(np.ones(g.shape)) == pytest.approx(VOLUME, rel=1e-14)
    z1 = np.broadcast_to(g.z1, g.shape)
    # |z1|^2 averages to 1/2, |z1|^4 to 1/3 over S^3
    assert g.integrate(np.abs(z1) ** 2) == pytest.approx(VOLUME / 2, rel=1e-13)
    assert g.integrate(np.abs(z1) ** 4) == pytest.approx(VOLUME / 3, rel=1e-13)


def test_grid_rejects_odd_or_tiny_counts():
    with pytest.raises(ConfigurationError):
        build_grid(8, 7, 8)
    with pytest.raises(ConfigurationError):
        build_grid(2, 8, 8)


def test_grid_json_round_trip_and_nodes():
    g = build_grid(6, 4, 8)
    assert HopfGrid.from_json(g.to_json()) == g
    idx, eta, xi1, xi2 = g.nodes()
    k = 37
    assert g.node_coordinates(k) == (eta.ravel()[k], xi1.ravel()[k], xi2.ravel()[k])
    assert np.all((eta > 0) & (eta < np.pi / 2))


def test_point_validation():
    with pytest.raises(ValueError):
        SpherePoint(1.0, 1.0)
    with pytest.raises(ValueError):
        SpherePoint.project(0.0, 0.0)


@given(etas, angles, angles)
def test_hopf_round_trip(eta, xi1, xi2):
    p = SpherePoint.from_hopf(eta, xi1, xi2)
    e, a, b = hopf_coordinates(p.z1, p.z2)
    assert e == pytest.approx(eta, abs=1e-12)
    assert np.exp(1j * a) == pytest.approx(np.exp(1j * xi1), abs=1e-12)
    assert np.exp(1j * b) == pytest.approx(np.exp(1j * xi2), abs=1e-12)


@settings(max_examples=50)
@given(etas, angles, angles)
def test_reeb_field_normalised_and_in_kernel_of_dtheta(eta, xi1, xi2):
    p = SpherePoint.from_hopf(eta, xi1, xi2)
    f = frame_at(p)
    assert contact_form(p, f.reeb) == pytest.approx(1.0, abs=1e-14)
    # real horizontal vectors: Re and Im parts of Z1
    for v in (f.z1 + np.conj(f.z1bar) * 0, 1j * f.z1):
        assert contact_form(p, v) == pytest.approx(0.0, abs=1e-14)
        assert contact_differential(p, f.reeb, v) == pytest.approx(0.0, abs=1e-14)


def test_connection_form_vanishes_on_frame():
    p = SpherePoint.from_hopf(0.4, 1.0, 2.0)
    assert abs(connection_form(p, frame_at(p).z1)) < 1e-15
