"""The numba kernels and their numpy twins agree to round-off."""
import numpy as np
import pytest

from cryamabe import kernels
from cryamabe.calculus import FD1, extend_eta
from cryamabe.sphere import build_grid, random_points

GRID = build_grid(10, 8, 12)


def _smooth(grid):
    z1 = np.broadcast_to(grid.z1, grid.shape)
    z2 = np.broadcast_to(grid.z2, grid.shape)
    return (z1 * np.conj(z2) ** 2 + z1).real + np.abs(z2) ** 4


def test_eta_stencil_twins():
    rng = np.random.default_rng(0)
    ext = rng.standard_normal((GRID.n_eta + 8, GRID.n_xi1, GRID.n_xi2))
    a = kernels.eta_stencil_numpy(ext, FD1[8])
    b = kernels.eta_stencil_numba(ext, FD1[8])
    assert np.max(np.abs(a - b)) < 1e-13


def test_interpolation_twins_and_accuracy():
    f = _smooth(GRID)
    ext = extend_eta(f, 2)
    rng = np.random.default_rng(1)
    pts = random_points(rng, 50)
    z = np.array([p.as_c2() for p in pts])
    eta = np.arctan2(np.abs(z[:, 1]), np.abs(z[:, 0]))
    xi1 = np.mod(np.angle(z[:, 0]), 2 * np.pi)
    xi2 = np.mod(np.angle(z[:, 1]), 2 * np.pi)
    a = kernels.interp_periodic_numpy(ext, 2, GRID.h_eta, eta, xi1, xi2)
    b = kernels.interp_periodic_numba(ext, 2, GRID.h_eta, eta, xi1, xi2)
    assert np.max(np.abs(a - b)) < 1e-13
    exact = (z[:, 0] * np.conj(z[:, 1]) ** 2 + z[:, 0]).real + np.abs(z[:, 1]) ** 4
    assert np.max(np.abs(a - exact)) < 0.05


@pytest.mark.parametrize("n_snap", [1, 3])
def test_path_propagation_twins(n_snap):
    rng = np.random.default_rng(2)
    f = _smooth(GRID)
    snap_t = np.linspace(0.1, 0.3, n_snap)
    ext = np.stack([extend_eta(f * (1 + k), 2) for k in range(n_snap)])
    z0 = np.array(random_points(rng, 1)[0].as_c2())
    controls = rng.standard_normal((3, 5, 2))
    args = (z0, controls, 0.1, 0.04, 4, snap_t, ext, 2, GRID.h_eta)
    k1, a1 = kernels.propagate_paths_numpy(*args)
    k2, a2 = kernels.propagate_paths_numba(*args)
    assert np.max(np.abs(k1 - k2)) < 1e-13
    assert np.max(np.abs(a1 - a2) / a1) < 1e-13


@pytest.mark.parametrize("flag,expected", [("0", "numpy"), ("1", "numba")])
def test_environment_flag_selects_backend(flag, expected):
    import os
    import subprocess
    import sys
    code = "from cryamabe import kernels, _accel; print(_accel.backend_name(), kernels.propagate_paths.__name__)"
    out = subprocess.run([sys.executable, "-c", code], env=dict(os.environ, CRYAMABE_NUMBA=flag),
                         capture_output=True, text=True, check=True).stdout.split()
    assert out[0] == expected and out[1].endswith(expected)
