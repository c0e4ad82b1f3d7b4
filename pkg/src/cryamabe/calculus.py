"""Discrete operators in the fixed frame of the standard sphere.

Fields are numpy arrays of shape ``grid.shape``.  ``xi1``/``xi2`` derivatives
are spectral; ``eta`` derivatives use centred finite differences of order 4,
6 or 8.  Ghost layers beyond the two degenerate circles come from the exact
reflections of the Hopf parametrisation,

    (-eta, xi1, xi2)      ~ (eta, xi1, xi2 + pi),
    (pi - eta, xi1, xi2)  ~ (eta, xi1 + pi, xi2),

so every stencil is centred (this needs even ``n_xi1``, ``n_xi2``).  The
reflection is valid for any function on S^3 and for its ``xi``-derivatives,
but not for ``eta``-derivatives, which are therefore always taken last.

Operators in Hopf coordinates (``E = exp(i(xi1 + xi2))``):

    Z1 f        = E^-1 (f_e + i tan f_1 - i cot f_2) / (2 sqrt 2)
    Lap_b f     = (f_ee + (cot - tan) f_e + tan^2 f_11 + cot^2 f_22 - 2 f_12) / 4
    f_{,1 1bar} = Lap_b f / 2 + (i/2) T f,     f_{,1bar 1} = Lap_b f / 2 - (i/2) T f
    f_{,11}     = E^-2 / 8 (f_ee + (tan - cot) f_e - tan^2 f_11 - cot^2 f_22 + 2 f_12
                            + 2i tan f_e1 - 2i cot f_e2 + 2i tan^2 f_1 + 2i cot^2 f_2)

The fixed connection form vanishes on Z1 and Z1bar, so covariant second
derivatives are plain compositions of frame derivatives.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import DataError, NumericalConsistencyError, UsageError
from .sphere import SQRT2, HopfGrid

FD1 = {
    4: np.array([1 / 12, -2 / 3, 0.0, 2 / 3, -1 / 12]),
    6: np.array([-1 / 60, 3 / 20, -3 / 4, 0.0, 3 / 4, -3 / 20, 1 / 60]),
    8: np.array([1 / 280, -4 / 105, 1 / 5, -4 / 5, 0.0, 4 / 5, -1 / 5, 4 / 105, -1 / 280]),
}
FD2 = {
    4: np.array([-1 / 12, 4 / 3, -5 / 2, 4 / 3, -1 / 12]),
    6: np.array([1 / 90, -3 / 20, 3 / 2, -49 / 18, 3 / 2, -3 / 20, 1 / 90]),
    8: np.array([-1 / 560, 8 / 315, -1 / 5, 8 / 5, -205 / 72, 8 / 5, -1 / 5, 8 / 315, -1 / 560]),
}
DIRECTIONS = ("Z1", "Z1bar", "T")
RESIDUE_TOL = 1e-8


def extend_eta(f, ghosts):
    """Pad ``f`` with ``ghosts`` reflected layers on both ends of the eta axis."""
    n, n1, n2 = f.shape
    if ghosts > n:
        raise UsageError(f"{ghosts} ghost layers need n_eta >= {ghosts}")
    ext = np.empty((n + 2 * ghosts, n1, n2), dtype=f.dtype)
    ext[ghosts:ghosts + n] = f
    lo = f[:ghosts][::-1]
    hi = f[n - ghosts:][::-1]
    ext[:ghosts] = np.roll(lo, n2 // 2, axis=2)
    ext[ghosts + n:] = np.roll(hi, n1 // 2, axis=1)
    return ext


def _check_finite(f):
    if not np.all(np.isfinite(f)):
        raise DataError("field contains non-finite values")


@dataclass
class Jet:
    """Coordinate derivatives of a field up to second order.

    ``e`` is d/deta, ``x1``/``x2`` are d/dxi1, d/dxi2; repeated letters are
    second derivatives and ``e1`` is d^2/deta dxi1.
    """

    f: np.ndarray
    e: np.ndarray
    x1: np.ndarray
    x2: np.ndarray
    ee: np.ndarray | None = None
    x11: np.ndarray | None = None
    x22: np.ndarray | None = None
    x12: np.ndarray | None = None
    e1: np.ndarray | None = None
    e2: np.ndarray | None = None


class FrameCalculus:
    """Frame derivatives, sublaplacian and friends on one grid.

    Parameters
    ----------
    grid : HopfGrid
    order : {4, 6, 8}
        Accuracy order of the eta finite differences.
    """

    def __init__(self, grid: HopfGrid, order: int = 8):
        if order not in FD1:
            raise UsageError(f"eta order must be one of {sorted(FD1)}, got {order}")
        self.grid = grid
        self.order = order
        self.ghosts = order // 2
        if self.ghosts > grid.n_eta:
            raise UsageError(f"order {order} needs n_eta >= {self.ghosts}")
        self._w1 = FD1[order] / grid.h_eta
        self._w2 = FD2[order] / grid.h_eta**2
        n1, n2 = grid.n_xi1, grid.n_xi2
        k1 = np.fft.fftfreq(n1, 1.0 / n1)
        k2 = np.fft.fftfreq(n2, 1.0 / n2)
        k2r = np.fft.rfftfreq(n2, 1.0 / n2)
        self._k = {}
        for real, kk2 in ((False, k2), (True, k2r)):
            o1 = k1.copy()
            o1[n1 // 2] = 0.0
            o2 = kk2.copy()
            o2[np.abs(kk2) == n2 // 2] = 0.0
            self._k[real] = (o1[:, None], o2[None, :], k1[:, None] ** 2, kk2[None, :] ** 2)
        t, c = grid.tan, grid.cot
        self._tan, self._cot = t, c
        self._tan2, self._cot2 = t * t, c * c
        self._ph = grid.phase

    # -- coordinate derivatives --------------------------------------------

    def _fft(self, f):
        if np.iscomplexobj(f):
            return np.fft.fft2(f, axes=(1, 2)), False
        return np.fft.rfft2(f, axes=(1, 2)), True

    def _ifft(self, F, real):
        if real:
            return np.fft.irfft2(F, s=self.grid.shape[1:], axes=(1, 2))
        return np.fft.ifft2(F, axes=(1, 2))

    def d_eta(self, f):
        return kernels.eta_stencil(extend_eta(f, self.ghosts), self._w1)

    def d2_eta(self, f):
        return kernels.eta_stencil(extend_eta(f, self.ghosts), self._w2)

    def d_xi(self, f):
        """``(d/dxi1 f, d/dxi2 f)``."""
        F, real = self._fft(f)
        o1, o2, _, _ = self._k[real]
        return self._ifft(1j * o1 * F, real), self._ifft(1j * o2 * F, real)

    def jet(self, f, second=True, mixed=True) -> Jet:
        f = np.asarray(f)
        if f.shape != self.grid.shape:
            raise UsageError(f"field shape {f.shape} does not match grid {self.grid.shape}")
        _check_finite(f)
        F, real = self._fft(f)
        o1, o2, q1, q2 = self._k[real]
        x1 = self._ifft(1j * o1 * F, real)
        x2 = self._ifft(1j * o2 * F, real)
        ext = extend_eta(f, self.ghosts)
        j = Jet(f=f, e=kernels.eta_stencil(ext, self._w1), x1=x1, x2=x2)
        if second:
            j.ee = kernels.eta_stencil(ext, self._w2)
            j.x11 = self._ifft(-q1 * F, real)
            j.x22 = self._ifft(-q2 * F, real)
            j.x12 = self._ifft(-(o1 * o2) * F, real)
            if mixed:
                self.add_mixed(j)
        return j

    def add_mixed(self, j):
        """Fill the mixed ``eta``-``xi`` derivatives of a jet (idempotent)."""
        if j.e1 is None:
            j.e1 = self.d_eta(j.x1)
            j.e2 = self.d_eta(j.x2)
        return j

    # -- frame operators from a jet ------------------------------------------

    def _z1(self, j):
        return (j.e + 1j * (self._tan * j.x1 - self._cot * j.x2)) / (self._ph * 2 * SQRT2)

    def _z1bar(self, j):
        return self._ph * (j.e - 1j * (self._tan * j.x1 - self._cot * j.x2)) / (2 * SQRT2)

    @staticmethod
    def _reeb(j):
        return 0.5 * (j.x1 + j.x2)

    def _lap(self, j):
        return 0.25 * (j.ee + (self._cot - self._tan) * j.e + self._tan2 * j.x11
                       + self._cot2 * j.x22 - 2.0 * j.x12)

    def _hess_common(self, j):
        return (j.ee + (self._tan - self._cot) * j.e - self._tan2 * j.x11
                - self._cot2 * j.x22 + 2.0 * j.x12)

    def _hess_imag(self, j):
        return (self._tan * j.e1 - self._cot * j.e2 + self._tan2 * j.x1 + self._cot2 * j.x2)

    def _f11(self, j):
        self.add_mixed(j)
        return (self._hess_common(j) + 2j * self._hess_imag(j)) / (8.0 * self._ph**2)

    def _f1b1b(self, j):
        self.add_mixed(j)
        return self._ph**2 * (self._hess_common(j) - 2j * self._hess_imag(j)) / 8.0

    # -- public operators -------------------------------------------------------

    def frame_derivative(self, f, direction):
        """``Z1 f``, ``Z1bar f`` or ``T f`` (always returned complex)."""
        if direction not in DIRECTIONS:
            raise UsageError(f"direction must be one of {DIRECTIONS}, got {direction!r}")
        j = self.jet(f, second=False)
        if direction == "Z1":
            return self._z1(j)
        if direction == "Z1bar":
            return self._z1bar(j)
        return np.asarray(self._reeb(j), dtype=complex)

    def z1(self, f):
        return self.frame_derivative(f, "Z1")

    def z1bar(self, f):
        return self.frame_derivative(f, "Z1bar")

    def reeb(self, f):
        return self.frame_derivative(f, "T")

    def subgradient(self, f):
        """Components ``(f_{,1bar}, f_{,1})`` of ``grad_b f = f_{,1bar} Z1 + f_{,1} Z1bar``."""
        j = self.jet(f, second=False)
        return self._z1bar(j), self._z1(j)

    def covariant_second(self, f):
        """``(f_{,11}, f_{,1 1bar}, f_{,1bar 1})``."""
        j = self.jet(f)
        lap, tf = self._lap(j), self._reeb(j)
        return self._f11(j), 0.5 * lap + 0.5j * tf, 0.5 * lap - 0.5j * tf

    def sublaplacian(self, f, return_residue=False):
        """``Lap_b f = f_{,1 1bar} + f_{,1bar 1}`` of a real field.

        A complex input is accepted when its imaginary part is round-off: the
        residue is measured against ``RESIDUE_TOL * max|f|`` and dropped.
        """
        f = np.asarray(f)
        residue = 0.0
        if np.iscomplexobj(f):
            scale = max(float(np.max(np.abs(f))), 1e-300)
            residue = float(np.max(np.abs(f.imag))) / scale
            if residue > RESIDUE_TOL:
                raise NumericalConsistencyError(f"sublaplacian input has imaginary residue {residue:.3e}")
            f = f.real
        out = self._lap(self.jet(f))
        return (out, residue) if return_residue else out

    def levi_inner(self, u, v, lam=None):
        """Levi inner product w.r.t. ``exp(2 lam) theta`` of hatted-frame components.

        ``u = (u_1, u_1bar)`` are the components of ``U = u_1 Z1bar + u_1bar Z1``.
        """
        u1, u1b = (np.asarray(x) for x in u)
        v1, v1b = (np.asarray(x) for x in v)
        shapes = {np.shape(x) for x in (u1, u1b, v1, v1b)}
        if lam is not None:
            shapes.add(np.shape(lam))
        if len(shapes) > 1:
            raise UsageError(f"mismatched field shapes {sorted(shapes)}")
        val = (u1 * v1b + u1b * v1).real
        return val if lam is None else np.exp(2.0 * np.asarray(lam)) * val


def real_part(x, scale=None, tol=RESIDUE_TOL, what="quantity"):
    """Drop a round-off imaginary part, returning ``(real, relative residue)``."""
    x = np.asarray(x)
    if not np.iscomplexobj(x):
        return x, 0.0
    if scale is None:
        scale = float(np.max(np.abs(x)))
    scale = max(scale, 1e-300)
    residue = float(np.max(np.abs(x.imag))) / scale
    if residue > tol:
        raise NumericalConsistencyError(f"{what} has imaginary residue {residue:.3e} (tol {tol:.1e})")
    return x.real.copy(), residue
