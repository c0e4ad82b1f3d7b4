"""The standard CR 3-sphere: points, Hopf-coordinate grids and the fixed frame.

Conventions
-----------
Hopf coordinates ``(eta, xi1, xi2)`` embed as

    z1 = cos(eta) exp(i xi1),   z2 = sin(eta) exp(i xi2),

with ``eta`` in ``(0, pi/2)``.  The standard contact form is
``theta = i(sigma - conj(sigma))`` with ``sigma = z1 dz1bar + z2 dz2bar``;
in Hopf coordinates ``theta = 2(cos^2 eta dxi1 + sin^2 eta dxi2)``.  The
frame is

    Z1 = (zbar1 d/dz2 - zbar2 d/dz1) / sqrt(2)
       = exp(-i(xi1 + xi2)) / (2 sqrt 2) * (d_eta + i tan(eta) d_xi1 - i cot(eta) d_xi2)
    T  = (d_xi1 + d_xi2) / 2.

Volume form: ``|theta ^ dtheta| = 8 sin(eta) cos(eta) d eta d xi1 d xi2``, so
the total volume is ``16 pi^2`` (eight times the round volume ``2 pi^2``).
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import ConfigurationError

SQRT2 = np.sqrt(2.0)
VOLUME = 16.0 * np.pi**2
MIN_COUNT = 4


@dataclass(frozen=True)
class SpherePoint:
    """A point ``(z1, z2)`` of the unit sphere in C^2."""

    z1: complex
    z2: complex

    def __post_init__(self):
        r = abs(self.z1) ** 2 + abs(self.z2) ** 2
        if not np.isfinite(r) or abs(r - 1.0) > 1e-12:
            raise ValueError(f"point is off the sphere: |z|^2 = {r!r}")

    @classmethod
    def project(cls, z1, z2) -> "SpherePoint":
        """Radial projection of a nonzero point of C^2."""
        r = np.sqrt(abs(z1) ** 2 + abs(z2) ** 2)
        if r == 0.0 or not np.isfinite(r):
            raise ValueError("cannot project the origin")
        return cls(complex(z1) / r, complex(z2) / r)

    @classmethod
    def from_hopf(cls, eta, xi1, xi2) -> "SpherePoint":
        return cls.project(np.cos(eta) * np.exp(1j * xi1), np.sin(eta) * np.exp(1j * xi2))

    @classmethod
    def from_array(cls, a) -> "SpherePoint":
        """From ``[re z1, im z1, re z2, im z2]`` (projected onto the sphere)."""
        a = np.asarray(a, dtype=float)
        return cls.project(complex(a[0], a[1]), complex(a[2], a[3]))

    def hopf(self):
        """Return ``(eta, xi1, xi2)``."""
        eta, xi1, xi2 = hopf_coordinates(self.z1, self.z2)
        return float(eta), float(xi1), float(xi2)

    def as_c2(self):
        return np.array([self.z1, self.z2], dtype=complex)

    def as_array(self):
        return np.array([self.z1.real, self.z1.imag, self.z2.real, self.z2.imag])


def hopf_coordinates(z1, z2):
    """Vectorised inverse of the Hopf embedding."""
    z1 = np.asarray(z1)
    z2 = np.asarray(z2)
    eta = np.arctan2(np.abs(z2), np.abs(z1))
    return eta, np.mod(np.angle(z1), 2 * np.pi), np.mod(np.angle(z2), 2 * np.pi)


def random_points(rng, n):
    """``n`` points uniformly distributed on S^3 (Gaussian normalisation)."""
    g = rng.standard_normal((n, 4))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    return [SpherePoint.project(complex(r[0], r[1]), complex(r[2], r[3])) for r in g]


def _fejer_weights(n):
    """Fejer's first rule on the Chebyshev nodes cos((2k+1) pi / 2n), over [-1, 1]."""
    k = np.arange(n)
    th = (2 * k + 1) * np.pi / (2 * n)
    j = np.arange(1, n // 2 + 1)
    s = np.cos(2 * np.outer(th, j)) / (4 * j**2 - 1)
    return 2.0 / n * (1.0 - 2.0 * s.sum(axis=1))


@dataclass(frozen=True)
class HopfGrid:
    """Cell-centred grid in ``eta`` times uniform periodic grids in ``xi1, xi2``.

    Fields live on arrays of shape ``(n_eta, n_xi1, n_xi2)``.
    """

    n_eta: int
    n_xi1: int
    n_xi2: int

    def __post_init__(self):
        for name in ("n_eta", "n_xi1", "n_xi2"):
            v = getattr(self, name)
            if int(v) != v or v < MIN_COUNT:
                raise ConfigurationError(f"{name} must be an integer >= {MIN_COUNT}, got {v!r}")
        for name in ("n_xi1", "n_xi2"):
            if getattr(self, name) % 2:
                raise ConfigurationError(f"{name} must be even, got {getattr(self, name)}")

    @property
    def shape(self):
        return (self.n_eta, self.n_xi1, self.n_xi2)

    @property
    def size(self):
        return self.n_eta * self.n_xi1 * self.n_xi2

    @property
    def h_eta(self):
        return 0.5 * np.pi / self.n_eta

    @property
    def h_xi1(self):
        return 2 * np.pi / self.n_xi1

    @property
    def h_xi2(self):
        return 2 * np.pi / self.n_xi2

    @cached_property
    def eta(self):
        return (np.arange(self.n_eta) + 0.5) * self.h_eta

    @cached_property
    def xi1(self):
        return np.arange(self.n_xi1) * self.h_xi1

    @cached_property
    def xi2(self):
        return np.arange(self.n_xi2) * self.h_xi2

    @cached_property
    def tan(self):
        """``tan(eta)`` broadcastable against fields."""
        return np.tan(self.eta)[:, None, None]

    @cached_property
    def cot(self):
        return 1.0 / np.tan(self.eta)[:, None, None]

    @cached_property
    def phase(self):
        """``exp(i(xi1 + xi2))`` on the (xi1, xi2) plane."""
        return np.exp(1j * (self.xi1[:, None] + self.xi2[None, :]))[None, :, :]

    @cached_property
    def z1(self):
        z = np.cos(self.eta)[:, None, None] * np.exp(1j * self.xi1)[None, :, None]
        return np.broadcast_to(z, self.shape).copy()

    @cached_property
    def z2(self):
        z = np.sin(self.eta)[:, None, None] * np.exp(1j * self.xi2)[None, None, :]
        return np.broadcast_to(z, self.shape).copy()

    @cached_property
    def weights(self):
        """Quadrature weights for the volume form ``|theta ^ dtheta|``.

        With ``u = cos(2 eta)`` the measure becomes ``2 du dxi1 dxi2`` and the
        cell centres are Chebyshev points in ``u``, so Fejer's rule applies.
        """
        w_eta = 2.0 * _fejer_weights(self.n_eta)
        w = w_eta[:, None, None] * self.h_xi1 * self.h_xi2
        return np.broadcast_to(w, self.shape).copy()

    def integrate(self, f):
        return np.sum(self.weights * f)

    def nodes(self):
        """Flat ``(index, eta, xi1, xi2)`` arrays in row-major node order."""
        e, a, b = np.meshgrid(self.eta, self.xi1, self.xi2, indexing="ij")
        return np.arange(self.size), e.ravel(), a.ravel(), b.ravel()

    def node_coordinates(self, flat_index):
        k, i, j = np.unravel_index(flat_index, self.shape)
        return float(self.eta[k]), float(self.xi1[i]), float(self.xi2[j])

    def to_dict(self):
        return {"n_eta": self.n_eta, "n_xi1": self.n_xi1, "n_xi2": self.n_xi2}

    def to_json(self):
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d):
        try:
            return build_grid(int(d["n_eta"]), int(d["n_xi1"]), int(d["n_xi2"]))
        except KeyError as exc:
            raise ConfigurationError(f"grid description is missing {exc.args[0]!r}") from None

    @classmethod
    def from_json(cls, s):
        return cls.from_dict(json.loads(s))


def build_grid(n_eta: int, n_xi1: int, n_xi2: int) -> HopfGrid:
    return HopfGrid(n_eta, n_xi1, n_xi2)


@dataclass(frozen=True)
class FrameCoefficients:
    """The fixed frame at a point, as coefficients on ``d/dz1, d/dz2``.

    ``z1`` holds the (1,0)-field ``Z1``; ``z1bar`` the coefficients of its
    conjugate on ``d/dz1bar, d/dz2bar``.  ``reeb`` is the real field ``T``
    given by its C^2 velocity.  ``z1_hopf`` are the coefficients of ``Z1`` on
    ``(d_eta, d_xi1, d_xi2)``.
    """

    point: SpherePoint
    z1: np.ndarray
    z1bar: np.ndarray
    reeb: np.ndarray
    z1_hopf: np.ndarray
    reeb_hopf: np.ndarray


def frame_at(p: SpherePoint) -> FrameCoefficients:
    z1, z2 = p.z1, p.z2
    zc = np.array([-np.conj(z2), np.conj(z1)]) / SQRT2
    eta, xi1, xi2 = p.hopf()
    pref = np.exp(-1j * (xi1 + xi2)) / (2 * SQRT2)
    hopf = pref * np.array([1.0, 1j * np.tan(eta), -1j / np.tan(eta)])
    return FrameCoefficients(
        point=p,
        z1=zc,
        z1bar=np.conj(zc),
        reeb=0.5j * np.array([z1, z2]),
        z1_hopf=hopf,
        reeb_hopf=np.array([0.0, 0.5, 0.5]),
    )


def contact_form(p: SpherePoint, v) -> float:
    """``theta(V)`` for a real vector with C^2 velocity ``v``."""
    s = p.z1 * np.conj(v[0]) + p.z2 * np.conj(v[1])
    return float(-2.0 * s.imag)


def contact_differential(p: SpherePoint, v, u) -> float:
    """``dtheta(V, U) = 2i sum(dz_j ^ dzbar_j)(V, U)`` for real vectors."""
    s = v[0] * np.conj(u[0]) + v[1] * np.conj(u[1])
    return float(-4.0 * s.imag)


def connection_form(p: SpherePoint, dz, dzbar=None) -> complex:
    """``omega = -2(zbar1 dz1 + zbar2 dz2)`` on a complex vector.

    The vector is given by its ``d/dz`` components ``dz`` (and, unused here
    because ``omega`` has no ``dzbar`` part, its ``d/dzbar`` components).
    """
    return complex(-2.0 * (np.conj(p.z1) * dz[0] + np.conj(p.z2) * dz[1]))
