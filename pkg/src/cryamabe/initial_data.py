"""Explicit torsion-free conformal factors on the standard sphere.

For ``w = a z1 + b z2 + c`` with ``|c| > sqrt(|a|^2 + |b|^2)`` the factor
``lambda = -ln|w|`` satisfies ``lambda_{,11} = 2 (lambda_{,1})^2``, i.e. the
contact form ``exp(2 lambda) theta`` has vanishing torsion.  These forms are
constant multiples of pull-backs of the standard form by CR automorphisms
of the ball, so their Webster curvature is the constant
``|c|^2 - |a|^2 - |b|^2`` (:func:`curvature_closed_form`).  The pointwise
expression of :func:`curvature_formula` is the one usually quoted for this
family; it is kept for comparison and does not agree with the
transformation law away from ``a = b = 0``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import ParameterError
from .polynomial import GaussianRational, PolyField, poly_frame_derivative


@dataclass(frozen=True)
class TorsionFreeParams:
    a: complex
    b: complex
    c: complex

    def __post_init__(self):
        for name in ("a", "b", "c"):
            v = complex(getattr(self, name))
            if not np.isfinite(v.real) or not np.isfinite(v.imag):
                raise ParameterError(f"{name} must be finite")
            object.__setattr__(self, name, v)
        if not abs(self.c) > np.hypot(abs(self.a), abs(self.b)):
            raise ParameterError(
                f"need |c| > sqrt(|a|^2 + |b|^2); got |c| = {abs(self.c):.6g}, "
                f"sqrt(|a|^2 + |b|^2) = {np.hypot(abs(self.a), abs(self.b)):.6g}")

    def to_dict(self):
        return {k: [getattr(self, k).real, getattr(self, k).imag] for k in ("a", "b", "c")}

    def to_json(self):
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d):
        def cx(v):
            if isinstance(v, (list, tuple)):
                return complex(float(v[0]), float(v[1]))
            return complex(v)
        try:
            return cls(cx(d["a"]), cx(d["b"]), cx(d["c"]))
        except KeyError as exc:
            raise ParameterError(f"parameters are missing {exc.args[0]!r}") from None

    @classmethod
    def from_json(cls, s):
        return cls.from_dict(json.loads(s))


def _affine(p, z1, z2):
    return p.a * z1 + p.b * z2 + p.c


def torsion_free_lambda(p: TorsionFreeParams, grid):
    """``lambda = -ln|a z1 + b z2 + c|`` sampled on the grid."""
    return -np.log(np.abs(_affine(p, grid.z1, grid.z2)))


def curvature_formula(p: TorsionFreeParams, grid):
    """The quoted pointwise curvature expression for ``-ln|a z1 + b z2 + c|``."""
    z1, z2 = grid.z1, grid.z2
    a, b, c = p.a, p.b, p.c
    A2, B2 = abs(a) ** 2, abs(b) ** 2
    r1, r2 = np.abs(z1) ** 2, np.abs(z2) ** 2
    w = (-(3 * r1 + 2 * r2) * A2 - (3 * r2 + 2 * r1) * B2
         - (a * np.conj(b) * z1 * np.conj(z2) + np.conj(a) * b * np.conj(z1) * z2)
         - c * (np.conj(a) * np.conj(z1) + np.conj(b) * np.conj(z2))
         - np.conj(c) * (a * z1 + b * z2) + abs(c) ** 2)
    return w.real


def curvature_closed_form(p: TorsionFreeParams):
    """Webster curvature of ``|a z1 + b z2 + c|^-2 theta`` (a constant)."""
    return abs(p.c) ** 2 - abs(p.a) ** 2 - abs(p.b) ** 2


def _exact_coeff(x):
    return GaussianRational(Fraction(complex(x).real), Fraction(complex(x).imag))


def exact_torsion_free_residual(p: TorsionFreeParams, points):
    """Exact ``lambda_{,11} - 2 lambda_{,1}^2`` at Gaussian-rational points.

    With ``w`` the affine polynomial, ``Z1 wbar = 0`` and the chain rule give

        lambda_{,1}  = -(Z1 w) / (2w)
        lambda_{,11} = -(Z1 Z1 w) / (2w) + (Z1 w)^2 / (2 w^2)

    and every piece is evaluated with rational arithmetic (``Z1 w`` carries one
    factor ``1/sqrt 2``, so its square is rational).  Returns the largest
    ``|residual|^2`` over the points, as a ``Fraction``.
    """
    w = (PolyField.z1() * _exact_coeff(p.a) + PolyField.z2() * _exact_coeff(p.b)
         + PolyField.constant(_exact_coeff(p.c)))
    if not poly_frame_derivative(w.conj(), "Z1").is_zero():
        raise AssertionError("Z1 must annihilate antiholomorphic polynomials")
    zw = poly_frame_derivative(w, "Z1")
    zzw = poly_frame_derivative(zw, "Z1")
    if zzw.root2 % 2:
        raise AssertionError("second frame derivative must have a rational scale")
    sq_scale = Fraction(1, 2 ** zw.root2)
    worst = Fraction(0)
    for z1, z2 in points:
        wv, _ = w.evaluate_exact(z1, z2)
        d1, _ = zw.evaluate_exact(z1, z2)
        d2, _ = zzw.evaluate_exact(z1, z2)
        zw_sq = d1 * d1 * sq_scale
        lam1_sq = zw_sq / (wv * wv * 4)
        lam11 = -d2 / (wv * 2) + zw_sq / (wv * wv * 2)
        worst = max(worst, (lam11 - lam1_sq * 2).abs2())
    return worst


def rational_sphere_points(n, seed=0):
    """Gaussian-rational points of S^3 (inverse stereographic images of Q^3)."""
    rng = np.random.default_rng(seed)
    pts = []
    for _ in range(n):
        q = [Fraction(int(v), int(d)) for v, d in zip(rng.integers(-9, 10, size=3), rng.integers(1, 7, size=3))]
        s = sum(x * x for x in q)
        pts.append((GaussianRational(2 * q[0] / (s + 1), 2 * q[1] / (s + 1)),
                    GaussianRational(2 * q[2] / (s + 1), (s - 1) / (s + 1))))
    return pts


@dataclass
class TorsionFreeReport:
    """Max-norm residuals of ``lambda_{,11} - 2 lambda_{,1}^2`` and of the torsion."""

    equation_residual: float
    torsion: float
    exact_residual: Fraction | None = None


def verify_torsion_free(p: TorsionFreeParams, grid, order=8, exact_points=0, seed=0):
    from .calculus import FrameCalculus
    from .transform import torsion

    calc = FrameCalculus(grid, order)
    lam = torsion_free_lambda(p, grid)
    l1 = calc.z1(lam)
    l11, _, _ = calc.covariant_second(lam)
    report = TorsionFreeReport(float(np.max(np.abs(l11 - 2.0 * l1**2))),
                               float(np.max(np.abs(torsion(calc, lam)))))
    if exact_points:
        report.exact_residual = exact_torsion_free_residual(p, rational_sphere_points(exact_points, seed))
    return report
