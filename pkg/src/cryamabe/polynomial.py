"""Exact polynomial fields on C^2, used as a differentiation oracle.

A :class:`PolyField` is a finite sum of monomials
``z1^p1 z2^p2 zbar1^q1 zbar2^q2`` with Gaussian-rational coefficients and an
overall factor ``2^(-root2/2)``.  The frame fields act exactly:

    Z1    = (zbar1 d/dz2 - zbar2 d/dz1) / sqrt 2
    Z1bar = (z1 d/dzbar2 - z2 d/dzbar1) / sqrt 2
    T     = (i/2) (z-degree - zbar-degree)

so every identity can be checked with rational arithmetic; the ``1/sqrt 2``
factors are tracked by the exponent ``root2``.
"""
from __future__ import annotations

from fractions import Fraction
from numbers import Rational

import numpy as np


class GaussianRational:
    """``re + i im`` with ``Fraction`` parts."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = Fraction(re)
        self.im = Fraction(im)

    @classmethod
    def coerce(cls, x):
        if isinstance(x, GaussianRational):
            return x
        if isinstance(x, (int, Rational)):
            return cls(x)
        if isinstance(x, float):
            return cls(Fraction(x))
        if isinstance(x, complex):
            return cls(Fraction(x.real), Fraction(x.imag))
        raise TypeError(f"cannot convert {type(x).__name__} to GaussianRational")

    def __add__(self, o):
        o = GaussianRational.coerce(o)
        return GaussianRational(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __sub__(self, o):
        o = GaussianRational.coerce(o)
        return GaussianRational(self.re - o.re, self.im - o.im)

    def __rsub__(self, o):
        return GaussianRational.coerce(o) - self

    def __mul__(self, o):
        o = GaussianRational.coerce(o)
        return GaussianRational(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def __truediv__(self, o):
        o = GaussianRational.coerce(o)
        d = o.re * o.re + o.im * o.im
        if d == 0:
            raise ZeroDivisionError("division by zero")
        return self * GaussianRational(o.re / d, -o.im / d)

    def __neg__(self):
        return GaussianRational(-self.re, -self.im)

    def __eq__(self, o):
        try:
            o = GaussianRational.coerce(o)
        except TypeError:
            return NotImplemented
        return self.re == o.re and self.im == o.im

    def __hash__(self):
        return hash((self.re, self.im))

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __repr__(self):
        return f"({self.re}{'+' if self.im >= 0 else '-'}{abs(self.im)}i)"

    def conj(self):
        return GaussianRational(self.re, -self.im)

    def abs2(self):
        return self.re * self.re + self.im * self.im

    def is_zero(self):
        return self.re == 0 and self.im == 0


ZERO = GaussianRational(0)
I = GaussianRational(0, 1)


class PolyField:
    """Sparse exact polynomial in ``z1, z2, zbar1, zbar2``."""

    def __init__(self, terms=None, root2=0):
        self.terms = {}
        for k, v in (terms or {}).items():
            v = GaussianRational.coerce(v)
            if not v.is_zero():
                key = tuple(int(e) for e in k)
                if len(key) != 4 or min(key) < 0:
                    raise ValueError(f"bad exponent tuple {k!r}")
                self.terms[key] = self.terms.get(key, ZERO) + v
        self.root2 = int(root2)
        self._normalise()

    def _normalise(self):
        self.terms = {k: v for k, v in self.terms.items() if not v.is_zero()}
        if not self.terms:
            self.root2 = 0
            return
        while self.root2 >= 2:
            self.terms = {k: v * Fraction(1, 2) for k, v in self.terms.items()}
            self.root2 -= 2
        while self.root2 < 0:
            self.terms = {k: v * 2 for k, v in self.terms.items()}
            self.root2 += 2

    # -- constructors -----------------------------------------------------------

    @classmethod
    def constant(cls, c):
        return cls({(0, 0, 0, 0): c})

    @classmethod
    def monomial(cls, p1=0, p2=0, q1=0, q2=0, coeff=1):
        return cls({(p1, p2, q1, q2): coeff})

    @classmethod
    def z1(cls):
        return cls.monomial(p1=1)

    @classmethod
    def z2(cls):
        return cls.monomial(p2=1)

    @classmethod
    def zbar1(cls):
        return cls.monomial(q1=1)

    @classmethod
    def zbar2(cls):
        return cls.monomial(q2=1)

    # -- algebra ------------------------------------------------------------------

    def copy(self):
        return PolyField(dict(self.terms), self.root2)

    def is_zero(self):
        return not self.terms

    def _aligned(self, other):
        if self.is_zero() or other.is_zero() or self.root2 == other.root2:
            return max(self.root2, other.root2) if not (self.is_zero() or other.is_zero()) else \
                (other.root2 if self.is_zero() else self.root2)
        raise ValueError("cannot add polynomials scaled by 1 and 1/sqrt(2) exactly")

    def __add__(self, other):
        if not isinstance(other, PolyField):
            other = PolyField.constant(other)
        r = self._aligned(other)
        terms = dict(self.terms)
        for k, v in other.terms.items():
            terms[k] = terms.get(k, ZERO) + v
        return PolyField(terms, r)

    __radd__ = __add__

    def __neg__(self):
        return PolyField({k: -v for k, v in self.terms.items()}, self.root2)

    def __sub__(self, other):
        if not isinstance(other, PolyField):
            other = PolyField.constant(other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, PolyField):
            terms = {}
            for ka, va in self.terms.items():
                for kb, vb in other.terms.items():
                    k = tuple(x + y for x, y in zip(ka, kb))
                    terms[k] = terms.get(k, ZERO) + va * vb
            return PolyField(terms, self.root2 + other.root2)
        c = GaussianRational.coerce(other)
        return PolyField({k: v * c for k, v in self.terms.items()}, self.root2)

    __rmul__ = __mul__

    def __pow__(self, n):
        out = PolyField.constant(1)
        for _ in range(int(n)):
            out = out * self
        return out

    def __eq__(self, other):
        if not isinstance(other, PolyField):
            other = PolyField.constant(other)
        return (self - other).is_zero()

    def conj(self):
        """Complex conjugate polynomial: swap z and zbar, conjugate coefficients."""
        return PolyField({(q1, q2, p1, p2): v.conj() for (p1, p2, q1, q2), v in self.terms.items()},
                         self.root2)

    def real_part(self):
        return (self + self.conj()) * Fraction(1, 2)

    def degree(self):
        return max((sum(k) for k in self.terms), default=0)

    # -- evaluation -------------------------------------------------------------

    def evaluate(self, z1, z2):
        """Floating-point evaluation at arrays of points."""
        z1 = np.asarray(z1, dtype=complex)
        z2 = np.asarray(z2, dtype=complex)
        w1, w2 = np.conj(z1), np.conj(z2)
        out = np.zeros(np.broadcast(z1, z2).shape, dtype=complex)
        for (p1, p2, q1, q2), v in self.terms.items():
            out += complex(v) * z1**p1 * z2**p2 * w1**q1 * w2**q2
        return out * 2.0 ** (-0.5 * self.root2)

    def evaluate_exact(self, z1, z2):
        """Exact evaluation at Gaussian-rational ``(z1, z2)``.

        Returns ``(value, root2)`` meaning ``value * 2^(-root2/2)``.
        """
        z1, z2 = GaussianRational.coerce(z1), GaussianRational.coerce(z2)
        w1, w2 = z1.conj(), z2.conj()
        acc = ZERO
        for (p1, p2, q1, q2), v in self.terms.items():
            m = v
            for base, e in ((z1, p1), (z2, p2), (w1, q1), (w2, q2)):
                for _ in range(e):
                    m = m * base
            acc = acc + m
        return acc, self.root2

    def __repr__(self):
        if not self.terms:
            return "PolyField(0)"
        parts = []
        for k, v in sorted(self.terms.items()):
            mon = "*".join(f"{n}^{e}" for n, e in zip(("z1", "z2", "zb1", "zb2"), k) if e)
            parts.append(f"{v!r}{'*' + mon if mon else ''}")
        scale = "" if self.root2 == 0 else " / sqrt(2)"
        return f"PolyField({' + '.join(parts)}{scale})"


def _z1_op(f):
    terms = {}
    for (p1, p2, q1, q2), v in f.terms.items():
        if p2:
            k = (p1, p2 - 1, q1 + 1, q2)
            terms[k] = terms.get(k, ZERO) + v * p2
        if p1:
            k = (p1 - 1, p2, q1, q2 + 1)
            terms[k] = terms.get(k, ZERO) - v * p1
    return PolyField(terms, f.root2 + 1)


def _z1bar_op(f):
    terms = {}
    for (p1, p2, q1, q2), v in f.terms.items():
        if q2:
            k = (p1 + 1, p2, q1, q2 - 1)
            terms[k] = terms.get(k, ZERO) + v * q2
        if q1:
            k = (p1, p2 + 1, q1 - 1, q2)
            terms[k] = terms.get(k, ZERO) - v * q1
    return PolyField(terms, f.root2 + 1)


def _reeb_op(f):
    return PolyField({k: v * GaussianRational(0, Fraction(k[0] + k[1] - k[2] - k[3], 2))
                      for k, v in f.terms.items()}, f.root2)


def poly_frame_derivative(f: PolyField, direction: str) -> PolyField:
    """Exact ``Z1 f``, ``Z1bar f`` or ``T f``."""
    ops = {"Z1": _z1_op, "Z1bar": _z1bar_op, "T": _reeb_op}
    try:
        return ops[direction](f)
    except KeyError:
        raise ValueError(f"direction must be one of {tuple(ops)}, got {direction!r}") from None


def poly_sublaplacian(f: PolyField) -> PolyField:
    """``Z1bar Z1 f + Z1 Z1bar f`` (the fixed connection vanishes on Z1, Z1bar)."""
    return _z1bar_op(_z1_op(f)) + _z1_op(_z1bar_op(f))


def poly_covariant_second(f: PolyField):
    """``(f_{,11}, f_{,1 1bar}, f_{,1bar 1})``."""
    return _z1_op(_z1_op(f)), _z1bar_op(_z1_op(f)), _z1_op(_z1bar_op(f))


def random_smooth_field(seed, max_degree, grid=None):
    """A reproducible real polynomial of degree ``<= max_degree`` (at most 4).

    Coefficients are small rationals.  Returns ``(sampled, poly)`` where
    ``sampled`` is ``None`` when no grid is given.
    """
    if not 0 <= max_degree <= 4:
        raise ValueError("max_degree must lie in 0..4")
    rng = np.random.default_rng(seed)
    terms = {}
    for p1 in range(max_degree + 1):
        for p2 in range(max_degree + 1 - p1):
            for q1 in range(max_degree + 1 - p1 - p2):
                for q2 in range(max_degree + 1 - p1 - p2 - q1):
                    re, im = rng.integers(-8, 9, size=2)
                    den = int(rng.integers(4, 17))
                    terms[(p1, p2, q1, q2)] = GaussianRational(Fraction(int(re), den), Fraction(int(im), den))
    poly = PolyField(terms).real_part()
    sampled = None if grid is None else poly.evaluate(grid.z1, grid.z2).real
    return sampled, poly
