"""Quantities of the contact form ``theta = exp(2 lambda) theta_hat``.

Everything is obtained from derivatives in the fixed frame; no flowed
discrete frame is ever built.  With hatted derivatives ``l1 = Z1_hat lambda``
and ``Z1 = exp(-lambda) Z1_hat``:

    W        = exp(-2 lambda) (-4 Lap_hat lambda - 4 |grad_hat lambda|^2 + W_hat)
    A11      = exp(-2 lambda) (2i lambda_{,11} - 4i l1^2)
    f_{,1}   = exp(-lambda) f_{,1 hat}
    Lap_b f  = exp(-2 lambda) (Lap_hat f + 2 <grad_hat lambda, grad_hat f>)
    f_{,11}  = exp(-2 lambda) (f_{,11 hat} - 4 l1 f_{,1 hat})
    f_{,1 1bar} = exp(-2 lambda) (f_{,1 1bar hat} + 2 l1bar f_{,1 hat})
    f_{,1bar 1} = exp(-2 lambda) (f_{,1bar 1 hat} + 2 l1 f_{,1bar hat})
    f_{,0}   = -i (f_{,1 1bar} - f_{,1bar 1})

The second-derivative rule reads the ``lambda_{,1} W_{,1}`` correction in the
flowed frame: ``W_{,1hat 1hat} = exp(2 lambda)(W_{,11} + 4 lambda_{,1} W_{,1})``
with unhatted indices on the right.  Connection values of the flowed frame:

    omega(Z1) = 3 exp(-lambda) l1,   omega(Z1bar) = -3 exp(-lambda) l1bar,
    omega(T)  = i exp(-2 lambda) (Lap_hat lambda - 4 |l1|^2 - 1).
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from functools import cached_property

import numpy as np

from .calculus import FrameCalculus, real_part
from .errors import DataError, UsageError

W_HAT = 1.0
FLOWED_INDEX_CONVENTION = "flowed"


class _LambdaParts:
    """Hatted derivatives of the conformal factor, shared by all formulas."""

    def __init__(self, calc: FrameCalculus, lam):
        lam = np.asarray(lam, dtype=float)
        if lam.shape != calc.grid.shape:
            raise UsageError(f"lambda has shape {lam.shape}, grid is {calc.grid.shape}")
        if not np.all(np.isfinite(lam)):
            raise DataError("lambda contains non-finite values")
        self.calc = calc
        self.lam = lam
        self.jet = j = calc.jet(lam, mixed=False)
        self.l1 = calc._z1(j)
        self.l1b = np.conj(self.l1)
        self.lap = calc._lap(j)
        self.e2 = np.exp(-2.0 * lam)
        self.e1 = np.exp(-lam)
        self.grad2 = 2.0 * (self.l1.real**2 + self.l1.imag**2)

    @cached_property
    def l11(self):
        return self.calc._f11(self.jet)


def _parts(calc, lam):
    return lam if isinstance(lam, _LambdaParts) else _LambdaParts(calc, lam)


def webster_curvature(calc: FrameCalculus, lam, w_hat=W_HAT):
    p = _parts(calc, lam)
    return p.e2 * (-4.0 * p.lap - 4.0 * p.grad2 + w_hat)


def torsion(calc: FrameCalculus, lam):
    p = _parts(calc, lam)
    return p.e2 * (2j * p.l11 - 4j * p.l1**2)


def flowed_gradient(calc: FrameCalculus, lam, f):
    """Flowed-frame components ``(f_{,1bar}, f_{,1})``."""
    p = _parts(calc, lam)
    fb, f1 = calc.subgradient(f)
    return p.e1 * fb, p.e1 * f1


def flowed_sublaplacian(calc: FrameCalculus, lam, f):
    p = _parts(calc, lam)
    j = calc.jet(f)
    f1, f1b = calc._z1(j), calc._z1bar(j)
    inner = (p.l1 * f1b + p.l1b * f1)
    out = p.e2 * (calc._lap(j) + 2.0 * inner)
    if np.iscomplexobj(f):
        return out
    return real_part(out, what="flowed sublaplacian")[0]


def _flowed_second(calc, p, f):
    j = calc.jet(f)
    f1, f1b = calc._z1(j), calc._z1bar(j)
    lap, tf = calc._lap(j), calc._reeb(j)
    f11 = p.e2 * (calc._f11(j) - 4.0 * p.l1 * f1)
    f11b = p.e2 * (0.5 * lap + 0.5j * tf + 2.0 * p.l1b * f1)
    f1b1 = p.e2 * (0.5 * lap - 0.5j * tf + 2.0 * p.l1 * f1b)
    return f11, f11b, f1b1


def flowed_hessian11(calc: FrameCalculus, lam, f):
    """``f_{,11}`` with respect to ``theta``."""
    return _flowed_second(calc, _parts(calc, lam), f)[0]


def flowed_covariant_second(calc: FrameCalculus, lam, f):
    """``(f_{,11}, f_{,1 1bar}, f_{,1bar 1})`` with respect to ``theta``."""
    return _flowed_second(calc, _parts(calc, lam), f)


def reeb_derivative(calc: FrameCalculus, lam, f, return_residue=False):
    """``f_{,0}`` of a real field via the commutation relation."""
    p = _parts(calc, lam)
    _, f11b, f1b1 = _flowed_second(calc, p, f)
    scale = float(np.max(np.abs(f11b))) + float(np.max(np.abs(f1b1)))
    out, residue = real_part(-1j * (f11b - f1b1), scale=scale, what="reeb derivative")
    return (out, residue) if return_residue else out


def _reeb_complex(calc, p, f):
    if np.iscomplexobj(f):
        return reeb_derivative(calc, p, f.real) + 1j * reeb_derivative(calc, p, f.imag)
    return reeb_derivative(calc, p, f)


def connection_values(calc: FrameCalculus, lam):
    """``(omega(Z1), omega(Z1bar), omega(T))`` of the flowed frame."""
    p = _parts(calc, lam)
    return (3.0 * p.e1 * p.l1, -3.0 * p.e1 * p.l1b,
            1j * p.e2 * (p.lap - 2.0 * p.grad2 - 1.0))


def torsion_derivatives(calc: FrameCalculus, lam, a11=None):
    """``(A_{11,0}, A_{11,1bar}, A_{11,1bar 1})`` of the flowed torsion."""
    p = _parts(calc, lam)
    if a11 is None:
        a11 = torsion(calc, p)
    w_z1, w_z1b, w_t = connection_values(calc, p)
    a0 = _reeb_complex(calc, p, a11) - 2.0 * w_t * a11
    a1b = p.e1 * calc.z1bar(a11) - 2.0 * w_z1b * a11
    a1b1 = p.e1 * calc.z1(a1b) - w_z1 * a1b
    return a0, a1b, a1b1


def cartan_Q11(calc: FrameCalculus, lam):
    """Cartan tensor ``Q11 = W_{,11}/6 + (i/2) W A11 - A11_{,0} - (2i/3) A11_{,1bar 1}``.

    Returns ``(Q11, W_{,11}/6)``; the second value is ``Q11`` with the torsion
    terms dropped, which is what torsion-free runs monitor.
    """
    p = _parts(calc, lam)
    w = webster_curvature(calc, p)
    a11 = torsion(calc, p)
    w11 = flowed_hessian11(calc, p, w)
    a0, _, a1b1 = torsion_derivatives(calc, p, a11)
    q = w11 / 6.0 + 0.5j * w * a11 - a0 - (2j / 3.0) * a1b1
    return q, w11 / 6.0


@dataclass
class DiagnosticsRecord:
    """Max-norm monitors; ``None`` means not evaluated."""

    max_abs_A11: float | None = None
    max_abs_W0: float | None = None
    max_abs_W11: float | None = None
    max_abs_Q11: float | None = None
    max_abs_Q11_torsion_free: float | None = None
    res_2_7: float | None = None
    res_2_8: float | None = None
    res_2_12: float | None = None
    imaginary_residues: dict = field(default_factory=dict)
    index_convention: str = FLOWED_INDEX_CONVENTION

    def to_dict(self):
        return asdict(self)


class PseudohermitianState:
    """Conformal factor ``lambda`` at time ``t`` with lazily built caches.

    Assigning ``state.lam`` drops every cache at once.
    """

    def __init__(self, calc: FrameCalculus, lam, t=0.0):
        self.calc = calc
        self.t = float(t)
        self._cache = {}
        self.lam = lam

    @property
    def lam(self):
        return self._lam

    @lam.setter
    def lam(self, value):
        value = np.array(value, dtype=float)
        if value.shape != self.calc.grid.shape:
            raise UsageError(f"lambda has shape {value.shape}, grid is {self.calc.grid.shape}")
        value.setflags(write=False)
        self._lam = value
        self._cache = {}

    @property
    def grid(self):
        return self.calc.grid

    @property
    def caches_valid(self):
        return "parts" in self._cache

    def _get(self, key, fn):
        if key not in self._cache:
            self._cache[key] = fn()
        return self._cache[key]

    @property
    def parts(self):
        return self._get("parts", lambda: _LambdaParts(self.calc, self._lam))

    def build(self):
        """Build the standard caches (W, A11, grad W, Lap_b W)."""
        self.W, self.A11, self.grad_W, self.lap_W
        return self

    @property
    def W(self):
        return self._get("W", lambda: webster_curvature(self.calc, self.parts))

    @property
    def A11(self):
        return self._get("A11", lambda: torsion(self.calc, self.parts))

    @property
    def W_jet(self):
        return self._get("W_jet", lambda: self.calc.jet(self.W))

    def _w_hat_first(self):
        j = self.W_jet
        return self.calc._z1bar(j), self.calc._z1(j)

    @property
    def grad_W(self):
        """Flowed components ``(W_{,1bar}, W_{,1})``."""
        def make():
            wb, w1 = self._w_hat_first()
            return self.parts.e1 * wb, self.parts.e1 * w1
        return self._get("grad_W", make)

    @property
    def grad_W_norm2(self):
        """``|grad_b W|^2`` with respect to ``theta``."""
        wb, w1 = self.grad_W
        return 2.0 * (w1 * wb).real

    @property
    def lap_W(self):
        def make():
            j, p = self.W_jet, self.parts
            w1, wb = self.calc._z1(j), self.calc._z1bar(j)
            out = p.e2 * (self.calc._lap(j) + 2.0 * (p.l1 * wb + p.l1b * w1))
            return real_part(out, what="Lap_b W")[0]
        return self._get("lap_W", make)

    def _second_W(self):
        def make():
            j, p = self.W_jet, self.parts
            c = self.calc
            w1, wb = c._z1(j), c._z1bar(j)
            lap, tw = c._lap(j), c._reeb(j)
            w11 = p.e2 * (c._f11(j) - 4.0 * p.l1 * w1)
            w11b = p.e2 * (0.5 * lap + 0.5j * tw + 2.0 * p.l1b * w1)
            w1b1 = p.e2 * (0.5 * lap - 0.5j * tw + 2.0 * p.l1 * wb)
            return w11, w11b, w1b1
        return self._get("second_W", make)

    @property
    def W11(self):
        return self._second_W()[0]

    @property
    def W0(self):
        def make():
            _, a, b = self._second_W()
            scale = float(np.max(np.abs(a))) + float(np.max(np.abs(b)))
            out, res = real_part(-1j * (a - b), scale=scale, what="W_{,0}")
            self._cache["W0_residue"] = res
            return out
        return self._get("W0", make)

    def Q11(self):
        return self._get("Q11", lambda: cartan_Q11(self.calc, self.parts))

    def diagnostics(self, cartan=False) -> DiagnosticsRecord:
        rec = DiagnosticsRecord(
            max_abs_A11=float(np.max(np.abs(self.A11))),
            max_abs_W0=float(np.max(np.abs(self.W0))),
            max_abs_W11=float(np.max(np.abs(self.W11))),
        )
        rec.imaginary_residues["W0"] = self._cache.get("W0_residue", 0.0)
        if cartan:
            q, qs = self.Q11()
            rec.max_abs_Q11 = float(np.max(np.abs(q)))
            rec.max_abs_Q11_torsion_free = float(np.max(np.abs(qs)))
        return rec

    def with_lambda(self, lam, t):
        return PseudohermitianState(self.calc, lam, t)
