"""Harnack quantities of a flowed contact form.

With ``eta = e Z1 + conj(e) Z1bar`` in the flowed frame,
``<grad W, eta> = 2 Re(W_{,1} e)`` and ``|eta|^2 = 2|e|^2``, so

    Z = 2 Lap_b W + W^2 + W/t + 2 Re(W_{,1} e) + (W/4)|e|^2

is a convex quadratic in ``e`` for ``W > 0``.  Its minimum sits at
``e = -4 W_{,1bar} / W`` and equals

    Y = 2 Lap_b W + W^2 + W/t - 2 |grad_b W|^2 / W,

with ``Z - Y = (W/4)|e - e_opt|^2``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import HypothesisError, UsageError
from .timeseries import check_uniform, central_weights, combine
from .transform import PseudohermitianState


@dataclass(frozen=True)
class LegendrianField:
    """A horizontal field, stored as its ``Z1`` coefficient in the flowed frame."""

    eta1: np.ndarray

    @property
    def eta1bar(self):
        return np.conj(self.eta1)

    def norm2(self):
        return 2.0 * np.abs(self.eta1) ** 2

    def hatted(self, state: PseudohermitianState):
        """``Z1_hat`` coefficient of the same vector field."""
        return np.exp(-state.lam) * self.eta1

    @classmethod
    def from_hatted(cls, state: PseudohermitianState, coeff):
        return cls(np.exp(state.lam) * np.asarray(coeff, dtype=complex))

    @classmethod
    def random(cls, rng, shape, scale=1.0):
        return cls(scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)))


def _check_time(t):
    if not t > 0:
        raise UsageError(f"Harnack quantities need t > 0, got {t}")


def require_positive(state: PseudohermitianState):
    w = state.W
    k = int(np.argmin(w))
    if not w.flat[k] > 0:
        eta, x1, x2 = state.grid.node_coordinates(k)
        raise HypothesisError(
            f"W = {w.flat[k]:.6g} <= 0 at node {k} (eta={eta:.6g}, xi1={x1:.6g}, xi2={x2:.6g})")


def harnack_base(state: PseudohermitianState, t):
    """The part of Z that does not depend on eta."""
    _check_time(t)
    w = state.W
    return 2.0 * state.lap_W + w * w + w / t


def harnack_Z(state: PseudohermitianState, eta: LegendrianField, t):
    base = harnack_base(state, t)
    _, w1 = state.grad_W
    if np.shape(eta.eta1) != state.grid.shape:
        raise UsageError("Legendrian field does not match the grid")
    return base + 2.0 * (w1 * eta.eta1).real + 0.25 * state.W * np.abs(eta.eta1) ** 2


def harnack_Y(state: PseudohermitianState, t):
    require_positive(state)
    base = harnack_base(state, t)
    return base - 2.0 * state.grad_W_norm2 / state.W


def optimal_eta(state: PseudohermitianState) -> LegendrianField:
    require_positive(state)
    wb, _ = state.grad_W
    return LegendrianField(-4.0 * wb / state.W)


def harnack_gap(state: PseudohermitianState, eta: LegendrianField):
    """``Z - Y`` in completed-square form, free of cancellation."""
    opt = optimal_eta(state)
    return 0.25 * state.W * np.abs(eta.eta1 - opt.eta1) ** 2


def differential_residual_field(w_dot, state: PseudohermitianState, t):
    """``dW/dt + 2W/t - 4|grad_b W|^2 / W`` given a time derivative of W."""
    _check_time(t)
    return w_dot + 2.0 * state.W / t - 4.0 * state.grad_W_norm2 / state.W


def differential_harnack_residual(states):
    """Residual fields at the interior levels of a uniform-step window.

    Returns a list of ``(t, field)`` pairs.
    """
    times = [s.t for s in states]
    check_uniform(times)
    out = []
    for a, b, c in zip(states, states[1:], states[2:]):
        _check_time(b.t)
        w_dot = combine(central_weights(a.t, b.t, c.t), (a.W, b.W, c.W))
        out.append((b.t, differential_residual_field(w_dot, b, b.t)))
    return out
