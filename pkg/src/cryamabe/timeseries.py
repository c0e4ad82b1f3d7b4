"""Three-point time differences on possibly nonuniform time levels."""
from __future__ import annotations

import numpy as np

from .errors import UsageError

UNIFORM_RTOL = 1e-9


def central_weights(t0, t1, t2):
    """Weights for ``f'(t1)`` from values at ``t0 < t1 < t2``."""
    h1, h2 = t1 - t0, t2 - t1
    if h1 <= 0 or h2 <= 0:
        raise UsageError("time levels must be strictly increasing")
    return (-h2 / (h1 * (h1 + h2)), (h2 - h1) / (h1 * h2), h1 / (h2 * (h1 + h2)))


def backward_weights(t0, t1, t2):
    """Weights for ``f'(t2)`` from values at ``t0 < t1 < t2``."""
    h1, h2 = t1 - t0, t2 - t1
    if h1 <= 0 or h2 <= 0:
        raise UsageError("time levels must be strictly increasing")
    return (h2 / (h1 * (h1 + h2)), -(h1 + h2) / (h1 * h2), (h1 + 2 * h2) / (h2 * (h1 + h2)))


def combine(weights, values):
    return sum(w * v for w, v in zip(weights, values))


def check_uniform(times, minimum=3):
    """Validate a uniform window and return its step."""
    times = np.asarray(times, dtype=float)
    if times.size < minimum:
        raise UsageError(f"need at least {minimum} time levels, got {times.size}")
    steps = np.diff(times)
    if np.any(steps <= 0):
        raise UsageError("time levels must be strictly increasing")
    if np.max(np.abs(steps - steps[0])) > UNIFORM_RTOL * steps[0]:
        raise UsageError(f"time steps are not uniform: {steps.min():.6g} .. {steps.max():.6g}")
    return float(steps[0])
