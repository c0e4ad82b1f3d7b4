"""Horizontal paths on S^3 and the weighted action of the integrated Harnack bound.

Paths are driven by controls in the Levi-orthonormal horizontal frame

    e1 = (Z1 + Z1bar)/sqrt 2,   e2 = i (Z1 - Z1bar)/sqrt 2,

whose C^2 velocities are ``w/2`` and ``i w/2`` with ``w = (-conj z2, conj z1)``.
Controls are piecewise constant on ``N`` equal segments, so every admissible
path is horizontal by construction.  On one segment, ``v = (z1, conj z2)``
solves ``v' = M v`` with ``M = [[0, -alpha], [conj alpha, 0]]`` and
``alpha = (u1 + i u2)/2``; since ``M^2 = -|alpha|^2``, the exact flow is

    exp(M s) = cos(|alpha| s) I + sin(|alpha| s)/|alpha| M.

That closed form seeds the optimizer and serves as the oracle for the RK4
propagator in :mod:`cryamabe.kernels`.
"""
from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares, minimize

from .calculus import FrameCalculus, extend_eta
from .errors import HypothesisError, ReachabilityError, UsageError
from .kernels import interp_periodic, propagate_paths
from .sphere import HopfGrid, SpherePoint, hopf_coordinates
from .transform import webster_curvature

GHOSTS = 2
DEFECT_TOL = 1e-6
SPHERE_TOL = 1e-10
HORIZONTAL_TOL = 1e-8
MU0, MU_GROWTH, MU_ROUNDS = 10.0, 10.0, 6
W_FLOOR = 1e-12


def horizontal_frame(p: SpherePoint):
    """C^2 velocities of ``e1`` and ``e2`` at ``p``."""
    w = np.array([-np.conj(p.z2), np.conj(p.z1)])
    return 0.5 * w, 0.5j * w


def levi_norm2(p: SpherePoint, v):
    """Hatted Levi norm of a horizontal C^2 velocity: ``2|v^1|^2``."""
    v1 = math.sqrt(2.0) * (-v[0] * p.z2 + v[1] * p.z1)
    return float(2.0 * abs(v1) ** 2)


def levi_inner(p: SpherePoint, u, v):
    """Polarization of :func:`levi_norm2`."""
    return 0.25 * (levi_norm2(p, np.add(u, v)) - levi_norm2(p, np.subtract(u, v)))


def segment_map(controls, duration):
    """Exact 2x2 propagator of ``(z1, conj z2)`` for constant controls."""
    alpha = 0.5 * (controls[0] + 1j * controls[1])
    m = np.array([[0.0, -alpha], [np.conj(alpha), 0.0]])
    r = abs(alpha)
    if r == 0.0:
        return np.eye(2, dtype=complex)
    return math.cos(r * duration) * np.eye(2) + math.sin(r * duration) / r * m


def exact_endpoint(z0, controls, duration):
    """Endpoint of a piecewise-constant control path via the closed-form flow."""
    v = np.array([z0[0], np.conj(z0[1])], dtype=complex)
    seg = duration / len(controls)
    for c in controls:
        v = segment_map(c, seg) @ v
    return np.array([v[0], np.conj(v[1])])


def chordal(z, x):
    return float(np.sqrt(np.sum(np.abs(np.asarray(z) - np.asarray(x)) ** 2)))


class LambdaHistory:
    """Conformal factor on a grid at increasing times, linear in time between them.

    A single snapshot means a time-independent factor.
    """

    def __init__(self, grid: HopfGrid, times, fields, order=8):
        times = np.asarray(times, dtype=float)
        if times.ndim != 1 or len(times) != len(fields) or len(times) == 0:
            raise UsageError("need matching, nonempty times and fields")
        if np.any(np.diff(times) <= 0):
            raise UsageError("snapshot times must increase")
        self.grid = grid
        self.times = times
        self.fields = [np.asarray(f, dtype=float) for f in fields]
        self.order = order
        self.ext = np.stack([extend_eta(f, GHOSTS) for f in self.fields])
        self._w_ext = None

    @classmethod
    def constant(cls, grid, value=0.0):
        return cls(grid, [0.0], [np.full(grid.shape, float(value))])

    @classmethod
    def from_snapshots(cls, grid, snapshots, t_lo=None, t_hi=None):
        keep = [s for s in snapshots
                if (t_lo is None or s.t >= t_lo - 1e-12) and (t_hi is None or s.t <= t_hi + 1e-12)]
        return cls(grid, [s.t for s in keep], [s.lam for s in keep])

    def shifted(self, c):
        return LambdaHistory(self.grid, self.times, [f + c for f in self.fields], self.order)

    @property
    def static(self):
        return len(self.times) == 1

    def covers(self, t1, t2):
        if self.static:
            return True
        tol = 1e-12 * max(1.0, abs(t2))
        return self.times[0] <= t1 + tol and self.times[-1] >= t2 - tol

    def _at(self, ext, points, t):
        z = np.atleast_2d(np.asarray(points, dtype=complex))
        eta, x1, x2 = hopf_coordinates(z[:, 0], z[:, 1])
        args = (np.asarray(eta, float), np.mod(x1, 2 * np.pi), np.mod(x2, 2 * np.pi))
        if self.static:
            return interp_periodic(ext[0], GHOSTS, self.grid.h_eta, *args)
        s = int(np.clip(np.searchsorted(self.times, t, side="right") - 1, 0, len(self.times) - 2))
        w = (t - self.times[s]) / (self.times[s + 1] - self.times[s])
        a = interp_periodic(ext[s], GHOSTS, self.grid.h_eta, *args)
        b = interp_periodic(ext[s + 1], GHOSTS, self.grid.h_eta, *args)
        return (1.0 - w) * a + w * b

    def lam_at(self, points, t):
        return self._at(self.ext, points, t)

    def W_at(self, points, t):
        """Webster curvature interpolated from the snapshot fields."""
        if self._w_ext is None:
            calc = FrameCalculus(self.grid, self.order)
            self._w_ext = np.stack([extend_eta(webster_curvature(calc, f), GHOSTS)
                                    for f in self.fields])
        return self._at(self._w_ext, points, t)


@dataclass
class LegendrianPath:
    t1: float
    t2: float
    controls: np.ndarray
    knots: np.ndarray
    action: float | None = None
    defect: float | None = None

    @property
    def points(self):
        return [SpherePoint(*k) for k in self.knots]

    @property
    def n_segments(self):
        return len(self.controls)

    def knot_velocities(self):
        """C^2 velocity at each knot from the control of the segment that starts there."""
        ctrl = np.vstack([self.controls, self.controls[-1:]])
        w = np.stack([-np.conj(self.knots[:, 1]), np.conj(self.knots[:, 0])], axis=1)
        alpha = 0.5 * (ctrl[:, 0] + 1j * ctrl[:, 1])
        return alpha[:, None] * w


def _as_z(p):
    return np.array(p.as_c2() if isinstance(p, SpherePoint) else p, dtype=complex)


def _validate_times(t1, t2, t_min=0.0):
    if not t2 > t1:
        raise UsageError(f"need t2 > t1, got ({t1}, {t2})")
    if t1 < t_min:
        raise UsageError(f"t1 = {t1} is below the monitored window start {t_min}")


def _propagate(z0, controls, t1, t2, history, substeps):
    controls = np.ascontiguousarray(np.atleast_3d(controls).reshape(-1, *np.shape(controls)[-2:]),
                                    dtype=float)
    if substeps % 2:
        raise UsageError("substeps must be even (Simpson quadrature)")
    seg = (t2 - t1) / controls.shape[1]
    hist = history or _ZERO
    knots, action = propagate_paths(np.asarray(z0, dtype=complex), controls, float(t1), float(seg),
                                    int(substeps), hist.times, hist.ext, GHOSTS, hist.grid.h_eta)
    return knots, action


class _ZeroHistory:
    def __init__(self):
        grid = HopfGrid(4, 4, 4)
        self.grid = grid
        self.times = np.zeros(1)
        self.ext = np.zeros((1, grid.n_eta + 2 * GHOSTS, grid.n_xi1, grid.n_xi2))


_ZERO = _ZeroHistory()


def integrate_path(x1, controls, t1, t2, history: LambdaHistory | None = None, substeps=4):
    """Integrate a horizontal path; the action is included (``lambda = 0`` without a history)."""
    _validate_times(t1, t2)
    controls = np.asarray(controls, dtype=float)
    if controls.ndim != 2 or controls.shape[1] != 2 or controls.shape[0] < 2:
        raise UsageError("controls must have shape (N, 2) with N >= 2")
    if history is not None and not history.covers(t1, t2):
        raise UsageError(f"snapshots do not cover [{t1}, {t2}]")
    knots, act = _propagate(_as_z(x1), controls[None], t1, t2, history, substeps)
    knots = knots[0]
    if np.max(np.abs(np.sum(np.abs(knots) ** 2, axis=1) - 1.0)) > SPHERE_TOL:
        raise UsageError("path left the sphere; use more substeps")
    return LegendrianPath(t1, t2, controls, knots, float(act[0]))


def action(path: LegendrianPath, history: LambdaHistory | None = None, substeps=4):
    """``int exp(2 lambda) (u1^2 + u2^2) dt`` along the path."""
    if history is not None and not history.covers(path.t1, path.t2):
        raise UsageError(f"snapshots do not cover [{path.t1}, {path.t2}]")
    _, act = _propagate(path.knots[0], path.controls[None], path.t1, path.t2, history, substeps)
    return float(act[0])


@dataclass
class _Problem:
    z1: np.ndarray
    z2: np.ndarray
    t1: float
    t2: float
    n: int
    history: LambdaHistory | None
    substeps: int
    fd_step: float = 1e-6

    def evaluate(self, batch):
        knots, act = _propagate(self.z1, batch.reshape(-1, self.n, 2), self.t1, self.t2,
                                self.history, self.substeps)
        return knots[:, -1], act

    def objective(self, mu):
        n2 = 2 * self.n
        eye = np.eye(n2) * self.fd_step

        def fun(x):
            batch = np.vstack([x, x + eye, x - eye])
            ends, act = self.evaluate(batch)
            d2 = np.sum(np.abs(ends - self.z2) ** 2, axis=1)
            f = act + mu * d2
            grad = (f[1:1 + n2] - f[1 + n2:]) / (2 * self.fd_step)
            return float(f[0]), grad
        return fun

    def endpoint_jacobian(self, x):
        n2 = 2 * self.n
        eye = np.eye(n2) * self.fd_step
        ends, act = self.evaluate(np.vstack([x, x + eye, x - eye]))
        real = lambda z: np.concatenate([z.real, z.imag], axis=-1)
        jac = (real(ends[1:1 + n2]) - real(ends[1 + n2:])).T / (2 * self.fd_step)
        return real(ends[0]) - real(self.z2), jac, float(act[0])

    def polish(self, x, tol, iters=12):
        """Minimum-norm Gauss-Newton corrections onto the endpoint constraint.

        The endpoint Jacobian has rank 3 (the endpoint stays on S^3), so the
        pseudo-inverse drops singular values below a relative cutoff.
        """
        r, jac, _ = self.endpoint_jacobian(x)
        norm = np.linalg.norm(r)
        for _ in range(iters):
            if norm <= tol:
                break
            dx = np.linalg.lstsq(jac, r, rcond=1e-6)[0]
            for _ in range(30):
                r_new, jac_new, _ = self.endpoint_jacobian(x - dx)
                if np.linalg.norm(r_new) < norm:
                    break
                dx *= 0.5
            else:
                break
            x, r, jac, norm = x - dx, r_new, jac_new, np.linalg.norm(r_new)
        return x

    def finalize(self, x):
        ends, act = self.evaluate(x[None])
        return float(act[0]), chordal(ends[0], self.z2)


def two_arc_seeds(z1, z2, duration, n, rng, tries=6):
    """Control sequences made of two constant arcs that reach ``z2`` exactly."""
    half = n // 2
    out = []

    def resid(p):
        ctrl = [p[:2]] * half + [p[2:]] * (n - half)
        e = exact_endpoint(z1, ctrl, duration)
        return np.concatenate([(e - z2).real, (e - z2).imag])

    for _ in range(tries):
        p0 = rng.normal(scale=2.0 / duration, size=4)
        sol = least_squares(resid, p0, xtol=1e-14, ftol=1e-14, gtol=1e-14)
        if np.linalg.norm(sol.fun) < 1e-9:
            out.append(np.array([sol.x[:2]] * half + [sol.x[2:]] * (n - half)).ravel())
    return out


@dataclass
class ActionResult:
    L_hat: float
    path: LegendrianPath
    defect: float
    candidates: list = field(default_factory=list)


def minimize_action(x1, t1, x2, t2, history: LambdaHistory | None = None, *, n_segments=8,
                    substeps=4, n_random=2, seed=0, defect_tol=DEFECT_TOL, extra_seeds=()):
    """Penalty-method transcription over piecewise-constant controls.

    Returns the smallest action among starts whose endpoint defect meets
    ``defect_tol``; that value bounds the true infimum from above.
    """
    _validate_times(t1, t2)
    if history is not None and not history.covers(t1, t2):
        raise UsageError(f"snapshots do not cover [{t1}, {t2}]")
    z1, z2 = _as_z(x1), _as_z(x2)
    n = n_segments
    prob = _Problem(z1, z2, t1, t2, n, history, substeps)
    zero = np.zeros((n, 2))
    if chordal(z1, z2) <= defect_tol * 1e-3:
        path = integrate_path(x1, zero, t1, t2, history, substeps)
        path.defect = chordal(z1, z2)
        return ActionResult(0.0, path, path.defect, [(0.0, path.defect)])
    rng = np.random.default_rng(seed)
    dur = t2 - t1
    seeds = two_arc_seeds(z1, z2, dur, n, rng)
    seeds += [rng.normal(scale=2.0 / dur, size=2 * n) for _ in range(n_random)]
    seeds += [np.asarray(s, float).ravel() for s in extra_seeds]
    best, candidates = None, []
    for x in seeds:
        mu = MU0
        for _ in range(MU_ROUNDS):
            res = minimize(prob.objective(mu), x, jac=True, method="L-BFGS-B",
                           options={"ftol": 1e-12, "gtol": 1e-9, "maxiter": 500})
            x = res.x
            _, d = prob.finalize(x)
            if d <= defect_tol:
                break
            mu *= MU_GROWTH
        x = prob.polish(x, 1e-3 * defect_tol)
        act, d = prob.finalize(x)
        candidates.append((act, d))
        if d <= defect_tol and (best is None or act < best[0]):
            best = (act, d, x)
    if best is None:
        raise ReachabilityError(f"no start reached {x2} within {defect_tol:g}",
                                min(d for _, d in candidates))
    act, d, x = best
    path = integrate_path(x1, x.reshape(n, 2), t1, t2, history, substeps)
    path.defect = d
    return ActionResult(act, path, d, candidates)


def brute_force_action(x1, t1, x2, t2, history=None, *, levels=(-1.0, 0.0, 1.0), n_segments=4,
                       speed=None, substeps=4, defect_tol=DEFECT_TOL):
    """Enumerate piecewise-constant controls on a coarse lattice, project each
    onto the endpoint constraint, and return the smallest feasible action."""
    z1, z2 = _as_z(x1), _as_z(x2)
    dur = t2 - t1
    if speed is None:
        speed = 4.0 / dur
    prob = _Problem(z1, z2, t1, t2, n_segments, history, substeps)
    axis = [speed * v for v in levels]
    per_seg = list(itertools.product(axis, axis))
    best = math.inf
    for combo in itertools.product(per_seg, repeat=n_segments):
        x = prob.polish(np.array(combo, float).ravel(), 1e-3 * defect_tol)
        act, d = prob.finalize(x)
        if d <= defect_tol:
            best = min(best, act)
    return best


@dataclass
class HarnackCheck:
    x1: np.ndarray
    t1: float
    x2: np.ndarray
    t2: float
    W1: float
    W2: float
    L_hat: float
    defect: float
    lhs: float
    rhs: float
    passed: bool

    def row(self):
        d = {}
        for name, z in (("x1", self.x1), ("x2", self.x2)):
            d.update({f"{name}_z1_re": float(z[0].real), f"{name}_z1_im": float(z[0].imag),
                      f"{name}_z2_re": float(z[1].real), f"{name}_z2_im": float(z[1].imag)})
        d.update(t1=float(self.t1), t2=float(self.t2), L_hat=float(self.L_hat),
                 defect=float(self.defect), lhs=float(self.lhs), rhs=float(self.rhs),
                 passed=int(self.passed))
        return d


PATH_COLUMNS = ("x1_z1_re", "x1_z1_im", "x1_z2_re", "x1_z2_im", "x2_z1_re", "x2_z1_im",
                "x2_z2_re", "x2_z2_im", "t1", "t2", "L_hat", "defect", "lhs", "rhs", "passed")


def harnack_ratio_bound(t1, t2, L):
    """``(t2/t1)^-2 exp(-L/16)``."""
    return (t2 / t1) ** -2 * math.exp(-L / 16.0)


def ratio_bound_check(x1, t1, x2, t2, history: LambdaHistory, **opt) -> HarnackCheck:
    """Compare ``W(x2,t2)/W(x1,t1)`` with the bound built from the optimizer's action."""
    z1, z2 = _as_z(x1), _as_z(x2)
    if t1 == t2:
        if chordal(z1, z2) > 1e-12:
            raise UsageError("equal times only admit the stationary path; endpoints must agree")
        w = float(history.W_at(z1, t1)[0])
        return HarnackCheck(z1, t1, z2, t2, w, w, 0.0, 0.0, 1.0, 1.0, True)
    w1 = float(history.W_at(z1, t1)[0])
    if not w1 > W_FLOOR:
        raise HypothesisError(f"W(x1, t1) = {w1:.6g} is not positive")
    w2 = float(history.W_at(z2, t2)[0])
    res = minimize_action(z1, t1, z2, t2, history, **opt)
    lhs = w2 / w1
    rhs = harnack_ratio_bound(t1, t2, res.L_hat)
    return HarnackCheck(z1, t1, z2, t2, w1, w2, res.L_hat, res.defect, lhs, rhs, lhs >= rhs)


def write_paths(path, checks):
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=PATH_COLUMNS)
        w.writeheader()
        for c in checks:
            w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in c.row().items()})


def read_pairs(path):
    """Point pairs from JSON: ``[{"x1": [re, im, re, im], "x2": [...], "t1": .., "t2": ..}]``."""
    import json
    with open(path) as fh:
        data = json.load(fh)
    items = data["pairs"] if isinstance(data, dict) else data
    out = []
    for it in items:
        out.append((SpherePoint.from_array(it["x1"]), float(it["t1"]),
                    SpherePoint.from_array(it["x2"]), float(it["t2"])))
    return out
