"""Hot inner loops.

Each kernel has a pure-numpy implementation (``*_numpy``) and a numba one
(``*_numba``); the public name points at one of them according to
:data:`cryamabe._accel.USE_NUMBA`.  Both take identical arguments and agree
to round-off (see ``tests/test_kernels.py`` and ``benchmarks/``).
"""
import numpy as np

from ._accel import USE_NUMBA, njit

__all__ = ["eta_stencil", "interp_periodic", "propagate_paths"]


# -- stencil along the first axis ---------------------------------------------

def eta_stencil_numpy(ext, weights):
    """Apply a centred stencil along axis 0 of a ghost-extended array.

    ``ext`` has ``g`` ghost layers on each side, ``len(weights) == 2g + 1``.
    """
    g = (len(weights) - 1) // 2
    n = ext.shape[0] - 2 * g
    out = np.zeros((n,) + ext.shape[1:], dtype=ext.dtype)
    for s, w in enumerate(weights):
        if w != 0.0:
            out += w * ext[s:s + n]
    return out


@njit(cache=True)
def eta_stencil_numba(ext, weights):
    g = (weights.shape[0] - 1) // 2
    n = ext.shape[0] - 2 * g
    n1 = ext.shape[1]
    n2 = ext.shape[2]
    out = np.zeros((n, n1, n2), dtype=ext.dtype)
    for k in range(n):
        for s in range(weights.shape[0]):
            w = weights[s]
            if w == 0.0:
                continue
            for i in range(n1):
                for j in range(n2):
                    out[k, i, j] += w * ext[k + s, i, j]
    return out


# -- local Lagrange interpolation ---------------------------------------------

def _lagrange4_numpy(x):
    return np.stack([
        -x * (x - 1.0) * (x - 2.0) / 6.0,
        (x + 1.0) * (x - 1.0) * (x - 2.0) / 2.0,
        -(x + 1.0) * x * (x - 2.0) / 2.0,
        (x + 1.0) * x * (x - 1.0) / 6.0,
    ], axis=-1)


def interp_periodic_numpy(ext, g, h_eta, eta, xi1, xi2):
    """Four-point Lagrange interpolation of a ghost-extended field.

    Cell-centred in ``eta`` (``g >= 2`` ghost layers), periodic in ``xi1``,
    ``xi2``.  ``eta, xi1, xi2`` are 1-d arrays of query coordinates.
    """
    n1, n2 = ext.shape[1], ext.shape[2]
    pe = eta / h_eta - 0.5 + g
    p1 = xi1 * n1 / (2 * np.pi)
    p2 = xi2 * n2 / (2 * np.pi)
    fe, f1, f2 = np.floor(pe), np.floor(p1), np.floor(p2)
    we, w1, w2 = _lagrange4_numpy(pe - fe), _lagrange4_numpy(p1 - f1), _lagrange4_numpy(p2 - f2)
    ie = fe.astype(np.int64)[:, None] + np.arange(-1, 3)[None, :]
    i1 = np.mod(f1.astype(np.int64)[:, None] + np.arange(-1, 3)[None, :], n1)
    i2 = np.mod(f2.astype(np.int64)[:, None] + np.arange(-1, 3)[None, :], n2)
    vals = ext[ie[:, :, None, None], i1[:, None, :, None], i2[:, None, None, :]]
    return np.einsum("qabc,qa,qb,qc->q", vals, we, w1, w2)


@njit(cache=True)
def _lagrange4_numba(x, out):
    out[0] = -x * (x - 1.0) * (x - 2.0) / 6.0
    out[1] = (x + 1.0) * (x - 1.0) * (x - 2.0) / 2.0
    out[2] = -(x + 1.0) * x * (x - 2.0) / 2.0
    out[3] = (x + 1.0) * x * (x - 1.0) / 6.0


@njit(cache=True)
def _interp_one(ext, g, h_eta, eta, xi1, xi2, we, w1, w2):
    n1 = ext.shape[1]
    n2 = ext.shape[2]
    pe = eta / h_eta - 0.5 + g
    p1 = xi1 * n1 / (2 * np.pi)
    p2 = xi2 * n2 / (2 * np.pi)
    fe = np.floor(pe)
    f1 = np.floor(p1)
    f2 = np.floor(p2)
    _lagrange4_numba(pe - fe, we)
    _lagrange4_numba(p1 - f1, w1)
    _lagrange4_numba(p2 - f2, w2)
    ie0 = int(fe) - 1
    i10 = int(f1) - 1
    i20 = int(f2) - 1
    acc = 0.0
    for a in range(4):
        for b in range(4):
            ib = (i10 + b) % n1
            wab = we[a] * w1[b]
            for c in range(4):
                ic = (i20 + c) % n2
                acc += wab * w2[c] * ext[ie0 + a, ib, ic]
    return acc


@njit(cache=True)
def interp_periodic_numba(ext, g, h_eta, eta, xi1, xi2):
    out = np.empty(eta.shape[0])
    we = np.empty(4)
    w1 = np.empty(4)
    w2 = np.empty(4)
    for q in range(eta.shape[0]):
        out[q] = _interp_one(ext, g, h_eta, eta[q], xi1[q], xi2[q], we, w1, w2)
    return out


# -- horizontal path propagation ----------------------------------------------
#
# On a segment with constant controls (u1, u2) the path obeys
#     dz1/dt = -alpha * conj(z2),  dz2/dt = alpha * conj(z1),  alpha = (u1 + i u2) / 2,
# i.e. dz/dt = u1 e1 + u2 e2 with e1, e2 the Levi-orthonormal horizontal frame.
# Integration is classical RK4 with renormalisation onto the sphere after every
# substep.  The action integrand exp(2 lambda(z, t)) |u|^2 is integrated with
# composite Simpson over the substep nodes.

def _snapshot_bracket(snap_t, t):
    s = np.searchsorted(snap_t, t, side="right") - 1
    s = min(max(s, 0), len(snap_t) - 2)
    w = (t - snap_t[s]) / (snap_t[s + 1] - snap_t[s])
    return s, w


def _lambda_numpy(z, t, snap_t, snap_ext, g, h_eta):
    eta = np.arctan2(np.abs(z[:, 1]), np.abs(z[:, 0]))
    xi1 = np.mod(np.angle(z[:, 0]), 2 * np.pi)
    xi2 = np.mod(np.angle(z[:, 1]), 2 * np.pi)
    if len(snap_t) == 1:
        return interp_periodic_numpy(snap_ext[0], g, h_eta, eta, xi1, xi2)
    s, w = _snapshot_bracket(snap_t, t)
    a = interp_periodic_numpy(snap_ext[s], g, h_eta, eta, xi1, xi2)
    b = interp_periodic_numpy(snap_ext[s + 1], g, h_eta, eta, xi1, xi2)
    return (1.0 - w) * a + w * b


def _rhs_numpy(z, alpha):
    return np.stack([-alpha * np.conj(z[:, 1]), alpha * np.conj(z[:, 0])], axis=1)


def propagate_paths_numpy(z0, controls, t1, seg_dt, substeps, snap_t, snap_ext, g, h_eta):
    """Integrate a batch of piecewise-constant-control horizontal paths.

    Parameters
    ----------
    z0 : complex array (2,)
    controls : float array (B, N, 2)
    t1, seg_dt : float
        Start time and segment duration.
    substeps : int
        Even number of RK4 substeps per segment.
    snap_t, snap_ext
        Snapshot times (S,) and ghost-extended conformal factors
        (S, n_eta + 2g, n_xi1, n_xi2).

    Returns
    -------
    knots : complex array (B, N + 1, 2)
    action : float array (B,)
    """
    nb, nseg = controls.shape[0], controls.shape[1]
    dt = seg_dt / substeps
    z = np.tile(np.asarray(z0, dtype=complex), (nb, 1))
    knots = np.empty((nb, nseg + 1, 2), dtype=complex)
    knots[:, 0] = z
    action = np.zeros(nb)
    t = t1
    simpson = np.ones(substeps + 1)
    simpson[1:-1:2] = 4.0
    simpson[2:-1:2] = 2.0
    for k in range(nseg):
        alpha = 0.5 * (controls[:, k, 0] + 1j * controls[:, k, 1])
        speed2 = controls[:, k, 0] ** 2 + controls[:, k, 1] ** 2
        moving = np.any(speed2 > 0.0)
        acc = np.zeros(nb)
        if moving:
            acc += simpson[0] * np.exp(2.0 * _lambda_numpy(z, t, snap_t, snap_ext, g, h_eta))
        for j in range(substeps):
            k1 = _rhs_numpy(z, alpha)
            k2 = _rhs_numpy(z + 0.5 * dt * k1, alpha)
            k3 = _rhs_numpy(z + 0.5 * dt * k2, alpha)
            k4 = _rhs_numpy(z + dt * k3, alpha)
            z = z + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
            z /= np.sqrt(np.sum(np.abs(z) ** 2, axis=1))[:, None]
            t = t1 + k * seg_dt + (j + 1) * dt
            if moving:
                acc += simpson[j + 1] * np.exp(2.0 * _lambda_numpy(z, t, snap_t, snap_ext, g, h_eta))
        action += speed2 * acc * dt / 3.0
        knots[:, k + 1] = z
    return knots, action


@njit(cache=True)
def _lambda_numba(z1, z2, t, snap_t, snap_ext, g, h_eta, we, w1, w2):
    eta = np.arctan2(np.abs(z2), np.abs(z1))
    xi1 = np.angle(z1) % (2 * np.pi)
    xi2 = np.angle(z2) % (2 * np.pi)
    ns = snap_t.shape[0]
    if ns == 1:
        return _interp_one(snap_ext[0], g, h_eta, eta, xi1, xi2, we, w1, w2)
    s = np.searchsorted(snap_t, t, side="right") - 1
    if s < 0:
        s = 0
    if s > ns - 2:
        s = ns - 2
    w = (t - snap_t[s]) / (snap_t[s + 1] - snap_t[s])
    a = _interp_one(snap_ext[s], g, h_eta, eta, xi1, xi2, we, w1, w2)
    b = _interp_one(snap_ext[s + 1], g, h_eta, eta, xi1, xi2, we, w1, w2)
    return (1.0 - w) * a + w * b


@njit(cache=True)
def propagate_paths_numba(z0, controls, t1, seg_dt, substeps, snap_t, snap_ext, g, h_eta):
    nb = controls.shape[0]
    nseg = controls.shape[1]
    dt = seg_dt / substeps
    knots = np.empty((nb, nseg + 1, 2), dtype=np.complex128)
    action = np.zeros(nb)
    we = np.empty(4)
    w1 = np.empty(4)
    w2 = np.empty(4)
    for b in range(nb):
        a1 = z0[0]
        a2 = z0[1]
        knots[b, 0, 0] = a1
        knots[b, 0, 1] = a2
        for k in range(nseg):
            u1 = controls[b, k, 0]
            u2 = controls[b, k, 1]
            alpha = 0.5 * (u1 + 1j * u2)
            speed2 = u1 * u1 + u2 * u2
            moving = speed2 > 0.0
            t = t1 + k * seg_dt
            acc = 0.0
            if moving:
                acc += np.exp(2.0 * _lambda_numba(a1, a2, t, snap_t, snap_ext, g, h_eta, we, w1, w2))
            for j in range(substeps):
                k11 = -alpha * np.conj(a2)
                k12 = alpha * np.conj(a1)
                b1 = a1 + 0.5 * dt * k11
                b2 = a2 + 0.5 * dt * k12
                k21 = -alpha * np.conj(b2)
                k22 = alpha * np.conj(b1)
                b1 = a1 + 0.5 * dt * k21
                b2 = a2 + 0.5 * dt * k22
                k31 = -alpha * np.conj(b2)
                k32 = alpha * np.conj(b1)
                b1 = a1 + dt * k31
                b2 = a2 + dt * k32
                k41 = -alpha * np.conj(b2)
                k42 = alpha * np.conj(b1)
                a1 = a1 + dt / 6.0 * (k11 + 2.0 * k21 + 2.0 * k31 + k41)
                a2 = a2 + dt / 6.0 * (k12 + 2.0 * k22 + 2.0 * k32 + k42)
                r = np.sqrt(a1.real ** 2 + a1.imag ** 2 + a2.real ** 2 + a2.imag ** 2)
                a1 = a1 / r
                a2 = a2 / r
                if moving:
                    if j == substeps - 1:
                        c = 1.0
                    elif j % 2 == 0:
                        c = 4.0
                    else:
                        c = 2.0
                    t = t1 + k * seg_dt + (j + 1) * dt
                    acc += c * np.exp(2.0 * _lambda_numba(a1, a2, t, snap_t, snap_ext, g, h_eta, we, w1, w2))
            action[b] += speed2 * acc * dt / 3.0
            knots[b, k + 1, 0] = a1
            knots[b, k + 1, 1] = a2
    return knots, action


if USE_NUMBA:
    eta_stencil = eta_stencil_numba
    interp_periodic = interp_periodic_numba
    propagate_paths = propagate_paths_numba
else:
    eta_stencil = eta_stencil_numpy
    interp_periodic = interp_periodic_numpy
    propagate_paths = propagate_paths_numpy
