"""Hot numeric kernels, numba-jitted by default.

Set the environment variable ``SPARSEMOTION_NUMBA=0`` before import to run
the pure-numpy versions instead (useful for debugging and as a fallback on
platforms without a working numba install). ``benchmarks/bench_kernels.py``
times the two lanes against each other.
"""

from __future__ import annotations

import os

import numpy as np


def _rotation_about_axis(axis, theta):
    """Rodrigues rotation about a unit axis."""
    c = np.cos(theta)
    s = np.sin(theta)
    one_c = 1.0 - c
    x, y, z = axis[0], axis[1], axis[2]
    R = np.empty((3, 3))
    R[0, 0] = c + x * x * one_c
    R[0, 1] = x * y * one_c - z * s
    R[0, 2] = x * z * one_c + y * s
    R[1, 0] = y * x * one_c + z * s
    R[1, 1] = c + y * y * one_c
    R[1, 2] = y * z * one_c - x * s
    R[2, 0] = z * x * one_c - y * s
    R[2, 1] = z * y * one_c + x * s
    R[2, 2] = c + z * z * one_c
    return R


def _fk_chain(parents, offsets, axes, Rc, tc, theta):
    """Per-joint world rotation/translation along the kinematic tree.

    Joint j's frame is parent frame * translate(offset_j) * rot(axis_j, theta_j);
    parent -1 denotes the camera-to-root transform (Rc, tc).
    """
    d = parents.shape[0]
    R = np.empty((d, 3, 3))
    t = np.empty((d, 3))
    for j in range(d):
        p = parents[j]
        if p < 0:
            Rp = Rc
            tp = tc
        else:
            Rp = R[p]
            tp = t[p]
        t[j] = tp + Rp @ offsets[j]
        R[j] = Rp @ _rotation_about_axis(axes[j], theta[j])
    return R, t


def _landmark_points(R, t, lmk_joint, lmk_local):
    n = lmk_joint.shape[0]
    pts = np.empty((n, 3))
    for i in range(n):
        j = lmk_joint[i]
        pts[i] = t[j] + R[j] @ lmk_local[i]
    return pts


def _articulated_jacobian(R, t, axes, ancestry, pts):
    """Geometric Jacobian: column j maps theta_j rate to 3D landmark velocity.

    Column j for landmark i is w_j x (p_i - t_j) with w_j the world-frame
    joint axis, zero when joint j is not on landmark i's parent chain.
    """
    d = axes.shape[0]
    n = pts.shape[0]
    J = np.zeros((3 * n, d))
    for j in range(d):
        w = R[j] @ axes[j]
        for i in range(n):
            if ancestry[j, i]:
                rx = pts[i, 0] - t[j, 0]
                ry = pts[i, 1] - t[j, 1]
                rz = pts[i, 2] - t[j, 2]
                J[3 * i + 0, j] = w[1] * rz - w[2] * ry
                J[3 * i + 1, j] = w[2] * rx - w[0] * rz
                J[3 * i + 2, j] = w[0] * ry - w[1] * rx
    return J


def _admm_l1(Vr, x0, rho, max_iter, primal_tol, dual_tol, omega_max, adapt):
    """Equality-constrained l1 minimization via scaled ADMM.

    Minimizes ||w||_1 over the affine set x0 + range-complement(Vr), where
    Vr has orthonormal columns spanning the row space of the constraint
    matrix and x0 is the minimum-norm feasible point.  The x-update is the
    orthogonal projection onto the affine set; the z-update is
    soft-thresholding followed by an optional box clamp at omega_max
    (omega_max < 0 disables the box).  Returns the sparse iterate z, the
    feasible iterate x, the scaled dual u, the final penalty, iteration
    count and residual norms.
    """
    d = x0.shape[0]
    x = x0.copy()
    z = np.zeros(d)
    u = np.zeros(d)
    r_norm = 0.0
    s_norm = 0.0
    it = 0
    for it in range(1, max_iter + 1):
        w = z - u
        x = w - Vr @ (Vr.T @ w) + x0
        z_old = z
        v = x + u
        thr = 1.0 / rho
        z = np.sign(v) * np.maximum(np.abs(v) - thr, 0.0)
        if omega_max >= 0.0:
            z = np.minimum(np.maximum(z, -omega_max), omega_max)
        u = u + x - z
        r_norm = np.sqrt(np.sum((x - z) ** 2))
        s_norm = rho * np.sqrt(np.sum((z - z_old) ** 2))
        if r_norm <= primal_tol and s_norm <= dual_tol:
            break
        if adapt and it % 50 == 0:
            # residual balancing keeps progress even on badly scaled inputs
            if r_norm > 10.0 * s_norm:
                rho *= 2.0
                u /= 2.0
            elif s_norm > 10.0 * r_norm:
                rho /= 2.0
                u *= 2.0
    return z, x, u, rho, it, r_norm, s_norm


_IMPLS = {
    "rotation_about_axis": _rotation_about_axis,
    "fk_chain": _fk_chain,
    "landmark_points": _landmark_points,
    "articulated_jacobian": _articulated_jacobian,
    "admm_l1": _admm_l1,
}

NUMBA_ENABLED = os.environ.get("SPARSEMOTION_NUMBA", "1").lower() not in ("0", "false", "no")

if NUMBA_ENABLED:
    try:
        from numba import njit
    except ImportError:  # pragma: no cover
        NUMBA_ENABLED = False

if NUMBA_ENABLED:
    _rotation_about_axis = njit(cache=True)(_rotation_about_axis)
    _fk_chain = njit(cache=True)(_fk_chain)
    _landmark_points = njit(cache=True)(_landmark_points)
    _articulated_jacobian = njit(cache=True)(_articulated_jacobian)
    _admm_l1 = njit(cache=True)(_admm_l1)

rotation_about_axis = _rotation_about_axis
fk_chain = _fk_chain
landmark_points = _landmark_points
articulated_jacobian = _articulated_jacobian
admm_l1 = _admm_l1
