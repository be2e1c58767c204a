"""Batched numerics for rotation matrices and their axis coordinates.

Conventions used throughout the package:

- rotations act on column vectors, stacks have shape (..., 3, 3);
- an algebra element is stored as axis coordinates ``w`` with ``hat(w)``
  the corresponding skew matrix, so ``exp(w)`` rotates by angle ``|w|``
  about ``w / |w|``;
- the inner product on axis coordinates is the plain dot product, which
  equals ``0.5 * trace(hat(a).T @ hat(b))``.

All functions broadcast over leading axes.
"""

import numpy as np

from .errors import AmbiguousLogarithm

_TINY_ANGLE = 1e-4
_NEAR_PI = np.pi - 1e-4


def hat(w):
    """Axis coordinates (..., 3) to skew matrices (..., 3, 3)."""
    w = np.asarray(w, dtype=float)
    out = np.zeros(w.shape[:-1] + (3, 3))
    out[..., 0, 1] = -w[..., 2]
    out[..., 0, 2] = w[..., 1]
    out[..., 1, 0] = w[..., 2]
    out[..., 1, 2] = -w[..., 0]
    out[..., 2, 0] = -w[..., 1]
    out[..., 2, 1] = w[..., 0]
    return out


def vee(W):
    """Skew matrices (..., 3, 3) to axis coordinates (..., 3)."""
    W = np.asarray(W, dtype=float)
    return np.stack([W[..., 2, 1], W[..., 0, 2], W[..., 1, 0]], axis=-1)


def exp(w):
    """Rodrigues formula, series-stabilized near zero."""
    w = np.asarray(w, dtype=float)
    theta = np.linalg.norm(w, axis=-1)
    t2 = theta * theta
    small = theta < _TINY_ANGLE
    with np.errstate(invalid="ignore", divide="ignore"):
        a = np.where(small, 1.0 - t2 / 6.0, np.sin(theta) / np.where(small, 1.0, theta))
        b = np.where(small, 0.5 - t2 / 24.0, (1.0 - np.cos(theta)) / np.where(small, 1.0, t2))
    W = hat(w)
    W2 = W @ W
    return np.eye(3) + a[..., None, None] * W + b[..., None, None] * W2


def angle(R):
    """Rotation angle in [0, pi]; cheap and well-defined everywhere."""
    R = np.asarray(R, dtype=float)
    c = 0.5 * (np.trace(R, axis1=-2, axis2=-1) - 1.0)
    s = 0.5 * np.linalg.norm(vee(R - np.swapaxes(R, -1, -2)), axis=-1)
    return np.arctan2(s, np.clip(c, -1.0, 1.0))


def _axis_near_pi(R, theta):
    # nn^T = ((R + R^T)/2 - cos(theta) I) / (1 - cos(theta)); stable by picking
    # the largest diagonal entry.  Either axis sign describes the same
    # rotation when theta == pi; the sign is fixed to the first nonzero
    # component being positive so results are deterministic.
    c = np.cos(theta)
    M = (0.5 * (R + np.swapaxes(R, -1, -2)) - c[..., None, None] * np.eye(3)) / (
        1.0 - c[..., None, None]
    )
    diag = np.clip(np.diagonal(M, axis1=-2, axis2=-1), 0.0, None)
    k = np.argmax(diag, axis=-1)
    idx = np.arange(diag.shape[0]) if diag.ndim > 1 else None
    if idx is None:
        nk = np.sqrt(diag[k])
        axis = M[:, k] / nk
    else:
        nk = np.sqrt(diag[idx, k])
        axis = M[idx, :, k] / nk[:, None]
    axis = axis / np.linalg.norm(axis, axis=-1, keepdims=True)
    # align with sin(theta) * axis where it is still informative
    w_raw = 0.5 * vee(R - np.swapaxes(R, -1, -2))
    dot = np.sum(w_raw * axis, axis=-1)
    sign = np.where(dot < 0, -1.0, 1.0)
    near_zero = np.abs(dot) < 1e-12
    if np.any(near_zero):
        lead = np.where(
            np.abs(axis[..., 0]) > 1e-8,
            np.sign(axis[..., 0]),
            np.where(np.abs(axis[..., 1]) > 1e-8, np.sign(axis[..., 1]), np.sign(axis[..., 2])),
        )
        sign = np.where(near_zero, lead, sign)
    return axis * sign[..., None]


def log(R, pi_tol=1e-6):
    """Axis coordinates of the principal logarithm, angle in [0, pi).

    Raises AmbiguousLogarithm when any rotation angle is within ``pi_tol``
    of pi.  Pass ``pi_tol=0`` to get a deterministic axis choice at pi.
    """
    R = np.asarray(R, dtype=float)
    theta = angle(R)
    if pi_tol > 0 and np.any(theta > np.pi - pi_tol):
        raise AmbiguousLogarithm(
            "rotation angle within %.1e of pi; axis sign is not unique" % pi_tol
        )
    w_raw = 0.5 * vee(R - np.swapaxes(R, -1, -2))  # sin(theta) * axis
    small = theta < _TINY_ANGLE
    s = np.sin(theta)
    with np.errstate(invalid="ignore", divide="ignore"):
        scale = np.where(
            small,
            1.0 + theta * theta / 6.0,
            theta / np.where(s < 1e-300, 1.0, s),
        )
    w = w_raw * scale[..., None]
    near = theta > _NEAR_PI
    if np.any(near):
        if w.ndim == 1:
            w = theta * _axis_near_pi(R, theta)
        else:
            w = np.array(w)
            w[near] = theta[near][..., None] * _axis_near_pi(R[near], theta[near])
    return w


def project(R, iterations=2):
    """Pull nearly-orthonormal matrices back onto the group.

    Newton-Schulz iteration X <- X (3 I - X^T X) / 2; converges
    quadratically for drift below one, so two sweeps keep long
    integrations at machine precision.
    """
    R = np.asarray(R, dtype=float)
    for _ in range(iterations):
        R = 0.5 * R @ (3.0 * np.eye(3) - np.swapaxes(R, -1, -2) @ R)
    return R


def orthonormality_drift(R):
    """Frobenius norm of R^T R - I, maximum over the stack."""
    R = np.asarray(R, dtype=float)
    d = np.swapaxes(R, -1, -2) @ R - np.eye(3)
    return float(np.max(np.linalg.norm(d, axis=(-2, -1)))) if R.size else 0.0


def random_haar(rng, size=None):
    """Haar-uniform rotations via uniformly sampled unit quaternions."""
    shape = (4,) if size is None else (size, 4)
    q = rng.normal(size=shape)
    q = q / np.linalg.norm(q, axis=-1, keepdims=True)
    a, b, c, d = q[..., 0], q[..., 1], q[..., 2], q[..., 3]
    R = np.empty(q.shape[:-1] + (3, 3))
    R[..., 0, 0] = a * a + b * b - c * c - d * d
    R[..., 0, 1] = 2 * (b * c - a * d)
    R[..., 0, 2] = 2 * (b * d + a * c)
    R[..., 1, 0] = 2 * (b * c + a * d)
    R[..., 1, 1] = a * a - b * b + c * c - d * d
    R[..., 1, 2] = 2 * (c * d - a * b)
    R[..., 2, 0] = 2 * (b * d - a * c)
    R[..., 2, 1] = 2 * (c * d + a * b)
    R[..., 2, 2] = a * a - b * b - c * c + d * d
    return R
