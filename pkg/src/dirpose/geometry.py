"""Rotation and projection primitives used throughout the package.

Vectors are plain numpy arrays of shape (3,), rotations are (3, 3) arrays.
Batched variants accept a leading axis where noted.
"""
from __future__ import annotations

import numpy as np

SKEW_TOL = 1e-9
ORTH_TOL = 1e-9
UNIT_TOL = 1e-12
DEGENERATE_NORM = 1e-9
SINGULAR_DET = 1e-12
TAYLOR_SWITCH = 1e-8


class NotSkewSymmetric(ValueError):
    """Argument of vee has a symmetric part above tolerance."""


class DegenerateVector(ValueError):
    """Vector too close to zero to define a direction."""


class SingularMatrix(ValueError):
    """Matrix determinant too small to orthonormalize."""


def hat(v: np.ndarray) -> np.ndarray:
    """Skew-symmetric matrix such that hat(v) @ w == cross(v, w)."""
    return np.array(
        [
            [0.0, -v[2], v[1]],
            [v[2], 0.0, -v[0]],
            [-v[1], v[0], 0.0],
        ]
    )


def vee(m: np.ndarray) -> np.ndarray:
    """Inverse of hat. Raises NotSkewSymmetric if m + m.T is above tolerance."""
    if np.linalg.norm(m + m.T) > SKEW_TOL:
        raise NotSkewSymmetric("matrix is not skew-symmetric within 1e-9")
    a = 0.5 * (m - m.T)
    return np.array([a[2, 1], a[0, 2], a[1, 0]])


def exp_so3(v: np.ndarray) -> np.ndarray:
    """Rodrigues exponential map. Second-order Taylor branch near zero."""
    theta2 = float(v @ v)
    if theta2 < TAYLOR_SWITCH * TAYLOR_SWITCH:
        a = 1.0 - theta2 / 6.0
        b = 0.5 - theta2 / 24.0
    else:
        theta = np.sqrt(theta2)
        a = np.sin(theta) / theta
        b = (1.0 - np.cos(theta)) / theta2
    k = hat(v)
    return np.eye(3) + a * k + b * (k @ k)


def projection_matrix(x: np.ndarray) -> np.ndarray:
    """Orthogonal projector onto the plane perpendicular to x.

    Eigenvalues are {0, 1, 1}; the zero eigenvector is x itself.
    """
    n2 = float(x @ x)
    if n2 <= DEGENERATE_NORM * DEGENERATE_NORM:
        raise DegenerateVector("cannot project along a near-zero vector")
    return np.eye(3) - np.outer(x, x) / n2


def project_to_so3(m: np.ndarray) -> np.ndarray:
    """Re-orthonormalize a drifted rotation (modified Gram-Schmidt on columns).

    Raises SingularMatrix when det(m) <= 1e-12; flips the last column if the
    result lands in the det = -1 component.
    """
    if np.linalg.det(m) <= SINGULAR_DET:
        raise SingularMatrix("determinant too small to recover a rotation")
    q = np.array(m, dtype=float, copy=True)
    for i in range(3):
        for j in range(i):
            q[:, i] -= (q[:, j] @ q[:, i]) * q[:, j]
        q[:, i] /= np.linalg.norm(q[:, i])
    if np.linalg.det(q) < 0.0:
        q[:, 2] = -q[:, 2]
    return q


def rotation_defect(r: np.ndarray) -> float:
    """Frobenius distance of r @ r.T from the identity."""
    return float(np.linalg.norm(r @ r.T - np.eye(3)))


def check_rotation(r: np.ndarray, tol: float = ORTH_TOL) -> None:
    """Raise ValueError unless r is orthogonal with det 1 within tol."""
    if r.shape != (3, 3):
        raise ValueError(f"rotation must be 3x3, got {r.shape}")
    if rotation_defect(r) > tol:
        raise ValueError("matrix is not orthogonal within tolerance")
    if abs(np.linalg.det(r) - 1.0) > tol:
        raise ValueError("matrix determinant is not 1 within tolerance")


def geodesic_error(a: np.ndarray, b: np.ndarray) -> float:
    """Frobenius orientation error ||I - a @ b.T||, in [0, 2 sqrt(2)]."""
    return float(np.linalg.norm(np.eye(3) - a @ b.T))


def random_rotation(rng: np.random.Generator, n: int | None = None) -> np.ndarray:
    """Haar-uniform rotation(s) via normalized Gaussian quaternions.

    Returns (3, 3) when n is None, else (n, 3, 3).
    """
    m = 1 if n is None else n
    q = rng.normal(size=(m, 4))
    q /= np.linalg.norm(q, axis=1, keepdims=True)
    w, x, y, z = q[:, 0], q[:, 1], q[:, 2], q[:, 3]
    r = np.empty((m, 3, 3))
    r[:, 0, 0] = 1.0 - 2.0 * (y * y + z * z)
    r[:, 0, 1] = 2.0 * (x * y - w * z)
    r[:, 0, 2] = 2.0 * (x * z + w * y)
    r[:, 1, 0] = 2.0 * (x * y + w * z)
    r[:, 1, 1] = 1.0 - 2.0 * (x * x + z * z)
    r[:, 1, 2] = 2.0 * (y * z - w * x)
    r[:, 2, 0] = 2.0 * (x * z - w * y)
    r[:, 2, 1] = 2.0 * (y * z + w * x)
    r[:, 2, 2] = 1.0 - 2.0 * (x * x + y * y)
    return r[0] if n is None else r


def rotate_about_axis(axis: np.ndarray, angle, v: np.ndarray) -> np.ndarray:
    """Rotate v by angle about a unit axis (Rodrigues, batch-friendly).

    axis and v may be (3,) or (m, 3); angle scalar or (m,).
    """
    axis = np.asarray(axis, dtype=float)
    v = np.asarray(v, dtype=float)
    c = np.cos(angle)
    s = np.sin(angle)
    if axis.ndim == 1:
        return v * c + np.cross(axis, v) * s + axis * ((axis @ v) * (1.0 - c))
    c = np.reshape(c, (-1, 1))
    s = np.reshape(s, (-1, 1))
    dot = np.sum(axis * v, axis=1, keepdims=True)
    cross = np.empty_like(v)  # row-wise, avoids np.cross axis overhead per call
    cross[:, 0] = axis[:, 1] * v[:, 2] - axis[:, 2] * v[:, 1]
    cross[:, 1] = axis[:, 2] * v[:, 0] - axis[:, 0] * v[:, 2]
    cross[:, 2] = axis[:, 0] * v[:, 1] - axis[:, 1] * v[:, 0]
    return v * c + cross * s + axis * (dot * (1.0 - c))
