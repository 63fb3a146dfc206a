"""Tests for the rotation/projection kernel.

The nearest-rotation oracle is an SVD polar decomposition, kept here so the
shipped Gram-Schmidt implementation is checked against an independent route.
"""
from __future__ import annotations

import numpy as np
import pytest

from dirpose.geometry import (
    DegenerateVector,
    NotSkewSymmetric,
    SingularMatrix,
    exp_so3,
    geodesic_error,
    hat,
    projection_matrix,
    project_to_so3,
    random_rotation,
    rotate_about_axis,
    rotation_defect,
    vee,
)

RNG = np.random.default_rng(20240811)


def polar_rotation(m: np.ndarray) -> np.ndarray:
    """Nearest rotation in Frobenius norm via SVD (test oracle only)."""
    u, _, vt = np.linalg.svd(m)
    d = np.sign(np.linalg.det(u @ vt))
    return u @ np.diag([1.0, 1.0, d]) @ vt


def test_hat_antisymmetry_and_action():
    for _ in range(20):
        v = RNG.normal(size=3)
        w = RNG.normal(size=3)
        m = hat(v)
        assert np.array_equal(m, -m.T)
        np.testing.assert_allclose(m @ w, np.cross(v, w), rtol=0, atol=1e-15)


def test_hat_vee_roundtrip_exact():
    for _ in range(20):
        v = RNG.normal(size=3)
        assert np.array_equal(vee(hat(v)), v)


def test_vee_rejects_symmetric_part():
    m = hat(np.array([1.0, 2.0, 3.0]))
    m[0, 0] = 1e-6
    with pytest.raises(NotSkewSymmetric):
        vee(m)


def test_cross_product_hat_identity():
    # (x cross y)^ = y x^T - x y^T
    for _ in range(20):
        x = RNG.normal(size=3)
        y = RNG.normal(size=3)
        np.testing.assert_allclose(
            hat(np.cross(x, y)), np.outer(y, x) - np.outer(x, y), rtol=0, atol=1e-14
        )


def test_exp_so3_axis_angle():
    # quarter turn about z maps e1 to e2
    r = exp_so3(np.array([0.0, 0.0, np.pi / 2]))
    np.testing.assert_allclose(r @ np.array([1.0, 0.0, 0.0]), [0.0, 1.0, 0.0], atol=1e-15)


def test_exp_so3_zero_is_identity():
    assert np.array_equal(exp_so3(np.zeros(3)), np.eye(3))


def test_exp_so3_small_angle_branch_continuous():
    # no jump across the Taylor/trig switch beyond the angle difference itself
    axis = np.array([1.0, 2.0, -1.0])
    axis /= np.linalg.norm(axis)
    below = exp_so3(axis * 0.9e-8)
    above = exp_so3(axis * 1.1e-8)
    assert np.linalg.norm(above - below) < 1e-8


def test_exp_so3_small_angle_matches_expm():
    from scipy.linalg import expm

    for scale in [1e-12, 1e-9, 0.9e-8, 2e-8, 1e-6]:
        v = np.array([0.6, -0.3, 0.9]) * scale
        np.testing.assert_allclose(exp_so3(v), expm(hat(v)), rtol=0, atol=1e-15)


def test_exp_so3_is_rotation():
    for _ in range(50):
        v = RNG.normal(size=3) * RNG.uniform(0, 2 * np.pi)
        r = exp_so3(v)
        assert rotation_defect(r) < 1e-12
        assert abs(np.linalg.det(r) - 1.0) < 1e-12


def test_exp_so3_adjoint_identity():
    # R hat(x) R^T = hat(R x)
    for _ in range(20):
        r = exp_so3(RNG.normal(size=3))
        x = RNG.normal(size=3)
        np.testing.assert_allclose(r @ hat(x) @ r.T, hat(r @ x), atol=1e-13)


def test_projection_matrix_spectrum():
    # [PAPER-anchored] eigenvalues {0, 1, 1} for any nonzero argument
    p = projection_matrix(np.array([1.0, 0.0, 0.0]))
    np.testing.assert_allclose(np.sort(np.linalg.eigvalsh(p)), [0.0, 1.0, 1.0], atol=1e-12)
    for _ in range(20):
        x = RNG.normal(size=3) * RNG.uniform(0.1, 10)
        p = projection_matrix(x)
        np.testing.assert_allclose(np.sort(np.linalg.eigvalsh(p)), [0.0, 1.0, 1.0], atol=1e-12)
        # idempotent, symmetric, annihilates x
        np.testing.assert_allclose(p @ p, p, atol=1e-12)
        assert np.array_equal(p, p.T)
        np.testing.assert_allclose(p @ x, np.zeros(3), atol=1e-12)


def test_projection_matrix_scale_invariant():
    x = np.array([0.3, -1.2, 0.7])
    np.testing.assert_allclose(projection_matrix(x), projection_matrix(5.0 * x), atol=1e-15)


def test_projection_matrix_rejects_near_zero():
    with pytest.raises(DegenerateVector):
        projection_matrix(np.array([0.0, 0.0, 1e-10]))


def test_projection_frame_change_identity():
    # P_{R^T x} = R^T P_x R
    for _ in range(20):
        r = exp_so3(RNG.normal(size=3))
        x = RNG.normal(size=3)
        np.testing.assert_allclose(
            projection_matrix(r.T @ x), r.T @ projection_matrix(x) @ r, atol=1e-13
        )


def test_project_to_so3_fixes_drifted_rotation():
    # drifted rotation recovers truth; SVD polar oracle agrees
    for _ in range(50):
        r = random_rotation(RNG)
        e = RNG.normal(size=(3, 3))
        e *= 1e-6 / np.linalg.norm(e)
        q = project_to_so3(r + e)
        assert rotation_defect(q) < 1e-12
        assert np.linalg.norm(q - r) < 1e-5
        # Gram-Schmidt and the polar factor agree to first order in the drift
        assert np.linalg.norm(q - polar_rotation(r + e)) < 1e-5


def test_project_to_so3_idempotent_on_rotations():
    for _ in range(10):
        r = random_rotation(RNG)
        np.testing.assert_allclose(project_to_so3(r), r, atol=1e-14)


def test_project_to_so3_rejects_singular():
    m = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [1.0, 1.0, 0.0]])
    with pytest.raises(SingularMatrix):
        project_to_so3(m)


def test_geodesic_error_closed_form():
    # ||I - exp(theta z)|| = 2 sqrt(2) |sin(theta/2)|; frozen at theta = 0.1
    r = exp_so3(np.array([0.0, 0.0, 0.1]))
    assert abs(geodesic_error(np.eye(3), r) - 0.14136243803746787) < 1e-12
    for theta in [0.0, 0.3, 1.0, np.pi / 2, np.pi]:
        r = exp_so3(theta * np.array([0.0, 0.0, 1.0]))
        expect = 2.0 * np.sqrt(2.0) * abs(np.sin(theta / 2.0))
        assert abs(geodesic_error(np.eye(3), r) - expect) < 1e-12


def test_geodesic_error_properties():
    for _ in range(20):
        a = random_rotation(RNG)
        b = random_rotation(RNG)
        d = geodesic_error(a, b)
        assert 0.0 <= d <= 2.0 * np.sqrt(2.0) + 1e-12
        assert abs(d - geodesic_error(b, a)) < 1e-12
    assert geodesic_error(a, a) < 1e-12
    # left invariance
    c = random_rotation(RNG)
    np.testing.assert_allclose(geodesic_error(c @ a, c @ b), geodesic_error(a, b), atol=1e-12)


def test_random_rotation_valid_and_deterministic():
    r1 = random_rotation(np.random.default_rng(7))
    r2 = random_rotation(np.random.default_rng(7))
    assert np.array_equal(r1, r2)
    assert rotation_defect(r1) < 1e-12
    assert abs(np.linalg.det(r1) - 1.0) < 1e-12


def test_random_rotation_haar_trace_mean():
    # Haar expectation of the trace is 0; 1e5 samples put the MC error ~0.003
    rs = random_rotation(np.random.default_rng(123), n=100_000)
    assert rs.shape == (100_000, 3, 3)
    mean_trace = np.trace(rs, axis1=1, axis2=2).mean()
    assert abs(mean_trace) < 0.02


def test_rotate_about_axis_matches_exp():
    for _ in range(20):
        axis = RNG.normal(size=3)
        axis /= np.linalg.norm(axis)
        angle = RNG.uniform(-np.pi, np.pi)
        v = RNG.normal(size=3)
        np.testing.assert_allclose(
            rotate_about_axis(axis, angle, v), exp_so3(axis * angle) @ v, atol=1e-13
        )


def test_rotate_about_axis_batched():
    axes = RNG.normal(size=(5, 3))
    axes /= np.linalg.norm(axes, axis=1, keepdims=True)
    angles = RNG.uniform(-1, 1, size=5)
    vs = RNG.normal(size=(5, 3))
    out = rotate_about_axis(axes, angles, vs)
    for k in range(5):
        np.testing.assert_allclose(out[k], exp_so3(axes[k] * angles[k]) @ vs[k], atol=1e-13)
