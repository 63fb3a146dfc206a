"""Per-agent orientation estimator on SO(3).

Each follower descends a direction-alignment error while compensating its own
known body angular velocity. Neighbors communicate their current orientation
estimate applied to their measurement of the shared direction; the sign flip
between the two ends of an edge is handled inside feedback_term.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import exp_so3, hat, random_rotation, vee

K_OMEGA_DEFAULT = 2.0
EIG_GAP_MIN = 1e-9


class RepeatedEigenvalues(ValueError):
    """Gram matrix eigenvalues too close to isolate the critical points."""


@dataclass
class DirectionBundle:
    """One follower's measurements for a single evaluation instant.

    Rows are aligned across all array fields. The first n_measured rows are
    real edges in neighbor order; a two-neighbor follower carries one extra
    virtual row built from cross products. comm rows hold the raw communicated
    quantity (neighbor estimate applied to the neighbor's own measurement,
    which points back toward the follower); the virtual comm row is stored in
    the same inward convention.
    """

    gains: np.ndarray
    body: np.ndarray
    comm: np.ndarray
    n_measured: int
    true_dirs: np.ndarray | None = None
    position_gains: np.ndarray | None = None
    neighbor_p: np.ndarray | None = None

    @classmethod
    def assemble(
        cls,
        gains: np.ndarray,
        body: np.ndarray,
        comm: np.ndarray,
        true_dirs: np.ndarray | None = None,
        virtual_gain: float | None = None,
        position_gains: np.ndarray | None = None,
        neighbor_p: np.ndarray | None = None,
    ) -> "DirectionBundle":
        """Build a bundle, appending the virtual row for two-neighbor agents."""
        gains = np.asarray(gains, dtype=float)
        body = np.asarray(body, dtype=float)
        comm = np.asarray(comm, dtype=float)
        m = len(gains)
        if m == 2:
            if virtual_gain is None:
                raise ValueError("two-neighbor bundle needs a virtual gain")
            b3 = np.cross(body[0], body[1])
            b3 /= np.linalg.norm(b3)
            c3 = -np.cross(comm[0], comm[1])
            c3 /= np.linalg.norm(c3)
            body = np.vstack([body, b3])
            comm = np.vstack([comm, c3])
            gains = np.append(gains, virtual_gain)
            if true_dirs is not None:
                t3 = np.cross(true_dirs[0], true_dirs[1])
                t3 /= np.linalg.norm(t3)
                true_dirs = np.vstack([np.asarray(true_dirs, dtype=float), t3])
        elif true_dirs is not None:
            true_dirs = np.asarray(true_dirs, dtype=float)
        return cls(
            gains=gains,
            body=body,
            comm=comm,
            n_measured=m,
            true_dirs=true_dirs,
            position_gains=None if position_gains is None else np.asarray(position_gains, float),
            neighbor_p=None if neighbor_p is None else np.asarray(neighbor_p, float),
        )


@dataclass
class OrientationEstimatorState:
    """Estimated rotation, compensation rate, and damping gain of one follower."""

    R_hat: np.ndarray
    Omega_tilde: np.ndarray
    k_omega: float = K_OMEGA_DEFAULT


def error_vector(state: OrientationEstimatorState, bundle: DirectionBundle) -> np.ndarray:
    """Diagnostic alignment error using true global directions.

    e = sum_k gain_k * (R_hat^T true_k) x body_k. This is the exact gradient
    of error_function along left perturbations of R_hat.
    """
    if bundle.true_dirs is None:
        raise ValueError("bundle carries no true directions")
    pulled = bundle.true_dirs @ state.R_hat  # row-wise R_hat^T @ d
    return (bundle.gains[:, None] * np.cross(pulled, bundle.body)).sum(axis=0)


def feedback_term(state: OrientationEstimatorState, bundle: DirectionBundle) -> np.ndarray:
    """Implementable counterpart of error_vector built from communicated rows.

    comm rows point inward (toward the follower), so the outward estimate is
    their negation; that sign lives here and nowhere else.
    """
    est = -bundle.comm @ state.R_hat
    return (bundle.gains[:, None] * np.cross(est, bundle.body)).sum(axis=0)


def state_derivative(
    state: OrientationEstimatorState, bundle: DirectionBundle, omega_body: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Right-hand side of the estimator: (tangent, Omega_tilde rate).

    The estimate evolves as d/dt R_hat = R_hat @ hat(tangent) with
    tangent = omega_body - Omega_tilde, and the compensation rate relaxes
    toward the communicated feedback.
    """
    tangent = omega_body - state.Omega_tilde
    dom = -state.k_omega * state.Omega_tilde + feedback_term(state, bundle)
    return tangent, dom


def rotation_rate(state: OrientationEstimatorState, tangent: np.ndarray) -> np.ndarray:
    """Matrix derivative of the estimate for a given tangent vector."""
    return state.R_hat @ hat(tangent)


def error_function(r_hat: np.ndarray, bundle: DirectionBundle) -> float:
    """Alignment cost: sum_k gain_k * (1 - (r_hat @ body_k) . true_k)."""
    if bundle.true_dirs is None:
        raise ValueError("bundle carries no true directions")
    rotated = bundle.body @ r_hat.T
    return float(np.sum(bundle.gains * (1.0 - np.sum(rotated * bundle.true_dirs, axis=1))))


def error_function_trace(r_hat: np.ndarray, r_true: np.ndarray, gram: np.ndarray) -> float:
    """Equivalent trace form of error_function: tr((I - r_hat r_true^T) gram)."""
    q = r_hat @ r_true.T
    return float(np.trace(gram) - np.trace(q @ gram))


def error_vector_from_gram(r_hat: np.ndarray, r_true: np.ndarray, gram: np.ndarray) -> np.ndarray:
    """error_vector computed from the gram matrix instead of bundle rows."""
    q = r_hat @ r_true.T
    return r_true.T @ vee(gram @ q - q.T @ gram)


def critical_points(gram: np.ndarray) -> list[np.ndarray]:
    """All four stationary relative rotations of the alignment cost.

    The first entry is the identity (the desired one); the other three are
    half-turns about the gram eigenvectors and all have trace -1. Requires
    eigenvalues separated by more than 1e-9.
    """
    eigs, u = np.linalg.eigh(gram)
    if np.diff(eigs).min() < EIG_GAP_MIN:
        raise RepeatedEigenvalues("gram eigenvalues are not distinct")
    points = [np.eye(3)]
    for a in range(3):
        d = -np.eye(3)
        d[a, a] = 1.0
        points.append(u @ d @ u.T)
    return points


def lyapunov_V(state: OrientationEstimatorState, bundle: DirectionBundle, k_v: float) -> float:
    """Certificate value 0.5||Omega_tilde||^2 + Phi - k_v Omega_tilde . e."""
    om = state.Omega_tilde
    e = error_vector(state, bundle)
    return float(0.5 * om @ om + error_function(state.R_hat, bundle) - k_v * om @ e)


def pick_k_V(gains, k_omega: float, omega_bound: float, sigma_lower: float) -> float:
    """Half the admissible cross-term coefficient for lyapunov_V.

    gains must include the virtual-direction gain when one is in play.
    """
    total = float(np.sum(gains))
    bound = min(
        np.sqrt(2.0 * sigma_lower),
        4.0 * k_omega / ((k_omega + omega_bound) ** 2 + 4.0 * total),
    )
    return 0.5 * bound


def phi_sublevel_bound(gram: np.ndarray) -> float:
    """Cost level below which the quadratic upper bound on Phi holds. Logged only."""
    eigs = np.linalg.eigvalsh(gram)
    return float(2.0 * min(eigs[0] + eigs[1], eigs[0] + eigs[2], eigs[1] + eigs[2]))


def estimate_sigma_lower(
    gram: np.ndarray, rng: np.random.Generator, n_uniform: int = 3000, n_local: int = 1000
) -> float:
    """Numerical lower-bound coefficient sigma with sigma ||e||^2 <= Phi.

    Minimizes Phi/||e||^2 over uniformly sampled rotations plus small
    perturbations of the identity (where the ratio approaches its infimum).
    Underestimates are safe: they only shrink pick_k_V.
    """
    qs = random_rotation(rng, n=n_uniform)
    scales = np.exp(rng.uniform(np.log(1e-3), np.log(0.5), size=n_local))
    vs = rng.normal(size=(n_local, 3))
    vs *= (scales / np.linalg.norm(vs, axis=1))[:, None]
    local = np.stack([exp_so3(v) for v in vs])
    qs = np.concatenate([qs, local], axis=0)
    phi = np.trace(gram) - np.einsum("nij,ji->n", qs, gram)
    m = np.einsum("ij,njk->nik", gram, qs) - np.einsum("nji,jk->nik", qs, gram)
    e2 = m[:, 2, 1] ** 2 + m[:, 0, 2] ** 2 + m[:, 1, 0] ** 2
    keep = e2 > 1e-14
    return float(np.min(phi[keep] / e2[keep]))
