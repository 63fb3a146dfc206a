"""Position estimation from body-frame directions and communicated estimates.

The true position is the unique point satisfying every direction constraint;
followers either solve for it in closed form or flow there under a projected
consensus law. Virtual direction rows never enter here: only real edges carry
position information.
"""
from __future__ import annotations

import numpy as np

from .geometry import projection_matrix
from .orientation import DirectionBundle

COLLINEAR_EIG = 1e-9
K_POSITION_DEFAULT = 1.0


class CollinearNeighbors(ValueError):
    """Neighbor directions span a line; the constraint system is degenerate."""


def position_derivative(p_hat: np.ndarray, r_hat: np.ndarray, bundle: DirectionBundle) -> np.ndarray:
    """Projected consensus rate toward the neighbors' position estimates.

    Uses the follower's measured body directions and its orientation estimate;
    each edge removes the displacement component along its measured direction.
    """
    if bundle.neighbor_p is None or bundle.position_gains is None:
        raise ValueError("bundle carries no position block")
    m = bundle.n_measured
    body = bundle.body[:m]
    w = (p_hat - bundle.neighbor_p) @ r_hat  # row-wise R_hat^T (p_hat - p_j)
    proj = w - body * np.sum(body * w, axis=1, keepdims=True)
    s = (bundle.position_gains[:, None] * proj).sum(axis=0)
    return -(r_hat @ s)


def solve_position_closed_form(directions: np.ndarray, neighbor_positions: np.ndarray) -> np.ndarray:
    """Solve the stacked direction constraints for the unique position.

    directions are unit vectors from the unknown position toward each
    neighbor, neighbor_positions the corresponding points. Raises
    CollinearNeighbors when the summed projectors lose rank.
    """
    a = np.zeros((3, 3))
    rhs = np.zeros(3)
    for b, q in zip(directions, neighbor_positions):
        p = projection_matrix(b)
        a += p
        rhs += p @ q
    if np.linalg.eigvalsh(a).min() <= COLLINEAR_EIG:
        raise CollinearNeighbors("neighbor directions are collinear")
    return np.linalg.solve(a, rhs)


def constraint_residual(
    p_hat: np.ndarray, directions: np.ndarray, neighbor_positions: np.ndarray
) -> float:
    """Worst-case violation of the direction constraints at p_hat."""
    worst = 0.0
    for b, q in zip(directions, neighbor_positions):
        worst = max(worst, float(np.linalg.norm(projection_matrix(b) @ (p_hat - q))))
    return worst
