"""Shared builders for the test suite.

The cube network here mirrors the bundled 8-agent scenario: agent k sits at
vertex VERTS[ASSIGN[k]], chosen so every three-neighbor follower sees a
well-conditioned (non-coplanar) direction triple.
"""
from __future__ import annotations

import numpy as np

from dirpose.geometry import random_rotation
from dirpose.network import GroundTruth, NetworkTopology
from dirpose.orientation import DirectionBundle

ASSIGN = [0, 1, 7, 5, 3, 6, 4, 2]
CUBE_NEIGHBORS = {2: [0, 1], 3: [0, 1, 2], 4: [0, 1, 2], 5: [2, 3, 4], 6: [3, 5], 7: [4, 5]}


def cube_positions(side: float = 5.0) -> np.ndarray:
    verts = np.array(
        [[(k >> 0) & 1, (k >> 1) & 1, (k >> 2) & 1] for k in range(8)], dtype=float
    )
    return side * verts[ASSIGN]


def cube_truth(side: float = 5.0, seed: int = 5, rotating: bool = False) -> GroundTruth:
    omega = np.zeros((8, 3))
    if rotating:
        omega[2] = [0.15, 0.0, 0.0]
        omega[3] = [0.0, 0.15, 0.0]
        omega[4] = [0.0, 0.0, 0.15]
    return GroundTruth(
        positions=cube_positions(side),
        rotations=random_rotation(np.random.default_rng(seed), n=8),
        omega_body=omega,
    )


def cube_topology() -> NetworkTopology:
    gains = {(i, j): 1.0 for i, ns in CUBE_NEIGHBORS.items() for j in ns}
    return NetworkTopology(
        n_agents=8,
        leaders=[0, 1],
        neighbors={k: list(v) for k, v in CUBE_NEIGHBORS.items()},
        edge_gains=dict(gains),
        position_gains=dict(gains),
    )


def spec_bundle(i, topo, truth, r_hat_by_agent, p_hat_by_agent=None) -> DirectionBundle:
    """Definition-literal bundle built agent by agent, used as an oracle route."""
    ns = topo.neighbors[i]
    true_dirs = np.array([truth.direction(i, j) for j in ns])
    body = np.array([truth.rotations[i].T @ b for b in true_dirs])
    comm = np.array(
        [-(r_hat_by_agent[j] @ truth.rotations[j].T @ b) for j, b in zip(ns, true_dirs)]
    )
    gains = np.array([topo.edge_gains[(i, j)] for j in ns])
    pos_gains = np.array([topo.position_gains[(i, j)] for j in ns])
    nbr_p = None
    if p_hat_by_agent is not None:
        nbr_p = np.array([p_hat_by_agent[j] for j in ns])
    return DirectionBundle.assemble(
        gains=gains,
        body=body,
        comm=comm,
        true_dirs=true_dirs,
        virtual_gain=topo.virtual_gain(i) if len(ns) == 2 else None,
        position_gains=pos_gains,
        neighbor_p=nbr_p,
    )
