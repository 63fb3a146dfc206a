"""Network topology, ground-truth geometry, and per-agent gain design.

A network has two or more leaders first in the agent ordering; every follower
measures two or more agents that come earlier. Followers with exactly two
neighbors get a virtual third direction (normalized cross product of the two
real ones) so their direction gram stays positive definite.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

EPS_POSITION = 1e-6
EPS_COLLINEAR = 1e-6
COPLANAR_EIG = 1e-9
DELTA_EIG = 1e-3
MAX_GAIN_ATTEMPTS = 100


class CoplanarDirections(ValueError):
    """Follower's measured directions span a plane; gram matrix is singular."""


class GainDesignFailed(RuntimeError):
    """Could not separate gram eigenvalues within the resampling budget."""


@dataclass
class NetworkTopology:
    """Agent ordering, leader set, neighbor lists, and per-edge gains.

    Parameters
    ----------
    n_agents : total number of agents; ids are 0..n_agents-1.
    leaders : ids of the leader agents (must be the first ids).
    neighbors : follower id -> ordered list of measured neighbor ids. The
        order is load-bearing for two-neighbor followers (cross-product sign).
    edge_gains : (follower, neighbor) -> orientation gain.
    position_gains : (follower, neighbor) -> position gain.
    virtual_gains : explicit virtual-direction gains for two-neighbor
        followers; absent entries default to virtual_scale times the mean of
        the two real edge gains.
    """

    n_agents: int
    leaders: list[int]
    neighbors: dict[int, list[int]]
    edge_gains: dict[tuple[int, int], float]
    position_gains: dict[tuple[int, int], float]
    virtual_gains: dict[int, float] = field(default_factory=dict)
    virtual_scale: float = 1.0

    @property
    def followers(self) -> list[int]:
        lead = set(self.leaders)
        return [i for i in range(self.n_agents) if i not in lead]

    def virtual_gain(self, i: int) -> float:
        """Gain of follower i's virtual third direction."""
        if i in self.virtual_gains:
            return self.virtual_gains[i]
        ns = self.neighbors[i]
        mean = sum(self.edge_gains[(i, j)] for j in ns) / len(ns)
        return self.virtual_scale * mean


@dataclass
class GroundTruth:
    """True poses: positions (n, 3), rotations (n, 3, 3), constant body rates (n, 3)."""

    positions: np.ndarray
    rotations: np.ndarray
    omega_body: np.ndarray

    def direction(self, i: int, j: int) -> np.ndarray:
        """Unit vector from agent i toward agent j in the global frame."""
        d = self.positions[j] - self.positions[i]
        return d / np.linalg.norm(d)

    def omega_bound(self, i: int) -> float:
        return float(np.linalg.norm(self.omega_body[i]))


@dataclass
class ValidationReport:
    violations: list[str]

    @property
    def ok(self) -> bool:
        return not self.violations


def validate_topology(topo: NetworkTopology) -> ValidationReport:
    """Check the leader/follower structure. Violations are data, not errors."""
    out: list[str] = []
    n_lead = len(topo.leaders)
    if n_lead < 2:
        out.append(f"needs at least 2 leaders, got {n_lead}")
    if sorted(topo.leaders) != list(range(n_lead)):
        out.append("leaders must precede all followers in the agent ordering")
    lead = set(topo.leaders)
    for i in range(topo.n_agents):
        if i in lead:
            if topo.neighbors.get(i):
                out.append(f"leader {i} must not have measurement neighbors")
            continue
        ns = topo.neighbors.get(i, [])
        if len(ns) < 2:
            out.append(f"follower {i} needs at least 2 neighbors, got {len(ns)}")
        if len(set(ns)) != len(ns):
            out.append(f"follower {i} lists a neighbor twice")
        for j in ns:
            if not 0 <= j < topo.n_agents:
                out.append(f"follower {i} references unknown agent {j}")
            elif j >= i:
                out.append(f"follower {i} must only measure agents earlier in the ordering, got {j}")
            if topo.edge_gains.get((i, j), 0.0) <= 0.0:
                out.append(f"edge ({i}, {j}) needs a positive orientation gain")
            if topo.position_gains.get((i, j), 0.0) <= 0.0:
                out.append(f"edge ({i}, {j}) needs a positive position gain")
    for i, g in topo.virtual_gains.items():
        if g <= 0.0:
            out.append(f"follower {i} needs a positive virtual-direction gain")
    return ValidationReport(out)


def validate_geometry(topo: NetworkTopology, truth: GroundTruth) -> ValidationReport:
    """Check the true configuration: no collocation, no all-collinear followers."""
    out: list[str] = []
    pos = truth.positions
    for i in range(topo.n_agents):
        for j in range(i + 1, topo.n_agents):
            if np.linalg.norm(pos[i] - pos[j]) <= EPS_POSITION:
                out.append(f"agents {i} and {j} are collocated")
    if out:
        return ValidationReport(out)  # directions undefined while pairs collocate
    for i in topo.followers:
        ns = topo.neighbors.get(i, [])
        if len(ns) < 2:
            continue  # reported by validate_topology
        dirs = [truth.direction(i, j) for j in ns]
        best = max(
            np.linalg.norm(np.cross(dirs[a], dirs[b]))
            for a in range(len(dirs))
            for b in range(a + 1, len(dirs))
        )
        if best <= EPS_COLLINEAR:
            out.append(f"follower {i} is collinear with every pair of its neighbors")
    return ValidationReport(out)


def build_K(i: int, topo: NetworkTopology, truth: GroundTruth) -> np.ndarray:
    """Gain-weighted gram matrix of follower i's directions, virtual included.

    Raises CoplanarDirections when the smallest eigenvalue is at or below 1e-9.
    """
    ns = topo.neighbors[i]
    dirs = [truth.direction(i, j) for j in ns]
    gains = [topo.edge_gains[(i, j)] for j in ns]
    if len(ns) == 2:
        cross = np.cross(dirs[0], dirs[1])
        dirs.append(cross / np.linalg.norm(cross))
        gains.append(topo.virtual_gain(i))
    k = np.zeros((3, 3))
    for g, b in zip(gains, dirs):
        k += g * np.outer(b, b)
    if np.linalg.eigvalsh(k).min() <= COPLANAR_EIG:
        raise CoplanarDirections(f"directions of follower {i} are coplanar")
    return k


@dataclass
class GainAssignment:
    """Result of design_gains: per-edge and (optional) virtual gains for one agent."""

    edge_gains: dict[tuple[int, int], float]
    virtual_gain: float | None = None

    def apply(self, topo: NetworkTopology) -> None:
        topo.edge_gains.update(self.edge_gains)
        if self.virtual_gain is not None:
            agent = next(iter(self.edge_gains))[0]
            topo.virtual_gains[agent] = self.virtual_gain


def design_gains(
    i: int,
    topo: NetworkTopology,
    truth: GroundTruth,
    seed: int,
    base_gain: float = 1.0,
    delta_eig: float = DELTA_EIG,
    max_attempts: int = MAX_GAIN_ATTEMPTS,
) -> GainAssignment:
    """Sample gains in [0.5, 1.5] * base_gain until the gram eigenvalues separate.

    Distinct eigenvalues keep the undesired critical points isolated.
    Deterministic for a given seed; raises GainDesignFailed after max_attempts.
    """
    ns = topo.neighbors[i]
    dirs = np.array([truth.direction(i, j) for j in ns])
    virtual = len(ns) == 2
    if virtual:
        cross = np.cross(dirs[0], dirs[1])
        dirs = np.vstack([dirs, cross / np.linalg.norm(cross)])
    rng = np.random.default_rng(seed)
    for _ in range(max_attempts):
        gains = base_gain * rng.uniform(0.5, 1.5, size=len(dirs))
        k = (dirs.T * gains) @ dirs
        eigs = np.linalg.eigvalsh(k)
        if np.diff(eigs).min() >= delta_eig:
            edge = {(i, j): float(g) for j, g in zip(ns, gains)}
            return GainAssignment(edge, float(gains[-1]) if virtual else None)
    raise GainDesignFailed(
        f"no gain draw separated eigenvalues of follower {i} by {delta_eig} "
        f"in {max_attempts} attempts"
    )
