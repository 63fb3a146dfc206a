"""Per-follower convergence metrics and trace-level analysis."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import WorldState
from .geometry import geodesic_error
from .network import GroundTruth, NetworkTopology, build_K
from .orientation import error_function_trace, error_vector_from_gram
from .position import constraint_residual

__all__ = ["TraceRecord", "record", "detect_convergence"]

EPS_CONVERGED = 1e-3
WINDOW_DEFAULT = 1.0


@dataclass
class TraceRecord:
    """One sampled instant; arrays run over followers in ascending id order."""

    t: float
    orientation_error: np.ndarray
    position_error: np.ndarray
    alignment_cost: np.ndarray
    residual: np.ndarray
    certificate: np.ndarray | None = None


def record(
    world: WorldState,
    topo: NetworkTopology,
    truth: GroundTruth,
    gram_by_agent: dict[int, np.ndarray] | None = None,
    k_v: float | None = None,
) -> TraceRecord:
    """Sample all follower metrics from the current world state.

    The alignment cost uses the trace form over each follower's direction gram
    matrix, so recording never resynthesizes measurements.  The residual uses
    true directions against current neighbor position estimates, which makes
    it a quantity the followers themselves could not evaluate; it is a
    diagnostic of the trace, not part of the control loop.
    """
    followers = topo.followers
    if gram_by_agent is None:
        gram_by_agent = {i: build_K(i, topo, truth) for i in followers}
    orient = np.empty(len(followers))
    pos = np.empty(len(followers))
    cost = np.empty(len(followers))
    resid = np.empty(len(followers))
    cert = np.empty(len(followers)) if k_v is not None else None
    for row, i in enumerate(followers):
        r_true = world.rotations[i]
        r_hat = world.rotation_estimates[i]
        orient[row] = geodesic_error(r_hat, r_true)
        pos[row] = np.linalg.norm(world.position_estimates[i] - truth.positions[i])
        cost[row] = error_function_trace(r_hat, r_true, gram_by_agent[i])
        ns = topo.neighbors[i]
        dirs = np.array([truth.direction(i, j) for j in ns])
        resid[row] = constraint_residual(
            world.position_estimates[i], dirs, world.position_estimates[ns]
        )
        if cert is not None:
            om = world.omega_offsets[i]
            e = error_vector_from_gram(r_hat, r_true, gram_by_agent[i])
            cert[row] = 0.5 * om @ om + cost[row] - k_v * om @ e
    return TraceRecord(
        t=world.t,
        orientation_error=orient,
        position_error=pos,
        alignment_cost=cost,
        residual=resid,
        certificate=cert,
    )


def detect_convergence(
    ts: np.ndarray,
    values: np.ndarray,
    eps: float = EPS_CONVERGED,
    window: float = WINDOW_DEFAULT,
) -> float | None:
    """Earliest sample time from which values stay below eps for a full window.

    A qualifying stretch must remain below eps over at least ``window``
    seconds of consecutive samples; a trace that ends mid-window does not
    qualify.  Returns None when no stretch qualifies.
    """
    ts = np.asarray(ts, dtype=float)
    values = np.asarray(values, dtype=float)
    if ts.shape != values.shape:
        raise ValueError("ts and values must have matching shapes")
    below = values < eps
    i = 0
    n = len(ts)
    while i < n:
        if not below[i]:
            i += 1
            continue
        j = i
        while j + 1 < n and below[j + 1]:
            j += 1
        if ts[j] - ts[i] >= window - 1e-12:
            return float(ts[i])
        i = j + 1
    return None
