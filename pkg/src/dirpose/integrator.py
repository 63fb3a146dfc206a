"""Fixed-step time integration with rotation-manifold upkeep.

The steppers are generic over flat float arrays.  :func:`step` specializes to
the network state: it advances one step, checks finiteness, and reprojects any
rotation block whose orthonormality defect drifted past the configured
threshold, so long runs stay on the manifold without paying the projection
cost every step.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .dynamics import CoupledDynamics, WorldState
from .geometry import project_to_so3

__all__ = [
    "NonFiniteState",
    "IntegratorConfig",
    "euler_step",
    "rk4_step",
    "advance",
    "step",
]

DT_MAX = 0.1
METHODS = ("rk4", "euler")


class NonFiniteState(RuntimeError):
    """The integrated state left the representable range (inf or nan)."""


@dataclass
class IntegratorConfig:
    dt: float = 1e-3
    method: str = "rk4"
    reproject_threshold: float = 1e-9

    def __post_init__(self) -> None:
        if not (0.0 < self.dt <= DT_MAX):
            raise ValueError(f"dt must lie in (0, {DT_MAX}], got {self.dt}")
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.reproject_threshold < 0.0:
            raise ValueError("reproject_threshold must be nonnegative")


Derivative = Callable[[float, np.ndarray], np.ndarray]


def euler_step(t: float, y: np.ndarray, dt: float, f: Derivative) -> np.ndarray:
    return y + dt * f(t, y)


def rk4_step(t: float, y: np.ndarray, dt: float, f: Derivative) -> np.ndarray:
    k1 = f(t, y)
    k2 = f(t + 0.5 * dt, y + 0.5 * dt * k1)
    k3 = f(t + 0.5 * dt, y + 0.5 * dt * k2)
    k4 = f(t + dt, y + dt * k3)
    return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _reproject(y: np.ndarray, n: int, threshold: float) -> None:
    blocks = y[: 18 * n].reshape(2 * n, 3, 3)
    gram = np.einsum("bij,bkj->bik", blocks, blocks)
    defect = np.linalg.norm(gram - np.eye(3), axis=(1, 2))
    for b in np.nonzero(defect > threshold)[0]:
        blocks[b] = project_to_so3(blocks[b])


def advance(
    t: float, y: np.ndarray, dynamics: CoupledDynamics, config: IntegratorConfig
) -> tuple[float, np.ndarray]:
    """One step on the flat state vector: the loop-friendly core of step()."""
    stepper = rk4_step if config.method == "rk4" else euler_step
    y_new = stepper(t, y, config.dt, dynamics.derivative_flat)
    if not np.all(np.isfinite(y_new)):
        raise NonFiniteState(f"non-finite state after step from t={t}")
    _reproject(y_new, dynamics.n, config.reproject_threshold)
    return t + config.dt, y_new


def step(world: WorldState, dynamics: CoupledDynamics, config: IntegratorConfig) -> WorldState:
    """Advance the world by one fixed step of the configured method."""
    t, y = advance(world.t, dynamics.pack(world), dynamics, config)
    return dynamics.unpack(t, y)
