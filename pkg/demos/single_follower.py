"""One follower, two leaders: convergence and the decreasing certificate.

The smallest network with something to estimate.  The follower sees the
directions to both leaders in its own frame, hears each leader's estimate of
the opposite direction, and fabricates a third direction from the cross
product.  Ten random initial attitude guesses all converge; alongside each
run we evaluate the energy-style certificate

    V = |offset|^2 / 2 + cost - k_v * (offset . gradient)

with k_v picked by the built-in rule, and verify it never increases.

Writes single_follower.png next to this file.
"""
import pathlib

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from dirpose.dynamics import CoupledDynamics, initial_world
from dirpose.geometry import random_rotation
from dirpose.integrator import IntegratorConfig, advance
from dirpose.metrics import record
from dirpose.network import GroundTruth, NetworkTopology, build_K
from dirpose.orientation import estimate_sigma_lower, pick_k_V

topo = NetworkTopology(
    n_agents=3,
    leaders=[0, 1],
    neighbors={2: [0, 1]},
    edge_gains={(2, 0): 1.0, (2, 1): 1.5},
    position_gains={(2, 0): 1.0, (2, 1): 1.0},
    virtual_gains={2: 0.7},
)
positions = np.array([[0.0, 0.0, 0.0], [5.0, 0.0, 0.0], [1.5, 2.5, 3.5]])
omega_body = np.zeros((3, 3))
omega_body[2] = [0.15, 0.0, 0.0]

truth = GroundTruth(
    positions=positions,
    rotations=random_rotation(np.random.default_rng(11), n=3),
    omega_body=omega_body,
)
gram = build_K(2, topo, truth)
gains = [topo.edge_gains[(2, 0)], topo.edge_gains[(2, 1)], topo.virtual_gain(2)]
sigma = estimate_sigma_lower(gram, np.random.default_rng(0))
k_v = pick_k_V(gains, 2.0, truth.omega_bound(2), sigma)
print(f"sigma lower bound {sigma:.4f}, k_v {k_v:.4f}")

config = IntegratorConfig(dt=2e-3)
duration = 20.0
n_steps = round(duration / config.dt)
stride = 10

fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
for seed in range(10):
    world = initial_world(topo, truth, np.random.default_rng(100 + seed))
    dynamics = CoupledDynamics(topo, truth)
    t, y = 0.0, dynamics.pack(world)
    ts, errs, certs = [], [], []
    for k in range(n_steps):
        t, y = advance(t, y, dynamics, config)
        if k % stride == 0:
            rec = record(dynamics.unpack(t, y), topo, truth, {2: gram}, k_v=k_v)
            ts.append(t)
            errs.append(rec.orientation_error[0])
            certs.append(rec.certificate[0])
    certs = np.array(certs)
    jumps = np.diff(certs)
    assert jumps.max() <= 1e-12, "certificate increased"
    ax1.semilogy(ts, np.maximum(errs, 1e-16), lw=0.9)
    ax2.semilogy(ts, np.maximum(certs, 1e-16), lw=0.9)

ax1.set_xlabel("time [s]")
ax1.set_ylabel("attitude error [rad]")
ax1.set_title("10 random starts")
ax2.set_xlabel("time [s]")
ax2.set_ylabel("certificate V")
ax2.set_title("V only ever decreases")
for ax in (ax1, ax2):
    ax.grid(True, which="both", alpha=0.3)
fig.tight_layout()
out = pathlib.Path(__file__).with_suffix(".png")
fig.savefig(out, dpi=120)
print(f"wrote {out}")
