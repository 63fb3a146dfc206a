"""Walk the alignment cost from the true attitude out to its false equilibria.

The attitude estimator descends a Wahba-style cost built from weighted
direction measurements.  That cost has exactly four stationary points: the
true attitude (the global minimum) and three half-turns about the
eigenvectors of the weighted direction gram matrix, each with trace -1.
This script takes a two-neighbor follower (so one of the three directions is
the synthesized cross-product one), walks geodesics from the minimum to each
half-turn, and plots the cost and the gradient norm along the way.  The
gradient vanishes at both ends of every path; the far ends sit at different
heights because the gram eigenvalues differ.

Writes error_landscape.png next to this file.
"""
import pathlib

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from dirpose.geometry import exp_so3, random_rotation
from dirpose.network import GroundTruth, NetworkTopology, build_K
from dirpose.orientation import critical_points, error_function_trace, error_vector_from_gram

topo = NetworkTopology(
    n_agents=3,
    leaders=[0, 1],
    neighbors={2: [0, 1]},
    edge_gains={(2, 0): 1.0, (2, 1): 1.5},
    position_gains={(2, 0): 1.0, (2, 1): 1.0},
    virtual_gains={2: 0.7},
)
truth = GroundTruth(
    positions=np.array([[0.0, 0.0, 0.0], [5.0, 0.0, 0.0], [1.5, 2.5, 3.5]]),
    rotations=random_rotation(np.random.default_rng(4), n=3),
    omega_body=np.zeros((3, 3)),
)

gram = build_K(2, topo, truth)
r_true = truth.rotations[2]
points = critical_points(gram)
eigvals, eigvecs = np.linalg.eigh(gram)
print("gram eigenvalues:", np.round(eigvals, 4))
for p in points[1:]:
    print(f"half-turn: trace {np.trace(p):+.6f}")

s = np.linspace(0.0, 1.0, 241)
fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
for axis_idx in range(3):
    u = eigvecs[:, axis_idx]
    phis, grads = [], []
    for si in s:
        r_hat = exp_so3(si * np.pi * u) @ r_true
        phis.append(error_function_trace(r_hat, r_true, gram))
        grads.append(np.linalg.norm(error_vector_from_gram(r_hat, r_true, gram)))
    ax1.plot(s, phis, label=f"toward half-turn about u{axis_idx + 1}")
    ax2.plot(s, grads, label=f"toward half-turn about u{axis_idx + 1}")

ax1.set_xlabel("fraction of the half-turn")
ax1.set_ylabel("alignment cost")
ax1.set_title("cost along geodesics out of the minimum")
ax2.set_xlabel("fraction of the half-turn")
ax2.set_ylabel("gradient norm")
ax2.set_title("gradient vanishes at both ends")
for ax in (ax1, ax2):
    ax.legend(fontsize=8)
    ax.grid(True, alpha=0.3)
fig.tight_layout()
out = pathlib.Path(__file__).with_suffix(".png")
fig.savefig(out, dpi=120)
print(f"wrote {out}")
