"""Network-level derivative assembly, measurement synthesis, and noise."""
import numpy as np
import pytest

from conftest import cube_topology, cube_truth, spec_bundle
from dirpose.dynamics import (
    CoupledDynamics,
    NoiseModel,
    WorldState,
    coupled_derivative,
    initial_world,
    synthesize_measurements,
)
from dirpose.geometry import hat, random_rotation, rotation_defect
from dirpose.network import GroundTruth, NetworkTopology
from dirpose.orientation import OrientationEstimatorState, rotation_rate, state_derivative
from dirpose.position import position_derivative


def random_cube_world(seed=3, rotating=False):
    topo = cube_topology()
    truth = cube_truth(rotating=rotating)
    world = initial_world(topo, truth, np.random.default_rng(seed))
    return topo, truth, world


def per_agent_derivative(world, topo, truth, noise=None, k_omega=2.0):
    """Oracle route: single-agent laws applied one follower at a time."""
    dyn = CoupledDynamics(topo, truth, noise, k_omega=k_omega)
    bundles = dyn.bundles(world)
    n = topo.n_agents
    dR = np.array([world.rotations[i] @ hat(truth.omega_body[i]) for i in range(n)])
    dRh = np.array(
        [
            world.rotation_estimates[i]
            @ hat(truth.omega_body[i] - world.omega_offsets[i])
            for i in range(n)
        ]
    )
    dOm = np.zeros((n, 3))
    dp = np.zeros((n, 3))
    for i in topo.followers:
        st = OrientationEstimatorState(
            R_hat=world.rotation_estimates[i],
            Omega_tilde=world.omega_offsets[i],
            k_omega=k_omega,
        )
        tangent, dom = state_derivative(st, bundles[i], truth.omega_body[i])
        dRh[i] = rotation_rate(st, tangent)
        dOm[i] = dom
        dp[i] = position_derivative(
            world.position_estimates[i], world.rotation_estimates[i], bundles[i]
        )
    return dR, dRh, dOm, dp


def test_edge_table_layout():
    topo = cube_topology()
    truth = cube_truth()
    dyn = CoupledDynamics(topo, truth)
    # rows grouped per follower in ascending order, neighbors kept in list order
    expected = [(i, j) for i in topo.followers for j in topo.neighbors[i]]
    assert list(zip(dyn.src, dyn.dst)) == expected
    for r, (i, j) in enumerate(expected):
        assert dyn.k_orient[r] == topo.edge_gains[(i, j)]
        np.testing.assert_allclose(dyn.b_out[r], truth.direction(i, j), atol=1e-15)
    np.testing.assert_allclose(np.linalg.norm(dyn.b_out, axis=1), 1.0, atol=1e-13)
    assert list(dyn.v_agent) == [2, 6, 7]


def test_measurement_consistency_noise_free():
    topo, truth, world = random_cube_world()
    bundles = synthesize_measurements(world, topo, truth)
    for i, bundle in bundles.items():
        m = bundle.n_measured
        # own body rows rotate back to the true directions
        back = bundle.body[:m] @ world.rotations[i].T
        np.testing.assert_allclose(back, bundle.true_dirs[:m], atol=1e-13)
        # communicated rows carry the neighbor's estimate of the inward direction
        for row, j in enumerate(topo.neighbors[i]):
            expected = world.rotation_estimates[j] @ (
                truth.rotations[j].T @ -bundle.true_dirs[row]
            )
            np.testing.assert_allclose(bundle.comm[row], expected, atol=1e-13)


def test_bundle_routes_agree():
    topo, truth, world = random_cube_world(seed=17)
    bundles = synthesize_measurements(world, topo, truth)
    r_hat = {i: world.rotation_estimates[i] for i in range(topo.n_agents)}
    p_hat = {i: world.position_estimates[i] for i in range(topo.n_agents)}
    for i in topo.followers:
        ref = spec_bundle(i, topo, truth, r_hat, p_hat)
        got = bundles[i]
        assert got.n_measured == ref.n_measured
        np.testing.assert_array_equal(got.gains, ref.gains)
        np.testing.assert_allclose(got.body, ref.body, atol=1e-13)
        np.testing.assert_allclose(got.comm, ref.comm, atol=1e-13)
        np.testing.assert_allclose(got.true_dirs, ref.true_dirs, atol=1e-13)
        np.testing.assert_array_equal(got.position_gains, ref.position_gains)
        np.testing.assert_array_equal(got.neighbor_p, ref.neighbor_p)


@pytest.mark.parametrize("noisy", [False, True])
def test_derivative_routes_agree(noisy):
    topo, truth, world = random_cube_world(seed=29, rotating=True)
    world.t = 0.123
    world.omega_offsets[2:] = np.random.default_rng(4).normal(size=(6, 3))
    noise = None
    if noisy:
        noise = NoiseModel.build(topo, truth, np.radians(10.0), 5.0, seed=8)
    dR, dRh, dOm, dp = per_agent_derivative(world, topo, truth, noise)
    d = coupled_derivative(world, topo, truth, noise)
    np.testing.assert_allclose(d.rotations, dR, atol=1e-13)
    np.testing.assert_allclose(d.rotation_estimates, dRh, atol=1e-12)
    np.testing.assert_allclose(d.omega_offsets, dOm, atol=1e-12)
    np.testing.assert_allclose(d.position_estimates, dp, atol=1e-11)


def test_leader_derivative_blocks():
    topo, truth, world = random_cube_world(seed=5, rotating=True)
    d = coupled_derivative(world, topo, truth)
    for i in topo.leaders:
        np.testing.assert_array_equal(d.omega_offsets[i], np.zeros(3))
        np.testing.assert_array_equal(d.position_estimates[i], np.zeros(3))
        np.testing.assert_array_equal(d.rotation_estimates[i], d.rotations[i])


def test_derivative_near_zero_at_equilibrium():
    topo = cube_topology()
    truth = cube_truth()
    n = topo.n_agents
    world = WorldState(
        t=0.0,
        rotations=truth.rotations.copy(),
        rotation_estimates=truth.rotations.copy(),
        omega_offsets=np.zeros((n, 3)),
        position_estimates=truth.positions.copy(),
    )
    d = coupled_derivative(world, topo, truth)
    assert np.abs(d.omega_offsets).max() < 1e-14
    assert np.abs(d.position_estimates).max() < 1e-12
    np.testing.assert_allclose(d.rotation_estimates, d.rotations, atol=1e-14)


def test_cascade_summation_is_bit_exact():
    topo, truth, world = random_cube_world(seed=41)
    dyn = CoupledDynamics(topo, truth)
    base = dyn.derivative_flat(0.0, dyn.pack(world))
    bumped = world.copy()
    rng = np.random.default_rng(7)
    for i in (5, 6, 7):
        bumped.rotation_estimates[i] = random_rotation(rng)
        bumped.omega_offsets[i] = rng.normal(size=3)
        bumped.position_estimates[i] += rng.normal(size=3)
    other = dyn.derivative_flat(0.0, dyn.pack(bumped))
    db = dyn.unpack(0.0, base)
    do = dyn.unpack(0.0, other)
    # agents 0..4 depend only on agents before 5, so their rows match bitwise
    for i in range(5):
        np.testing.assert_array_equal(do.rotation_estimates[i], db.rotation_estimates[i])
        np.testing.assert_array_equal(do.omega_offsets[i], db.omega_offsets[i])
        np.testing.assert_array_equal(do.position_estimates[i], db.position_estimates[i])
    assert not np.array_equal(do.omega_offsets[5], db.omega_offsets[5])


def test_noise_peak_amplitude_exact():
    topo = cube_topology()
    truth = cube_truth()
    theta0 = np.radians(10.0)
    freq = 5.0
    noise = NoiseModel.build(topo, truth, theta0, freq, seed=9)
    dyn = CoupledDynamics(topo, truth, noise)
    b_out, b_in = dyn.edge_directions_at(1.0 / (4.0 * freq))
    ang_out = np.arccos(np.clip(np.sum(b_out * dyn.b_out, axis=1), -1.0, 1.0))
    ang_in = np.arccos(np.clip(np.sum(b_in * -dyn.b_out, axis=1), -1.0, 1.0))
    np.testing.assert_allclose(ang_out, theta0, atol=1e-12)
    np.testing.assert_allclose(ang_in, theta0, atol=1e-12)
    for t in np.linspace(0.0, 0.4, 181):
        b_out, b_in = dyn.edge_directions_at(t)
        ang = np.arccos(np.clip(np.sum(b_out * dyn.b_out, axis=1), -1.0, 1.0))
        assert ang.max() <= theta0 + 1e-12
        np.testing.assert_allclose(np.linalg.norm(b_out, axis=1), 1.0, atol=1e-13)


def test_noise_axes_orthogonal_independent_and_seeded():
    topo = cube_topology()
    truth = cube_truth()
    noise = NoiseModel.build(topo, truth, 0.1, 1.0, seed=12)
    dyn = CoupledDynamics(topo, truth)
    assert np.abs(np.sum(noise.axes_own * dyn.b_out, axis=1)).max() < 1e-12
    assert np.abs(np.sum(noise.axes_comm * dyn.b_out, axis=1)).max() < 1e-12
    np.testing.assert_allclose(np.linalg.norm(noise.axes_own, axis=1), 1.0, atol=1e-13)
    # the two channels of an edge wobble about different axes
    same = np.all(np.isclose(noise.axes_own, noise.axes_comm, atol=1e-6), axis=1)
    assert not same.any()
    again = NoiseModel.build(topo, truth, 0.1, 1.0, seed=12)
    np.testing.assert_array_equal(noise.axes_own, again.axes_own)
    np.testing.assert_array_equal(noise.axes_comm, again.axes_comm)
    other = NoiseModel.build(topo, truth, 0.1, 1.0, seed=13)
    assert not np.array_equal(noise.axes_own, other.axes_own)


def test_directions_exact_when_noise_off():
    topo = cube_topology()
    truth = cube_truth()
    silent = NoiseModel.build(topo, truth, 0.0, 5.0, seed=1)
    for dyn in (CoupledDynamics(topo, truth), CoupledDynamics(topo, truth, silent)):
        b_out, b_in = dyn.edge_directions_at(0.37)
        np.testing.assert_array_equal(b_out, dyn.b_out)
        np.testing.assert_array_equal(b_in, -dyn.b_out)


def test_initial_world_draws():
    topo = cube_topology()
    truth = cube_truth()
    world = initial_world(topo, truth, np.random.default_rng(2))
    for i in topo.leaders:
        np.testing.assert_array_equal(world.rotations[i], truth.rotations[i])
        np.testing.assert_array_equal(world.rotation_estimates[i], truth.rotations[i])
        np.testing.assert_array_equal(world.position_estimates[i], truth.positions[i])
    np.testing.assert_array_equal(world.omega_offsets, np.zeros((8, 3)))
    lo = truth.positions.min(axis=0)
    hi = truth.positions.max(axis=0)
    center = 0.5 * (lo + hi)
    half = hi - lo
    for i in topo.followers:
        assert np.all(world.position_estimates[i] >= center - half)
        assert np.all(world.position_estimates[i] <= center + half)
        assert rotation_defect(world.rotation_estimates[i]) < 1e-12
    again = initial_world(topo, truth, np.random.default_rng(2))
    np.testing.assert_array_equal(world.rotation_estimates, again.rotation_estimates)
    np.testing.assert_array_equal(world.position_estimates, again.position_estimates)


def test_initial_world_overrides():
    topo = cube_topology()
    truth = cube_truth()
    rot = np.eye(3)
    pos = np.array([9.0, -9.0, 9.0])
    world = initial_world(
        topo, truth, np.random.default_rng(2), follower_estimates={4: (rot, pos)}
    )
    np.testing.assert_array_equal(world.rotation_estimates[4], rot)
    np.testing.assert_array_equal(world.position_estimates[4], pos)
