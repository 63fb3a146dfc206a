"""Scenario files, deterministic runs, and trace summaries.

A scenario is a JSON document (schema_version 1) with sections:

- ``agents``: ordered records ``{id, leader, position, rotation, omega_body}``;
  ``rotation`` is a 3x3 row-major matrix or null, null meaning "draw it from
  the init seed at run time".
- ``edges``: ``{from, to, k, k_p}`` per measured link, follower to neighbor.
- ``gains``: ``k_omega`` plus optional ``virtual`` (per-agent overrides) and
  ``virtual_scale``.
- ``noise``: ``{enabled, theta0, freq, phase}``, angles in radians.
- ``integrator``: ``{dt, method, reproject_threshold}``.
- ``seeds``: ``{init, noise_axes, gain_design}``.
- ``run``: ``{duration, stride}``.

Unknown keys are rejected anywhere in the document: a typo in an optional key
must fail loudly, not silently fall back to a default.  Structural problems
raise :class:`ParseError`; semantic ones are collected by
:func:`validate_scenario` into a report so a caller sees all of them at once.

Runs are bit-deterministic: identical scenario plus identical library
versions yield identical traces, byte for byte.
"""
from __future__ import annotations

import io
import json
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .dynamics import CoupledDynamics, NoiseModel, WorldState, initial_world
from .geometry import random_rotation, rotation_defect
from .integrator import IntegratorConfig, advance
from .metrics import EPS_CONVERGED, WINDOW_DEFAULT, TraceRecord, detect_convergence, record
from .network import (
    CoplanarDirections,
    GroundTruth,
    NetworkTopology,
    ValidationReport,
    build_K,
    design_gains,
    validate_geometry,
    validate_topology,
)
from .orientation import K_OMEGA_DEFAULT

__all__ = [
    "ParseError",
    "NoiseSettings",
    "IntegratorSettings",
    "Seeds",
    "RunSettings",
    "Scenario",
    "parse_scenario",
    "load_scenario",
    "serialize_scenario",
    "validate_scenario",
    "materialize",
    "run",
    "write_trace",
    "read_trace",
    "report_from_trace",
    "generate_cube_scenario",
    "CUBE_NEIGHBORS",
]

SCHEMA_VERSION = 1
THETA0_MAX = np.pi / 2
ROTATION_INPUT_DEFECT = 1e-8
TRACE_FIELDS = ("orient_err", "pos_err", "phi", "residual")


class ParseError(ValueError):
    """Structurally invalid scenario document or trace file."""


@dataclass
class NoiseSettings:
    enabled: bool = False
    theta0: float = 0.0
    freq: float = 1.0
    phase: float = 0.0


@dataclass
class IntegratorSettings:
    dt: float = 1e-3
    method: str = "rk4"
    reproject_threshold: float = 1e-9


@dataclass
class Seeds:
    init: int = 1
    noise_axes: int = 2
    gain_design: int = 3


@dataclass
class RunSettings:
    duration: float = 60.0
    stride: int = 50


@dataclass
class Scenario:
    topology: NetworkTopology
    positions: np.ndarray
    rotations: list[np.ndarray | None]
    omega_body: np.ndarray
    k_omega: float = K_OMEGA_DEFAULT
    noise: NoiseSettings = field(default_factory=NoiseSettings)
    integrator: IntegratorSettings = field(default_factory=IntegratorSettings)
    seeds: Seeds = field(default_factory=Seeds)
    run: RunSettings = field(default_factory=RunSettings)


# -- parsing --------------------------------------------------------------


def _check_keys(obj: Any, path: str, required: tuple, optional: tuple = ()) -> None:
    if not isinstance(obj, dict):
        raise ParseError(f"{path}: expected an object")
    for key in obj:
        if key not in required and key not in optional:
            raise ParseError(f"{path}: unknown key {key!r}")
    for key in required:
        if key not in obj:
            raise ParseError(f"{path}: missing key {key!r}")


def _number(x: Any, path: str) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise ParseError(f"{path}: expected a number")
    return float(x)


def _integer(x: Any, path: str) -> int:
    if isinstance(x, bool) or not isinstance(x, int):
        raise ParseError(f"{path}: expected an integer")
    return x


def _boolean(x: Any, path: str) -> bool:
    if not isinstance(x, bool):
        raise ParseError(f"{path}: expected true or false")
    return x


def _string(x: Any, path: str) -> str:
    if not isinstance(x, str):
        raise ParseError(f"{path}: expected a string")
    return x


def _vec3(x: Any, path: str) -> np.ndarray:
    if not isinstance(x, list) or len(x) != 3:
        raise ParseError(f"{path}: expected a list of 3 numbers")
    return np.array([_number(v, f"{path}[{k}]") for k, v in enumerate(x)])


def _mat3(x: Any, path: str) -> np.ndarray:
    if not isinstance(x, list) or len(x) != 3:
        raise ParseError(f"{path}: expected a 3x3 matrix as 3 rows")
    return np.array([_vec3(row, f"{path}[{k}]") for k, row in enumerate(x)])


def parse_scenario(data: Any) -> Scenario:
    """Build a Scenario from decoded JSON, rejecting structural problems."""
    _check_keys(
        data,
        "scenario",
        ("schema_version", "agents", "edges", "gains", "noise", "integrator", "seeds", "run"),
    )
    version = _integer(data["schema_version"], "schema_version")
    if version != SCHEMA_VERSION:
        raise ParseError(f"schema_version: expected {SCHEMA_VERSION}, got {version}")

    agents = data["agents"]
    if not isinstance(agents, list) or not agents:
        raise ParseError("agents: expected a non-empty list")
    n = len(agents)
    positions = np.zeros((n, 3))
    rotations: list[np.ndarray | None] = []
    omega = np.zeros((n, 3))
    leaders: list[int] = []
    for k, rec in enumerate(agents):
        path = f"agents[{k}]"
        _check_keys(rec, path, ("id", "leader", "position", "rotation", "omega_body"))
        if _integer(rec["id"], f"{path}.id") != k:
            raise ParseError(f"{path}.id: agents must be listed in id order, expected {k}")
        if _boolean(rec["leader"], f"{path}.leader"):
            leaders.append(k)
        positions[k] = _vec3(rec["position"], f"{path}.position")
        rot = rec["rotation"]
        rotations.append(None if rot is None else _mat3(rot, f"{path}.rotation"))
        omega[k] = _vec3(rec["omega_body"], f"{path}.omega_body")

    edges = data["edges"]
    if not isinstance(edges, list):
        raise ParseError("edges: expected a list")
    neighbors: dict[int, list[int]] = {}
    edge_gains: dict[tuple[int, int], float] = {}
    position_gains: dict[tuple[int, int], float] = {}
    for r, rec in enumerate(edges):
        path = f"edges[{r}]"
        _check_keys(rec, path, ("from", "to", "k", "k_p"))
        i = _integer(rec["from"], f"{path}.from")
        j = _integer(rec["to"], f"{path}.to")
        neighbors.setdefault(i, []).append(j)
        edge_gains[(i, j)] = _number(rec["k"], f"{path}.k")
        position_gains[(i, j)] = _number(rec["k_p"], f"{path}.k_p")

    gains = data["gains"]
    _check_keys(gains, "gains", ("k_omega",), ("virtual", "virtual_scale"))
    k_omega = _number(gains["k_omega"], "gains.k_omega")
    virtual: dict[int, float] = {}
    virtual_obj = gains.get("virtual", {})
    if not isinstance(virtual_obj, dict):
        raise ParseError("gains.virtual: expected an object")
    for key, value in virtual_obj.items():
        try:
            agent = int(key)
        except ValueError:
            raise ParseError(f"gains.virtual: keys must be agent ids, got {key!r}") from None
        virtual[agent] = _number(value, f"gains.virtual[{key}]")
    virtual_scale = _number(gains.get("virtual_scale", 1.0), "gains.virtual_scale")

    noise_obj = data["noise"]
    _check_keys(noise_obj, "noise", ("enabled", "theta0", "freq"), ("phase",))
    noise = NoiseSettings(
        enabled=_boolean(noise_obj["enabled"], "noise.enabled"),
        theta0=_number(noise_obj["theta0"], "noise.theta0"),
        freq=_number(noise_obj["freq"], "noise.freq"),
        phase=_number(noise_obj.get("phase", 0.0), "noise.phase"),
    )

    integ_obj = data["integrator"]
    _check_keys(integ_obj, "integrator", ("dt",), ("method", "reproject_threshold"))
    integ = IntegratorSettings(
        dt=_number(integ_obj["dt"], "integrator.dt"),
        method=_string(integ_obj.get("method", "rk4"), "integrator.method"),
        reproject_threshold=_number(
            integ_obj.get("reproject_threshold", 1e-9), "integrator.reproject_threshold"
        ),
    )

    seeds_obj = data["seeds"]
    _check_keys(seeds_obj, "seeds", ("init", "noise_axes", "gain_design"))
    seeds = Seeds(
        init=_integer(seeds_obj["init"], "seeds.init"),
        noise_axes=_integer(seeds_obj["noise_axes"], "seeds.noise_axes"),
        gain_design=_integer(seeds_obj["gain_design"], "seeds.gain_design"),
    )

    run_obj = data["run"]
    _check_keys(run_obj, "run", ("duration",), ("stride",))
    run_settings = RunSettings(
        duration=_number(run_obj["duration"], "run.duration"),
        stride=_integer(run_obj.get("stride", 50), "run.stride"),
    )

    topo = NetworkTopology(
        n_agents=n,
        leaders=leaders,
        neighbors=neighbors,
        edge_gains=edge_gains,
        position_gains=position_gains,
        virtual_gains=virtual,
        virtual_scale=virtual_scale,
    )
    return Scenario(
        topology=topo,
        positions=positions,
        rotations=rotations,
        omega_body=omega,
        k_omega=k_omega,
        noise=noise,
        integrator=integ,
        seeds=seeds,
        run=run_settings,
    )


def load_scenario(path: str) -> Scenario:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}: not valid JSON ({exc})") from None
    return parse_scenario(data)


def serialize_scenario(sc: Scenario) -> dict:
    """Plain-JSON form of a scenario; parse_scenario inverts it exactly."""
    topo = sc.topology
    leaders = set(topo.leaders)
    agents = []
    for i in range(topo.n_agents):
        rot = sc.rotations[i]
        agents.append(
            {
                "id": i,
                "leader": i in leaders,
                "position": [float(v) for v in sc.positions[i]],
                "rotation": None if rot is None else [[float(v) for v in row] for row in rot],
                "omega_body": [float(v) for v in sc.omega_body[i]],
            }
        )
    edges = [
        {
            "from": i,
            "to": j,
            "k": float(topo.edge_gains[(i, j)]),
            "k_p": float(topo.position_gains[(i, j)]),
        }
        for i in sorted(topo.neighbors)
        for j in topo.neighbors[i]
    ]
    return {
        "schema_version": SCHEMA_VERSION,
        "agents": agents,
        "edges": edges,
        "gains": {
            "k_omega": float(sc.k_omega),
            "virtual": {str(i): float(g) for i, g in sorted(topo.virtual_gains.items())},
            "virtual_scale": float(topo.virtual_scale),
        },
        "noise": {
            "enabled": sc.noise.enabled,
            "theta0": float(sc.noise.theta0),
            "freq": float(sc.noise.freq),
            "phase": float(sc.noise.phase),
        },
        "integrator": {
            "dt": float(sc.integrator.dt),
            "method": sc.integrator.method,
            "reproject_threshold": float(sc.integrator.reproject_threshold),
        },
        "seeds": {
            "init": sc.seeds.init,
            "noise_axes": sc.seeds.noise_axes,
            "gain_design": sc.seeds.gain_design,
        },
        "run": {"duration": float(sc.run.duration), "stride": sc.run.stride},
    }


# -- validation -----------------------------------------------------------


def validate_scenario(sc: Scenario) -> ValidationReport:
    """Collect every semantic violation; an empty report means runnable."""
    topo = sc.topology
    out = list(validate_topology(topo).violations)
    for i in topo.neighbors:
        if not 0 <= i < topo.n_agents:
            out.append(f"edge source {i} is not a known agent")
    for i, rot in enumerate(sc.rotations):
        if rot is not None and rotation_defect(rot) > ROTATION_INPUT_DEFECT:
            out.append(f"agent {i} rotation is not orthonormal within {ROTATION_INPUT_DEFECT}")
    if not out:
        truth = GroundTruth(
            positions=sc.positions,
            rotations=np.broadcast_to(np.eye(3), (topo.n_agents, 3, 3)),
            omega_body=sc.omega_body,
        )
        geom = validate_geometry(topo, truth)
        out += geom.violations
        if geom.ok:
            for i in topo.followers:
                try:
                    build_K(i, topo, truth)
                except CoplanarDirections as exc:
                    out.append(str(exc))
    if sc.k_omega <= 0.0:
        out.append("gains.k_omega must be positive")
    if topo.virtual_scale <= 0.0:
        out.append("gains.virtual_scale must be positive")
    two_neighbor = {i for i in topo.followers if len(topo.neighbors.get(i, [])) == 2}
    for i in topo.virtual_gains:
        if i not in two_neighbor:
            out.append(f"virtual gain given for agent {i}, which has no virtual direction")
    if not 0.0 <= sc.noise.theta0 < THETA0_MAX:
        out.append(f"noise.theta0 must lie in [0, {THETA0_MAX:.6f}) radians")
    if sc.noise.enabled and sc.noise.freq <= 0.0:
        out.append("noise.freq must be positive when noise is enabled")
    try:
        IntegratorConfig(
            dt=sc.integrator.dt,
            method=sc.integrator.method,
            reproject_threshold=sc.integrator.reproject_threshold,
        )
    except ValueError as exc:
        out.append(f"integrator: {exc}")
    for name, value in (
        ("init", sc.seeds.init),
        ("noise_axes", sc.seeds.noise_axes),
        ("gain_design", sc.seeds.gain_design),
    ):
        if value < 0:
            out.append(f"seeds.{name} must be nonnegative")
    if sc.run.duration <= 0.0:
        out.append("run.duration must be positive")
    elif sc.run.duration < sc.integrator.dt:
        out.append("run.duration must cover at least one step")
    if sc.run.stride < 1:
        out.append("run.stride must be at least 1")
    return ValidationReport(out)


# -- running --------------------------------------------------------------


def materialize(
    sc: Scenario,
) -> tuple[GroundTruth, WorldState, CoupledDynamics, IntegratorConfig]:
    """Resolve seeds into concrete truth, initial state, and evaluator.

    Draw order from the init seed: missing true rotations in agent order,
    then follower rotation estimates, then follower position estimates.
    """
    topo = sc.topology
    rng = np.random.default_rng(sc.seeds.init)
    rotations = np.empty((topo.n_agents, 3, 3))
    for i in range(topo.n_agents):
        given = sc.rotations[i]
        rotations[i] = random_rotation(rng) if given is None else given
    truth = GroundTruth(
        positions=np.array(sc.positions, dtype=float),
        rotations=rotations,
        omega_body=np.array(sc.omega_body, dtype=float),
    )
    world = initial_world(topo, truth, rng)
    noise = None
    if sc.noise.enabled and sc.noise.theta0 > 0.0:
        noise = NoiseModel.build(
            topo,
            truth,
            theta0=sc.noise.theta0,
            freq=sc.noise.freq,
            seed=sc.seeds.noise_axes,
            phase=sc.noise.phase,
        )
    dynamics = CoupledDynamics(topo, truth, noise, k_omega=sc.k_omega)
    config = IntegratorConfig(
        dt=sc.integrator.dt,
        method=sc.integrator.method,
        reproject_threshold=sc.integrator.reproject_threshold,
    )
    return truth, world, dynamics, config


def run(sc: Scenario, trace_path: str | None = None) -> dict:
    """Integrate the scenario, optionally writing the sampled trace as CSV.

    Returns a summary with final metrics and detected convergence times.
    """
    topo = sc.topology
    truth, world, dynamics, config = materialize(sc)
    grams = {i: build_K(i, topo, truth) for i in topo.followers}
    n_steps = round(sc.run.duration / config.dt)
    stride = sc.run.stride
    records = [record(world, topo, truth, grams)]
    t, y = world.t, dynamics.pack(world)
    for k in range(1, n_steps + 1):
        t, y = advance(t, y, dynamics, config)
        if k % stride == 0 or k == n_steps:
            world = dynamics.unpack(t, y)
            records.append(record(world, topo, truth, grams))
    if trace_path is not None:
        write_trace(trace_path, topo.followers, records)
    summary = {
        "agents": topo.n_agents,
        "followers": topo.followers,
        "duration": float(world.t),
        "dt": config.dt,
        "steps": n_steps,
        "samples": len(records),
        "noise": sc.noise.enabled and sc.noise.theta0 > 0.0,
        "gram_eigenvalues": {
            str(i): [float(v) for v in np.linalg.eigvalsh(grams[i])] for i in topo.followers
        },
    }
    ts = np.array([r.t for r in records])
    columns = {
        "orient_err": np.array([r.orientation_error for r in records]),
        "pos_err": np.array([r.position_error for r in records]),
        "phi": np.array([r.alignment_cost for r in records]),
        "residual": np.array([r.residual for r in records]),
    }
    summary.update(_summarize(topo.followers, ts, columns))
    return summary


def _summarize(followers: list[int], ts: np.ndarray, columns: dict[str, np.ndarray]) -> dict:
    final = {"t": float(ts[-1])}
    for name, block in columns.items():
        final[name] = {str(i): float(block[-1, c]) for c, i in enumerate(followers)}
    converged: dict[str, Any] = {"eps": EPS_CONVERGED, "window": WINDOW_DEFAULT}
    for name in ("orient_err", "pos_err"):
        block = columns[name]
        converged[name] = {
            str(i): detect_convergence(ts, block[:, c]) for c, i in enumerate(followers)
        }
    return {"final": final, "converged": converged}


# -- trace files ----------------------------------------------------------


def write_trace(path: str, followers: list[int], records: list[TraceRecord]) -> None:
    """CSV trace: %.17g values, LF line endings, one row per sample."""
    header = ["t"]
    for i in followers:
        header += [f"{name}_{i}" for name in TRACE_FIELDS]
    lines = [",".join(header)]
    for rec in records:
        vals = [rec.t]
        for c in range(len(followers)):
            vals += [
                rec.orientation_error[c],
                rec.position_error[c],
                rec.alignment_cost[c],
                rec.residual[c],
            ]
        lines.append(",".join("%.17g" % v for v in vals))
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def read_trace(path: str) -> tuple[list[int], np.ndarray, dict[str, np.ndarray]]:
    """Read a trace written by write_trace: (follower ids, times, columns)."""
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        body = fh.read()
    if header[:1] != ["t"] or (len(header) - 1) % len(TRACE_FIELDS) != 0:
        raise ParseError(f"{path}: unexpected trace header")
    if not body.strip():
        raise ParseError(f"{path}: trace has no samples")
    try:
        data = np.loadtxt(io.StringIO(body), delimiter=",", ndmin=2)
    except ValueError as exc:
        raise ParseError(f"{path}: malformed trace ({exc})") from None
    n_follow = (len(header) - 1) // len(TRACE_FIELDS)
    followers = []
    for c in range(n_follow):
        names = header[1 + 4 * c : 1 + 4 * (c + 1)]
        suffixes = set()
        for name, expect in zip(names, TRACE_FIELDS):
            prefix = expect + "_"
            if not name.startswith(prefix):
                raise ParseError(f"{path}: unexpected column {name!r}")
            suffixes.add(name[len(prefix) :])
        if len(suffixes) != 1:
            raise ParseError(f"{path}: inconsistent follower columns {names}")
        followers.append(int(suffixes.pop()))
    if data.shape[0] == 0 or data.shape[1] != len(header):
        raise ParseError(f"{path}: trace data does not match header")
    ts = data[:, 0]
    columns = {
        name: data[:, 1 + k :: len(TRACE_FIELDS)][:, :n_follow]
        for k, name in enumerate(TRACE_FIELDS)
    }
    return followers, ts, columns


def report_from_trace(path: str) -> dict:
    """Summary of an existing trace file, same shape as run()'s tail section."""
    followers, ts, columns = read_trace(path)
    summary = {"followers": followers, "samples": int(len(ts))}
    summary.update(_summarize(followers, ts, columns))
    return summary


# -- bundled network ------------------------------------------------------

CUBE_NEIGHBORS: dict[int, list[int]] = {
    2: [0, 1],
    3: [0, 1, 2],
    4: [0, 1, 2],
    5: [2, 3, 4],
    6: [3, 5],
    7: [4, 5],
}
_CUBE_VERTEX = [0, 1, 7, 5, 3, 6, 4, 2]
_CUBE_SPINS = {2: [0.15, 0.0, 0.0], 3: [0.0, 0.15, 0.0], 4: [0.0, 0.0, 0.15]}


def generate_cube_scenario(
    side: float = 5.0,
    seed: int = 1,
    noise_theta0: float = 0.0,
    noise_freq: float = 5.0,
    duration: float = 60.0,
    dt: float = 1e-3,
    stride: int = 50,
) -> Scenario:
    """Eight agents on cube vertices: two leaders, six cascaded followers.

    The vertex assignment keeps every three-neighbor follower's directions
    well off a common plane.  Three followers spin at a constant body rate,
    one about each axis.  Edge gains come from design_gains with per-agent
    seeds derived from ``seed``, so the document is fully reproducible.
    """
    verts = np.array(
        [[(k >> 0) & 1, (k >> 1) & 1, (k >> 2) & 1] for k in range(8)], dtype=float
    )
    positions = side * verts[_CUBE_VERTEX]
    omega = np.zeros((8, 3))
    for i, w in _CUBE_SPINS.items():
        omega[i] = w
    seeds = Seeds(init=seed, noise_axes=seed + 1, gain_design=seed + 2)
    topo = NetworkTopology(
        n_agents=8,
        leaders=[0, 1],
        neighbors={i: list(ns) for i, ns in CUBE_NEIGHBORS.items()},
        edge_gains={(i, j): 1.0 for i, ns in CUBE_NEIGHBORS.items() for j in ns},
        position_gains={(i, j): 1.0 for i, ns in CUBE_NEIGHBORS.items() for j in ns},
    )
    truth = GroundTruth(
        positions=positions,
        rotations=np.broadcast_to(np.eye(3), (8, 3, 3)),
        omega_body=omega,
    )
    for i in topo.followers:
        design_gains(i, topo, truth, seed=seeds.gain_design + i).apply(topo)
    return Scenario(
        topology=topo,
        positions=positions,
        rotations=[None] * 8,
        omega_body=omega,
        k_omega=K_OMEGA_DEFAULT,
        noise=NoiseSettings(
            enabled=bool(noise_theta0 > 0.0),
            theta0=float(noise_theta0),
            freq=float(noise_freq),
        ),
        integrator=IntegratorSettings(dt=dt),
        seeds=seeds,
        run=RunSettings(duration=duration, stride=stride),
    )
