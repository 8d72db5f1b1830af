"""Scenario documents and output bundles.

A scenario is a YAML document with four named sections::

    robots:                     # one entry per robot, unique ids
      - {id: 1, role: anchor, x: 0.0, y: 0.0}
      - {id: 4, role: mobile, x: 3.0, y: 0.0}
    edges:                      # id pairs; dict form marks protected links
      - [1, 4]
      - {pair: [4, 5], constrained: true}
    noise: {kind: additive, sigma: 0.1}
    potential: {loc_kind: D, alpha_conn: 0.0, beta_task: 0.0}
    run: {steps: 150, step_policy: backtracking, gamma0: 0.001, seed: 0}

``targets_x`` (one per mobile robot, in file order) is required exactly when
beta_task > 0, and ``d0``/``dmax`` exactly when alpha_conn > 0.  Internally,
mobile robots are indexed first, in file order, then anchors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import yaml

from . import planner
from .distributed import SolverParams, write_transcript
from .errors import ScenarioFormatError
from .network import NOISE_KINDS, Configuration, NoiseModel, RangingGraph
from .planner import Scenario, StepPolicy, TrajectoryRecord
from .potentials import LOC_KINDS, BarrierSpec, PotentialWeights, TaskSpec

ROLES = ("mobile", "anchor")


@dataclass(frozen=True)
class RobotSpec:
    id: int
    role: str
    x: float
    y: float


@dataclass(frozen=True)
class EdgeSpec:
    a: int
    b: int
    constrained: bool = False


@dataclass(frozen=True)
class NoiseSpec:
    kind: str
    sigma: float


@dataclass(frozen=True)
class PotentialSpec:
    loc_kind: str | None
    alpha_conn: float
    beta_task: float
    targets_x: tuple[float, ...] | None = None
    d0: float | None = None
    dmax: float | None = None


@dataclass(frozen=True)
class RunSpec:
    steps: int
    step_policy: str
    gamma0: float
    shrink: float = 0.5
    armijo: float = 1e-4
    gradient_mode: str = planner.CENTRALIZED
    estimator_noise_std: float = 0.0
    seed: int = 0
    vicinity_radius: float = 0.0
    residual_tol: float = 1e-8


@dataclass(frozen=True)
class ScenarioSpec:
    robots: tuple[RobotSpec, ...]
    edges: tuple[EdgeSpec, ...]
    noise: NoiseSpec
    potential: PotentialSpec
    run: RunSpec


def _fail(path: str, message: str):
    raise ScenarioFormatError(f"{path}: {message}")


def _require(mapping, key, path, kind=None):
    if not isinstance(mapping, dict) or key not in mapping:
        _fail(f"{path}.{key}", "missing required field")
    value = mapping[key]
    if kind is not None and not isinstance(value, kind):
        _fail(f"{path}.{key}", f"expected {getattr(kind, '__name__', kind)}, got {type(value).__name__}")
    return value


def _finite(value, path) -> float:
    try:
        out = float(value)
    except (TypeError, ValueError):
        _fail(path, f"expected a number, got {value!r}")
    if not math.isfinite(out):
        _fail(path, "value must be finite")
    return out


def _check_extra_keys(mapping, allowed, path):
    extra = set(mapping) - set(allowed)
    if extra:
        _fail(path, f"unknown fields: {sorted(extra)}")


def parse_scenario(text: str) -> ScenarioSpec:
    """Parse and validate a scenario document."""
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as err:
        mark = getattr(err, "problem_mark", None)
        where = f" at line {mark.line + 1}" if mark is not None else ""
        raise ScenarioFormatError(f"invalid YAML{where}: {err}") from err
    if not isinstance(doc, dict):
        raise ScenarioFormatError("scenario document must be a mapping with named sections")
    _check_extra_keys(doc, ("robots", "edges", "noise", "potential", "run"), "scenario")

    robots = _parse_robots(_require(doc, "robots", "scenario", list))
    ids = {r.id for r in robots}
    edges = _parse_edges(_require(doc, "edges", "scenario", list), ids)
    noise = _parse_noise(_require(doc, "noise", "scenario", dict))
    num_mobile = sum(1 for r in robots if r.role == "mobile")
    potential = _parse_potential(_require(doc, "potential", "scenario", dict), num_mobile)
    run = _parse_run(_require(doc, "run", "scenario", dict))

    if num_mobile == 0:
        _fail("scenario.robots", "at least one mobile robot is required")
    if run.gradient_mode == planner.DISTRIBUTED and potential.loc_kind != "D":
        _fail("scenario.run.gradient_mode", "distributed gradients require loc_kind: D")
    return ScenarioSpec(robots=robots, edges=edges, noise=noise, potential=potential, run=run)


def _parse_robots(items) -> tuple[RobotSpec, ...]:
    robots = []
    seen = set()
    for idx, item in enumerate(items):
        path = f"robots[{idx}]"
        if not isinstance(item, dict):
            _fail(path, "each robot must be a mapping")
        _check_extra_keys(item, ("id", "role", "x", "y"), path)
        rid = _require(item, "id", path, int)
        role = _require(item, "role", path, str)
        if role not in ROLES:
            _fail(f"{path}.role", f"must be one of {ROLES}, got {role!r}")
        if rid in seen:
            _fail(f"{path}.id", f"duplicate robot id {rid}")
        seen.add(rid)
        robots.append(
            RobotSpec(id=rid, role=role,
                      x=_finite(_require(item, "x", path), f"{path}.x"),
                      y=_finite(_require(item, "y", path), f"{path}.y"))
        )
    return tuple(robots)


def _parse_edges(items, ids) -> tuple[EdgeSpec, ...]:
    edges = []
    seen = set()
    for idx, item in enumerate(items):
        path = f"edges[{idx}]"
        constrained = False
        if isinstance(item, dict):
            _check_extra_keys(item, ("pair", "constrained"), path)
            pair = _require(item, "pair", path, list)
            constrained = bool(item.get("constrained", False))
        elif isinstance(item, list):
            pair = item
        else:
            _fail(path, "each edge must be an id pair or a {pair, constrained} mapping")
        if len(pair) != 2 or not all(isinstance(v, int) for v in pair):
            _fail(path, f"edge endpoints must be two integer ids, got {pair!r}")
        a, b = pair
        if a == b:
            _fail(path, f"self-loop at id {a}")
        for endpoint in (a, b):
            if endpoint not in ids:
                _fail(path, f"unknown robot id {endpoint}")
        key = (min(a, b), max(a, b))
        if key in seen:
            _fail(path, f"duplicate edge {key}")
        seen.add(key)
        edges.append(EdgeSpec(a=key[0], b=key[1], constrained=constrained))
    return tuple(edges)


def _parse_noise(section) -> NoiseSpec:
    _check_extra_keys(section, ("kind", "sigma"), "noise")
    kind = _require(section, "kind", "noise", str)
    if kind not in NOISE_KINDS:
        _fail("noise.kind", f"must be one of {NOISE_KINDS}, got {kind!r}")
    sigma = _finite(_require(section, "sigma", "noise"), "noise.sigma")
    if sigma <= 0:
        _fail("noise.sigma", "must be positive")
    return NoiseSpec(kind=kind, sigma=sigma)


def _parse_potential(section, num_mobile: int) -> PotentialSpec:
    _check_extra_keys(section, ("loc_kind", "alpha_conn", "beta_task", "targets_x", "d0", "dmax"),
                      "potential")
    loc_kind = section.get("loc_kind")
    if isinstance(loc_kind, str) and loc_kind.lower() == "none":
        loc_kind = None
    if loc_kind is not None and loc_kind not in LOC_KINDS:
        _fail("potential.loc_kind", f"must be one of {LOC_KINDS} or none, got {loc_kind!r}")
    alpha_conn = _finite(_require(section, "alpha_conn", "potential"), "potential.alpha_conn")
    beta_task = _finite(_require(section, "beta_task", "potential"), "potential.beta_task")
    if alpha_conn < 0 or beta_task < 0:
        _fail("potential", "alpha_conn and beta_task must be nonnegative")

    targets = section.get("targets_x")
    if beta_task > 0:
        if targets is None:
            _fail("potential.targets_x", "required when beta_task > 0")
        if not isinstance(targets, list) or len(targets) != num_mobile:
            _fail("potential.targets_x", f"must list one target per mobile robot ({num_mobile})")
        targets = tuple(_finite(v, f"potential.targets_x[{i}]") for i, v in enumerate(targets))
    elif targets is not None:
        _fail("potential.targets_x", "present but beta_task is 0")

    d0 = section.get("d0")
    dmax = section.get("dmax")
    if alpha_conn > 0:
        if d0 is None or dmax is None:
            _fail("potential", "d0 and dmax are required when alpha_conn > 0")
        d0 = _finite(d0, "potential.d0")
        dmax = _finite(dmax, "potential.dmax")
        if not 0 < d0 < dmax:
            _fail("potential", f"need 0 < d0 < dmax, got d0={d0}, dmax={dmax}")
    elif d0 is not None or dmax is not None:
        _fail("potential", "d0/dmax present but alpha_conn is 0")

    return PotentialSpec(loc_kind=loc_kind, alpha_conn=alpha_conn, beta_task=beta_task,
                         targets_x=targets, d0=d0, dmax=dmax)


def _parse_run(section) -> RunSpec:
    allowed = ("steps", "step_policy", "gamma0", "shrink", "armijo", "gradient_mode",
               "estimator_noise_std", "seed", "vicinity_radius", "residual_tol")
    _check_extra_keys(section, allowed, "run")
    steps = _require(section, "steps", "run", int)
    if isinstance(steps, bool) or steps < 0:
        _fail("run.steps", "must be a nonnegative integer")
    policy = _require(section, "step_policy", "run", str)
    if policy not in planner.STEP_POLICIES:
        _fail("run.step_policy", f"must be one of {planner.STEP_POLICIES}, got {policy!r}")
    gamma0 = _finite(_require(section, "gamma0", "run"), "run.gamma0")
    if gamma0 <= 0:
        _fail("run.gamma0", "must be positive")
    shrink = _finite(section.get("shrink", 0.5), "run.shrink")
    if not 0 < shrink < 1:
        _fail("run.shrink", "must lie in (0, 1)")
    armijo = _finite(section.get("armijo", 1e-4), "run.armijo")
    if armijo <= 0:
        _fail("run.armijo", "must be positive")
    mode = section.get("gradient_mode", planner.CENTRALIZED)
    if mode not in planner.GRADIENT_MODES:
        _fail("run.gradient_mode", f"must be one of {planner.GRADIENT_MODES}, got {mode!r}")
    noise_std = _finite(section.get("estimator_noise_std", 0.0), "run.estimator_noise_std")
    if noise_std < 0:
        _fail("run.estimator_noise_std", "must be nonnegative")
    seed = section.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool):
        _fail("run.seed", "must be an integer")
    vicinity = _finite(section.get("vicinity_radius", 0.0), "run.vicinity_radius")
    if vicinity < 0:
        _fail("run.vicinity_radius", "must be nonnegative")
    residual_tol = _finite(section.get("residual_tol", 1e-8), "run.residual_tol")
    if residual_tol <= 0:
        _fail("run.residual_tol", "must be positive")
    return RunSpec(steps=steps, step_policy=policy, gamma0=gamma0, shrink=shrink,
                   armijo=armijo, gradient_mode=mode, estimator_noise_std=noise_std,
                   seed=seed, vicinity_radius=vicinity, residual_tol=residual_tol)


def load_scenario(path, overrides: dict[str, str] | None = None) -> ScenarioSpec:
    """Read a scenario file, apply dotted-key overrides, and validate."""
    text = Path(path).read_text()
    if not overrides:
        return parse_scenario(text)
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as err:
        raise ScenarioFormatError(f"invalid YAML: {err}") from err
    if not isinstance(doc, dict):
        raise ScenarioFormatError("scenario document must be a mapping with named sections")
    for key, raw in overrides.items():
        parts = key.split(".")
        if len(parts) != 2:
            raise ScenarioFormatError(
                f"override {key!r}: expected a section.field key such as run.steps"
            )
        section, fieldname = parts
        if section not in doc or not isinstance(doc[section], dict):
            raise ScenarioFormatError(f"override {key!r}: no such section {section!r}")
        doc[section][fieldname] = yaml.safe_load(raw)
    return parse_scenario(yaml.safe_dump(doc))


def emit_scenario(spec: ScenarioSpec) -> str:
    """Serialize a scenario; parse(emit(spec)) reproduces spec exactly."""
    doc: dict = {
        "robots": [
            {"id": r.id, "role": r.role, "x": r.x, "y": r.y} for r in spec.robots
        ],
        "edges": [
            {"pair": [e.a, e.b], "constrained": True} if e.constrained else [e.a, e.b]
            for e in spec.edges
        ],
        "noise": {"kind": spec.noise.kind, "sigma": spec.noise.sigma},
    }
    potential: dict = {
        "loc_kind": spec.potential.loc_kind if spec.potential.loc_kind else "none",
        "alpha_conn": spec.potential.alpha_conn,
        "beta_task": spec.potential.beta_task,
    }
    if spec.potential.targets_x is not None:
        potential["targets_x"] = list(spec.potential.targets_x)
    if spec.potential.d0 is not None:
        potential["d0"] = spec.potential.d0
        potential["dmax"] = spec.potential.dmax
    doc["potential"] = potential
    doc["run"] = {
        "steps": spec.run.steps,
        "step_policy": spec.run.step_policy,
        "gamma0": spec.run.gamma0,
        "shrink": spec.run.shrink,
        "armijo": spec.run.armijo,
        "gradient_mode": spec.run.gradient_mode,
        "estimator_noise_std": spec.run.estimator_noise_std,
        "seed": spec.run.seed,
        "vicinity_radius": spec.run.vicinity_radius,
        "residual_tol": spec.run.residual_tol,
    }
    return yaml.safe_dump(doc, sort_keys=False)


def build_scenario(spec: ScenarioSpec, record_messages: bool = False) -> Scenario:
    """Turn a parsed scenario into a runnable one.

    Mobile robots are indexed first in file order, then anchors.  When
    ``vicinity_radius`` is positive, each mobile start is displaced by a
    seeded uniform draw from a disk of that radius.
    """
    mobiles = [r for r in spec.robots if r.role == "mobile"]
    anchors = [r for r in spec.robots if r.role == "anchor"]
    ordered = mobiles + anchors
    index = {r.id: k for k, r in enumerate(ordered)}
    positions = np.array([[r.x, r.y] for r in ordered], dtype=float)

    if spec.run.vicinity_radius > 0:
        rng = np.random.default_rng(spec.run.seed)
        for k in range(len(mobiles)):
            radius = spec.run.vicinity_radius * math.sqrt(rng.random())
            angle = 2.0 * math.pi * rng.random()
            positions[k, 0] += radius * math.cos(angle)
            positions[k, 1] += radius * math.sin(angle)

    graph = RangingGraph(
        num_nodes=len(ordered),
        edges=[(index[e.a], index[e.b]) for e in spec.edges],
        constrained_edges=[(index[e.a], index[e.b]) for e in spec.edges if e.constrained],
    )
    weights = PotentialWeights(
        alpha_conn=spec.potential.alpha_conn,
        beta_task=spec.potential.beta_task,
        loc_kind=spec.potential.loc_kind,
    )
    task = TaskSpec(spec.potential.targets_x) if spec.potential.targets_x is not None else None
    barrier = (
        BarrierSpec(d0=spec.potential.d0, dmax=spec.potential.dmax)
        if spec.potential.d0 is not None
        else None
    )
    return Scenario(
        initial=Configuration(positions, num_mobile=len(mobiles)),
        graph=graph,
        model=NoiseModel(spec.noise.kind, spec.noise.sigma),
        weights=weights,
        task=task,
        barrier=barrier,
        steps=spec.run.steps,
        step_policy=StepPolicy(kind=spec.run.step_policy, gamma0=spec.run.gamma0,
                               shrink=spec.run.shrink, armijo=spec.run.armijo),
        gradient_mode=spec.run.gradient_mode,
        estimator_noise_std=spec.run.estimator_noise_std,
        seed=spec.run.seed,
        solver=SolverParams(residual_tol=spec.run.residual_tol),
        record_messages=record_messages,
    )


def robot_ids_in_order(spec: ScenarioSpec) -> list[int]:
    """Robot ids in internal index order (mobiles first, then anchors)."""
    mobiles = [r.id for r in spec.robots if r.role == "mobile"]
    anchors = [r.id for r in spec.robots if r.role == "anchor"]
    return mobiles + anchors


def _fmt(value) -> str:
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return "nan"
    return repr(float(value))


def write_output_bundle(
    out_dir,
    record: TrajectoryRecord,
    spec: ScenarioSpec,
    scenario_path: str,
    overrides: dict[str, str] | None = None,
) -> dict[str, Path]:
    """Write trajectory.csv, costs.csv, summary.txt and, when a transcript
    was recorded, messages.log.  Returns the paths written.

    All floats are emitted at full (round-trip) precision.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: dict[str, Path] = {}

    ids = robot_ids_in_order(spec)
    trajectory = out / "trajectory.csv"
    with trajectory.open("w") as fh:
        fh.write("step,id,x,y\n")
        for rec in record.steps:
            for k, rid in enumerate(ids):
                fh.write(f"{rec.step},{rid},{_fmt(rec.positions[k, 0])},{_fmt(rec.positions[k, 1])}\n")
    written["trajectory"] = trajectory

    costs = out / "costs.csv"
    with costs.open("w") as fh:
        fh.write("step,f_total,f_loc,f_conn,f_task,grad_norm,gamma\n")
        for rec in record.steps:
            fh.write(
                f"{rec.step},{_fmt(rec.f_total)},{_fmt(rec.f_loc)},{_fmt(rec.f_conn)},"
                f"{_fmt(rec.f_task)},{_fmt(rec.grad_norm)},{_fmt(rec.gamma)}\n"
            )
    written["costs"] = costs

    summary = out / "summary.txt"
    final = record.steps[-1]
    with summary.open("w") as fh:
        fh.write(f"scenario: {scenario_path}\n")
        for key, value in (overrides or {}).items():
            fh.write(f"override: {key}={value}\n")
        fh.write(f"gradient_mode: {spec.run.gradient_mode}\n")
        fh.write(f"seed: {spec.run.seed}\n")
        fh.write(f"steps_requested: {spec.run.steps}\n")
        fh.write(f"steps_executed: {record.num_steps}\n")
        fh.write(f"termination: {record.termination}\n")
        fh.write(f"final_f_total: {_fmt(final.f_total)}\n")
        fh.write(f"final_f_loc: {_fmt(final.f_loc)}\n")
        fh.write(f"final_f_conn: {_fmt(final.f_conn)}\n")
        fh.write(f"final_f_task: {_fmt(final.f_task)}\n")
        fh.write(f"final_grad_norm: {_fmt(final.grad_norm)}\n")
    written["summary"] = summary

    if record.messages:
        log = out / "messages.log"
        with log.open("w") as fh:
            write_transcript(record.messages, fh)
        written["messages"] = log

    return written
