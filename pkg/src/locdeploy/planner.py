"""Gradient-descent deployment loop over robot configurations.

Each iteration evaluates the potential gradient at the (possibly noisy)
position estimate and moves the mobile robots one step against it; anchors
never move.  The loop records a full trajectory trace: configuration,
per-component potential values, gradient norm and step size at every step.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .distributed import SolverParams, distributed_logdet_gradient
from .errors import DeploymentError, StepSearchError
from .fim import AXES
from .network import Configuration, NoiseModel, RangingGraph
from .potentials import (
    BarrierSpec,
    PotentialEvaluation,
    PotentialWeights,
    TaskSpec,
    evaluate_potential,
)

CENTRALIZED = "centralized"
DISTRIBUTED = "distributed"
GRADIENT_MODES = (CENTRALIZED, DISTRIBUTED)

CONSTANT = "constant"
BACKTRACKING = "backtracking"
STEP_POLICIES = (CONSTANT, BACKTRACKING)

MAX_BACKTRACKS = 50
GRADIENT_FLOOR = 1e-8


@dataclass(frozen=True)
class StepPolicy:
    """Step-size rule: a constant step or Armijo backtracking from gamma0."""

    kind: str = BACKTRACKING
    gamma0: float = 1e-2
    shrink: float = 0.5
    armijo: float = 1e-4

    def __post_init__(self):
        if self.kind not in STEP_POLICIES:
            raise ValueError(f"step policy must be one of {STEP_POLICIES}, got {self.kind!r}")
        if not (np.isfinite(self.gamma0) and self.gamma0 > 0):
            raise ValueError("gamma0 must be positive and finite")
        if not 0 < self.shrink < 1:
            raise ValueError("shrink must lie in (0, 1)")
        if not (np.isfinite(self.armijo) and self.armijo > 0):
            raise ValueError("armijo coefficient must be positive and finite")

    @classmethod
    def default_for(cls, model: NoiseModel) -> "StepPolicy":
        """Backtracking with gamma0 tied to the noise scale."""
        return cls(kind=BACKTRACKING, gamma0=1e-2 * model.sigma**2)


@dataclass
class Scenario:
    """Complete description of one deployment run."""

    initial: Configuration
    graph: RangingGraph
    model: NoiseModel
    weights: PotentialWeights
    task: TaskSpec | None = None
    barrier: BarrierSpec | None = None
    steps: int = 100
    step_policy: StepPolicy | None = None
    gradient_mode: str = CENTRALIZED
    estimator_noise_std: float = 0.0
    seed: int = 0
    solver: SolverParams | None = None
    record_messages: bool = False

    def __post_init__(self):
        if self.step_policy is None:
            self.step_policy = StepPolicy.default_for(self.model)
        if self.graph.num_nodes != self.initial.num_nodes:
            raise ValueError("graph and configuration disagree on the number of nodes")
        if self.gradient_mode not in GRADIENT_MODES:
            raise ValueError(f"gradient_mode must be one of {GRADIENT_MODES}")
        if self.steps < 0:
            raise ValueError("steps must be nonnegative")
        if self.estimator_noise_std < 0:
            raise ValueError("estimator_noise_std must be nonnegative")
        if (self.weights.alpha_conn > 0) != (self.barrier is not None):
            raise ValueError("a barrier spec is required exactly when alpha_conn > 0")
        if (self.weights.beta_task > 0) != (self.task is not None):
            raise ValueError("a task spec is required exactly when beta_task > 0")
        if self.task is not None and len(self.task.target_x) != self.initial.num_mobile:
            raise ValueError("task spec length must equal the number of mobile robots")
        if self.gradient_mode == DISTRIBUTED and self.weights.loc_kind != "D":
            raise ValueError("distributed gradients are available for loc_kind='D' only")


@dataclass
class StepRecord:
    """Snapshot of one planner step."""

    step: int
    positions: np.ndarray
    f_total: float
    f_loc: float | None
    f_conn: float | None
    f_task: float | None
    grad_norm: float
    gamma: float


@dataclass
class TrajectoryRecord:
    """Ordered step records plus the reason the run ended."""

    steps: list[StepRecord] = field(default_factory=list)
    termination: str = ""
    messages: list = field(default_factory=list)

    @property
    def num_steps(self) -> int:
        return len(self.steps) - 1

    def totals(self) -> np.ndarray:
        return np.array([rec.f_total for rec in self.steps])

    def loc_values(self) -> np.ndarray:
        return np.array(
            [np.nan if rec.f_loc is None else rec.f_loc for rec in self.steps]
        )

    def positions_array(self) -> np.ndarray:
        return np.stack([rec.positions for rec in self.steps])


def _contextualize(err: DeploymentError, step: int, stage: str) -> DeploymentError:
    return type(err)(f"{stage} failed at step {step}: {err}")


def _gradient(
    scenario: Scenario, config: Configuration, transcript: list | None = None
) -> np.ndarray:
    """Potential gradient at ``config`` in the scenario's gradient mode."""
    if scenario.gradient_mode == CENTRALIZED:
        return evaluate_potential(
            config,
            scenario.graph,
            scenario.model,
            scenario.weights,
            scenario.task,
            scenario.barrier,
            with_gradient=True,
        ).gradient

    n = config.num_mobile
    params = scenario.solver or SolverParams()
    grad = np.zeros((n, 2))
    for i in range(n):
        for a, axis in enumerate(AXES):
            grad[i, a] = distributed_logdet_gradient(
                config, scenario.graph, scenario.model, i, axis, params,
                transcript=transcript,
            )
    remainder = evaluate_potential(
        config,
        scenario.graph,
        scenario.model,
        PotentialWeights(scenario.weights.alpha_conn, scenario.weights.beta_task, None),
        scenario.task,
        scenario.barrier,
        with_gradient=True,
    )
    return grad + remainder.gradient


def _backtrack(scenario: Scenario, positions, grad, grad_norm, f_current) -> float:
    """Armijo search along -grad; infeasible trial points are shrunk past."""
    policy = scenario.step_policy
    n = scenario.initial.num_mobile
    gamma = policy.gamma0
    for _ in range(MAX_BACKTRACKS):
        trial = positions.copy()
        trial[:n] -= gamma * grad
        try:
            f_trial = evaluate_potential(
                Configuration(trial, n),
                scenario.graph,
                scenario.model,
                scenario.weights,
                scenario.task,
                scenario.barrier,
                with_gradient=False,
            ).total
        except DeploymentError:
            gamma *= policy.shrink
            continue
        if f_trial <= f_current - policy.armijo * gamma * grad_norm**2:
            return gamma
        gamma *= policy.shrink
    raise StepSearchError(
        f"no sufficient decrease within {MAX_BACKTRACKS} backtracking halvings"
    )


def run(scenario: Scenario) -> TrajectoryRecord:
    """Execute the deployment loop and return the recorded trajectory.

    The update is p_i <- p_i - gamma * df/dp_i evaluated at the position
    estimate; with zero estimator noise the run is fully deterministic.
    """
    if scenario.weights.loc_kind == "E":
        raise ValueError(
            "the minimum-eigenvalue criterion has no gradient; it can be probed "
            "but not descended"
        )
    rng = np.random.default_rng(scenario.seed)
    n = scenario.initial.num_mobile
    positions = np.array(scenario.initial.positions)
    record = TrajectoryRecord(termination="budget_exhausted")
    transcript = record.messages if scenario.record_messages else None

    for k in range(scenario.steps + 1):
        config = Configuration(positions, n)
        try:
            values = evaluate_potential(
                config,
                scenario.graph,
                scenario.model,
                scenario.weights,
                scenario.task,
                scenario.barrier,
                with_gradient=False,
            )
        except DeploymentError as err:
            raise _contextualize(err, k, "potential evaluation") from err

        estimate = positions.copy()
        if scenario.estimator_noise_std > 0:
            estimate[:n] += rng.normal(0.0, scenario.estimator_noise_std, size=(n, 2))
        try:
            grad = _gradient(scenario, Configuration(estimate, n), transcript)
        except DeploymentError as err:
            raise _contextualize(err, k, "gradient evaluation") from err
        grad_norm = float(np.linalg.norm(grad))

        record.steps.append(
            StepRecord(
                step=k,
                positions=positions.copy(),
                f_total=values.total,
                f_loc=values.loc,
                f_conn=values.conn,
                f_task=values.task,
                grad_norm=grad_norm,
                gamma=0.0,
            )
        )
        if k == scenario.steps:
            break
        if grad_norm < GRADIENT_FLOOR:
            record.termination = "converged"
            break

        if scenario.step_policy.kind == CONSTANT:
            gamma = scenario.step_policy.gamma0
        else:
            try:
                gamma = _backtrack(scenario, positions, grad, grad_norm, values.total)
            except StepSearchError as err:
                raise _contextualize(err, k, "step search") from err
        record.steps[-1].gamma = gamma
        positions[:n] -= gamma * grad

    return record


def evaluate(scenario: Scenario, config: Configuration | None = None) -> PotentialEvaluation:
    """Single potential evaluation (no stepping): the probe entry point.

    Gradients are included whenever the localizability criterion supports
    them; the minimum-eigenvalue criterion is evaluated value-only.
    """
    target = config if config is not None else scenario.initial
    return evaluate_potential(
        target,
        scenario.graph,
        scenario.model,
        scenario.weights,
        scenario.task,
        scenario.barrier,
        with_gradient=scenario.weights.loc_kind != "E",
    )
