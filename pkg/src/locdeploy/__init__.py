"""Localizability-aware deployment of range-measuring robot networks.

The package builds the Fisher information matrix of a planar ranging
network, exposes the classical design-criterion potentials and their
analytic gradients, simulates a neighbor-local computation of the
log-determinant gradient, and drives a gradient-descent deployment loop
that keeps the network in well-localizable shapes.
"""

from .distributed import (
    AgentState,
    DistributedRun,
    RoundMessage,
    SolverParams,
    distributed_logdet_gradient,
    distributed_solve,
    message_log,
)
from .errors import (
    BarrierViolationError,
    CoincidentNodesError,
    DeploymentError,
    ScenarioFormatError,
    SingularInformationError,
    SolverDivergenceError,
    SolverStalledError,
    StepSearchError,
)
from .fim import (
    BlockMatrix,
    assemble_extended_fim,
    assemble_fim,
    assemble_fim_derivative,
    fim_block,
    fim_block_derivative,
)
from .network import ADDITIVE, MULTIPLICATIVE, Configuration, NoiseModel, RangingGraph
from .planner import Scenario, StepPolicy, TrajectoryRecord, evaluate, run
from .potentials import (
    BarrierSpec,
    PotentialWeights,
    TaskSpec,
    evaluate_potential,
    inverse_trace_objective,
    inverse_trace_objective_gradient,
    logdet_objective,
    logdet_objective_gradient,
    min_eigenvalue_objective,
    task_potential,
    task_potential_gradient,
    connectivity_potential,
    connectivity_potential_gradient,
    trace_objective,
    trace_objective_gradient,
)
from .rigidity import (
    OrientedGraph,
    gram_factorization_residual,
    incidence_factorization_residual,
    incidence_matrix,
    reordered_extended_fim,
    rigidity_matrix,
    weight_matrix_q,
)
from .scenario_io import ScenarioSpec, build_scenario, emit_scenario, load_scenario, parse_scenario

__version__ = "0.1.0"

__all__ = [
    "ADDITIVE",
    "MULTIPLICATIVE",
    "AgentState",
    "BarrierSpec",
    "BarrierViolationError",
    "BlockMatrix",
    "CoincidentNodesError",
    "Configuration",
    "DeploymentError",
    "DistributedRun",
    "NoiseModel",
    "OrientedGraph",
    "PotentialWeights",
    "RangingGraph",
    "RoundMessage",
    "Scenario",
    "ScenarioFormatError",
    "ScenarioSpec",
    "SingularInformationError",
    "SolverDivergenceError",
    "SolverParams",
    "SolverStalledError",
    "StepPolicy",
    "StepSearchError",
    "TaskSpec",
    "TrajectoryRecord",
    "assemble_extended_fim",
    "assemble_fim",
    "assemble_fim_derivative",
    "build_scenario",
    "connectivity_potential",
    "connectivity_potential_gradient",
    "distributed_logdet_gradient",
    "distributed_solve",
    "emit_scenario",
    "evaluate",
    "evaluate_potential",
    "fim_block",
    "fim_block_derivative",
    "gram_factorization_residual",
    "incidence_factorization_residual",
    "incidence_matrix",
    "inverse_trace_objective",
    "inverse_trace_objective_gradient",
    "load_scenario",
    "logdet_objective",
    "logdet_objective_gradient",
    "message_log",
    "min_eigenvalue_objective",
    "parse_scenario",
    "reordered_extended_fim",
    "rigidity_matrix",
    "run",
    "task_potential",
    "task_potential_gradient",
    "trace_objective",
    "trace_objective_gradient",
    "weight_matrix_q",
]
