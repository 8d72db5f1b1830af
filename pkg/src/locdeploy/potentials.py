"""Scalar deployment potentials and their analytic gradients.

The localizability term scalarizes the information matrix F through one of
the classical design criteria:

    T: -trace(F)        D: -ln det(F)       A: trace(F^-1)      E: -lambda_min(F)

A quadratic task term pulls each mobile robot toward a target x-coordinate,
and a barrier term diverges as a constrained link approaches its maximum
range.  Gradients are taken with respect to mobile robot positions only;
anchors are fixed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import BarrierViolationError, SingularInformationError
from .fim import AXES, BlockMatrix, assemble_fim, assemble_fim_derivative
from .network import Configuration, NoiseModel, RangingGraph

LOC_KINDS = ("T", "D", "A", "E")

# Relative eigenvalue cutoff below which F is treated as singular.
SINGULARITY_CUTOFF = 1e-12


@dataclass(frozen=True)
class PotentialWeights:
    """Composition of the global potential: loc + alpha_conn * conn + beta_task * task."""

    alpha_conn: float = 0.0
    beta_task: float = 0.0
    loc_kind: str | None = "D"

    def __post_init__(self):
        for name in ("alpha_conn", "beta_task"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value >= 0):
                raise ValueError(f"{name} must be finite and nonnegative, got {value!r}")
        if self.loc_kind is not None and self.loc_kind not in LOC_KINDS:
            raise ValueError(f"loc_kind must be one of {LOC_KINDS} or None, got {self.loc_kind!r}")


@dataclass(frozen=True)
class TaskSpec:
    """Target x-coordinate per mobile robot (drives robots toward a line)."""

    target_x: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "target_x", tuple(float(v) for v in self.target_x))
        if not all(np.isfinite(self.target_x)):
            raise ValueError("target_x entries must be finite")


@dataclass(frozen=True)
class BarrierSpec:
    """Barrier activation distance d0 and hard limit dmax, with 0 < d0 < dmax."""

    d0: float
    dmax: float

    def __post_init__(self):
        if not (0 < self.d0 < self.dmax and np.isfinite(self.dmax)):
            raise ValueError(f"need 0 < d0 < dmax, got d0={self.d0!r}, dmax={self.dmax!r}")


def _dense(F) -> np.ndarray:
    return F.dense() if isinstance(F, BlockMatrix) else np.asarray(F, dtype=float)


def _checked_eigh(F) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a symmetric F, rejecting singular spectra."""
    w, v = scipy.linalg.eigh(_dense(F))
    if w[-1] <= 0 or w[0] <= SINGULARITY_CUTOFF * w[-1]:
        raise SingularInformationError(
            f"information matrix is numerically singular "
            f"(eigenvalue range [{w[0]:.3e}, {w[-1]:.3e}])"
        )
    return w, v


def trace_objective(F) -> float:
    """T-criterion value: minus the trace of F."""
    return -float(np.trace(_dense(F)))


def logdet_objective(F) -> float:
    """D-criterion value: minus the log-determinant of F."""
    w, _ = _checked_eigh(F)
    return -float(np.sum(np.log(w)))


def inverse_trace_objective(F) -> float:
    """A-criterion value: trace of F^-1."""
    w, _ = _checked_eigh(F)
    return float(np.sum(1.0 / w))


def min_eigenvalue_objective(F) -> float:
    """E-criterion value: minus the smallest eigenvalue of F."""
    return -float(scipy.linalg.eigvalsh(_dense(F))[0])


def trace_objective_gradient(
    config: Configuration, graph: RangingGraph, model: NoiseModel
) -> np.ndarray:
    """Closed-form gradient of the T-criterion, per mobile robot.

    Each neighbor k of robot i contributes

        (2 / (sigma^2 d^(2 alpha))) * (alpha (dnu^3 + dnu dmu^2) / d^2 - dnu)

    per coordinate nu; mobile neighbors contribute twice (their own diagonal
    block also moves with robot i) while anchor neighbors contribute once.
    """
    n = config.num_mobile
    p = config.positions
    sigma2 = model.sigma**2
    alpha = model.alpha
    grad = np.zeros((n, 2))
    for i in range(n):
        for k in graph.neighbors(i):
            delta = p[i] - p[k]
            dx, dy = delta
            d2 = float(delta @ delta)
            multiplicity = 2.0 if k < n else 1.0
            scale = 2.0 * multiplicity / (sigma2 * d2**alpha)
            grad[i, 0] += scale * (alpha * (dx**3 + dx * dy**2) / d2 - dx)
            grad[i, 1] += scale * (alpha * (dy**3 + dy * dx**2) / d2 - dy)
    return grad


def trace_objective_gradient_via_blocks(
    config: Configuration, graph: RangingGraph, model: NoiseModel
) -> np.ndarray:
    """T-criterion gradient through the assembled derivative matrices.

    Slower route kept as an independent check of the closed form: the
    component for (i, nu) is minus the trace of dF/dnu_i.
    """
    n = config.num_mobile
    grad = np.zeros((n, 2))
    for i in range(n):
        for a, axis in enumerate(AXES):
            deriv = assemble_fim_derivative(config, graph, model, i, axis)
            total = 0.0
            for (r, c), blk in deriv.blocks.items():
                if r == c:
                    total += blk[0, 0] + blk[1, 1]
            grad[i, a] = -total
    return grad


def _weighted_block_trace(M: np.ndarray, D: BlockMatrix) -> float:
    """trace(M @ D) for symmetric M and block-sparse symmetric D."""
    total = 0.0
    for (r, c), blk in D.blocks.items():
        total += float(np.sum(M[2 * r : 2 * r + 2, 2 * c : 2 * c + 2] * blk))
    return total


def _inverse_power_gradient(
    config: Configuration,
    graph: RangingGraph,
    model: NoiseModel,
    power: int,
) -> np.ndarray:
    """Gradient components -trace(F^-power dF/dnu_i) for power in {1, 2}.

    One factorization of F serves all 2n directional traces; each trace
    touches only the sparse derivative blocks of one robot.
    """
    F = assemble_fim(config, graph, model)
    w, v = _checked_eigh(F)
    inv = (v / w) @ v.T
    M = inv if power == 1 else inv @ inv
    n = config.num_mobile
    grad = np.zeros((n, 2))
    for i in range(n):
        for a, axis in enumerate(AXES):
            deriv = assemble_fim_derivative(config, graph, model, i, axis)
            grad[i, a] = -_weighted_block_trace(M, deriv)
    return grad


def logdet_objective_gradient(
    config: Configuration, graph: RangingGraph, model: NoiseModel
) -> np.ndarray:
    """Gradient of the D-criterion: component (i, nu) is -trace(F^-1 dF/dnu_i)."""
    return _inverse_power_gradient(config, graph, model, power=1)


def inverse_trace_objective_gradient(
    config: Configuration, graph: RangingGraph, model: NoiseModel
) -> np.ndarray:
    """Gradient of the A-criterion: component (i, nu) is -trace(F^-2 dF/dnu_i)."""
    return _inverse_power_gradient(config, graph, model, power=2)


def task_potential(config: Configuration, spec: TaskSpec) -> float:
    """Half the squared x-offsets of the mobile robots from their targets."""
    targets = np.asarray(spec.target_x)
    if targets.shape[0] != config.num_mobile:
        raise ValueError(
            f"task spec has {targets.shape[0]} targets for {config.num_mobile} mobile robots"
        )
    offsets = config.mobile_positions[:, 0] - targets
    return 0.5 * float(offsets @ offsets)


def task_potential_gradient(config: Configuration, spec: TaskSpec) -> np.ndarray:
    """Per-mobile gradient (x_i - target_i, 0) of the task potential."""
    targets = np.asarray(spec.target_x)
    if targets.shape[0] != config.num_mobile:
        raise ValueError(
            f"task spec has {targets.shape[0]} targets for {config.num_mobile} mobile robots"
        )
    grad = np.zeros((config.num_mobile, 2))
    grad[:, 0] = config.mobile_positions[:, 0] - targets
    return grad


def barrier_value(d: float, spec: BarrierSpec) -> float:
    """Barrier g(d): zero below d0, then (1/(dmax-d) - 1/(dmax-d0))^2 up to dmax."""
    if d >= spec.dmax:
        raise BarrierViolationError(
            f"constrained distance {d:.6g} reached the limit dmax={spec.dmax:.6g}"
        )
    if d < spec.d0:
        return 0.0
    return (1.0 / (spec.dmax - d) - 1.0 / (spec.dmax - spec.d0)) ** 2


def barrier_slope(d: float, spec: BarrierSpec) -> float:
    """Derivative g'(d) of the barrier; zero below the activation distance."""
    if d >= spec.dmax:
        raise BarrierViolationError(
            f"constrained distance {d:.6g} reached the limit dmax={spec.dmax:.6g}"
        )
    if d < spec.d0:
        return 0.0
    gap = spec.dmax - d
    return 2.0 * (1.0 / gap - 1.0 / (spec.dmax - spec.d0)) / gap**2


def connectivity_potential(
    config: Configuration, graph: RangingGraph, spec: BarrierSpec
) -> float:
    """Sum of the barrier over the constrained edges."""
    p = config.positions
    total = 0.0
    for i, j in graph.constrained_edges:
        d = float(np.linalg.norm(p[i] - p[j]))
        total += barrier_value(d, spec)
    return total


def connectivity_potential_gradient(
    config: Configuration, graph: RangingGraph, spec: BarrierSpec
) -> np.ndarray:
    """Per-node gradient of the barrier sum; supported only on nodes incident
    to constrained edges."""
    p = config.positions
    grad = np.zeros((config.num_nodes, 2))
    for i, j in graph.constrained_edges:
        delta = p[i] - p[j]
        d = float(np.linalg.norm(delta))
        slope = barrier_slope(d, spec)
        if slope != 0.0:
            direction = delta / d
            grad[i] += slope * direction
            grad[j] -= slope * direction
    return grad


@dataclass
class PotentialEvaluation:
    """Component values of the global potential and its per-mobile gradient."""

    total: float
    loc: float | None
    conn: float | None
    task: float | None
    gradient: np.ndarray | None

    @property
    def gradient_norm(self) -> float | None:
        if self.gradient is None:
            return None
        return float(np.linalg.norm(self.gradient))


_LOC_VALUES = {
    "T": trace_objective,
    "D": logdet_objective,
    "A": inverse_trace_objective,
    "E": min_eigenvalue_objective,
}

_LOC_GRADIENTS = {
    "T": trace_objective_gradient,
    "D": logdet_objective_gradient,
    "A": inverse_trace_objective_gradient,
}


def evaluate_potential(
    config: Configuration,
    graph: RangingGraph,
    model: NoiseModel,
    weights: PotentialWeights,
    task: TaskSpec | None = None,
    barrier: BarrierSpec | None = None,
    with_gradient: bool = True,
) -> PotentialEvaluation:
    """Evaluate the weighted potential and, optionally, its gradient.

    The minimum-eigenvalue criterion is value-only; requesting a gradient
    with loc_kind="E" raises ValueError.
    """
    kind = weights.loc_kind
    if with_gradient and kind == "E":
        raise ValueError(
            "the minimum-eigenvalue criterion has no gradient; evaluate value-only"
        )
    if weights.alpha_conn > 0 and barrier is None:
        raise ValueError("alpha_conn > 0 requires a barrier spec")
    if weights.beta_task > 0 and task is None:
        raise ValueError("beta_task > 0 requires a task spec")

    n = config.num_mobile
    loc_value = None
    if kind is not None:
        loc_value = _LOC_VALUES[kind](assemble_fim(config, graph, model))
    conn_value = None
    if barrier is not None:
        conn_value = connectivity_potential(config, graph, barrier)
    task_value = None
    if task is not None:
        task_value = task_potential(config, task)

    total = 0.0
    if loc_value is not None:
        total += loc_value
    if conn_value is not None:
        total += weights.alpha_conn * conn_value
    if task_value is not None:
        total += weights.beta_task * task_value

    gradient = None
    if with_gradient:
        gradient = np.zeros((n, 2))
        if kind is not None:
            gradient += _LOC_GRADIENTS[kind](config, graph, model)
        if barrier is not None and weights.alpha_conn > 0:
            gradient += weights.alpha_conn * connectivity_potential_gradient(
                config, graph, barrier
            )[:n]
        if task is not None and weights.beta_task > 0:
            gradient += weights.beta_task * task_potential_gradient(config, task)

    return PotentialEvaluation(
        total=total, loc=loc_value, conn=conn_value, task=task_value, gradient=gradient
    )
