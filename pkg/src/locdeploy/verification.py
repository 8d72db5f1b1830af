"""Independent numerical audits of the analytic machinery.

Everything here checks one code path against a different route to the same
quantity: factorization residuals against the directly assembled matrix,
analytic gradients against central finite differences, and the null space
of the regrouped information matrix against the rigid motions it must
annihilate.  The CLI ``verify`` command and the test suite both build on
this module.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DeploymentError
from .fim import assemble_extended_fim, assemble_fim
from .network import ADDITIVE, MULTIPLICATIVE, Configuration, NoiseModel, RangingGraph
from .potentials import (
    BarrierSpec,
    TaskSpec,
    connectivity_potential,
    connectivity_potential_gradient,
    inverse_trace_objective,
    inverse_trace_objective_gradient,
    logdet_objective,
    logdet_objective_gradient,
    task_potential,
    task_potential_gradient,
    trace_objective,
    trace_objective_gradient,
    trace_objective_gradient_via_blocks,
)
from .rigidity import (
    OrientedGraph,
    gram_factorization_residual,
    incidence_factorization_residual,
    reordered_extended_fim,
    rigidity_matrix,
)

FD_STEP = 1e-6

FACTORIZATION_TOL = 1e-10
NULLSPACE_TOL = 1e-10
GRADIENT_REL_TOL = 1e-5
CLOSED_FORM_TOL = 1e-10


def finite_difference_gradient(value_fn, config: Configuration, step: float = FD_STEP) -> np.ndarray:
    """Central-difference gradient of a scalar function of the mobile positions.

    ``value_fn`` receives a Configuration and returns a float; the result has
    shape (num_mobile, 2).
    """
    n = config.num_mobile
    base = np.array(config.positions)
    grad = np.zeros((n, 2))
    for i in range(n):
        for a in range(2):
            plus = base.copy()
            plus[i, a] += step
            minus = base.copy()
            minus[i, a] -= step
            grad[i, a] = (
                value_fn(Configuration(plus, n)) - value_fn(Configuration(minus, n))
            ) / (2.0 * step)
    return grad


def relative_gradient_error(analytic: np.ndarray, reference: np.ndarray) -> float:
    """Max-abs deviation, normalized by the reference scale (floored at 1)."""
    scale = max(float(np.max(np.abs(reference))), 1.0)
    return float(np.max(np.abs(analytic - reference))) / scale


def rigid_motion_vectors(config: Configuration) -> np.ndarray:
    """The two translations and the infinitesimal rotation, in the grouped
    [all x; all y] coordinate layout, as columns."""
    num = config.num_nodes
    p = config.positions
    vectors = np.zeros((2 * num, 3))
    vectors[:num, 0] = 1.0
    vectors[num:, 1] = 1.0
    vectors[:num, 2] = -p[:, 1]
    vectors[num:, 2] = p[:, 0]
    return vectors


def nullspace_residual(config: Configuration, graph: RangingGraph, model: NoiseModel) -> float:
    """Largest entry of F-bar applied to the rigid-motion vectors."""
    fbar = reordered_extended_fim(config, graph, model)
    return float(np.max(np.abs(fbar @ rigid_motion_vectors(config))))


def block_row_sum_residual(config: Configuration, graph: RangingGraph, model: NoiseModel) -> float:
    """Largest entry of the per-block-row sums of the extended matrix."""
    ext = assemble_extended_fim(config, graph, model)
    worst = 0.0
    for i in range(config.num_nodes):
        total = np.zeros((2, 2))
        for j in range(config.num_nodes):
            total += ext.block(i, j)
        worst = max(worst, float(np.max(np.abs(total))))
    return worst


def rank_bound_holds(config: Configuration, graph: RangingGraph, model: NoiseModel) -> bool:
    """rank(F-bar) must not exceed 2(n+m) - 3."""
    fbar = reordered_extended_fim(config, graph, model)
    rank = int(np.linalg.matrix_rank(fbar, tol=1e-8 * max(1.0, float(np.max(np.abs(fbar))))))
    return rank <= 2 * config.num_nodes - 3


def random_instance(
    rng: np.random.Generator,
    num_nodes: int,
    num_anchors: int = 3,
    box: float = 5.0,
    extra_edge_prob: float = 0.5,
    kind: str | None = None,
    min_eig_ratio: float | None = None,
    max_tries: int = 200,
):
    """Seeded random network: positions in a box, a random connected graph,
    and a random noise model.

    With ``min_eig_ratio`` set, configurations are resampled until the
    mobile-robot information matrix satisfies
    lambda_min >= min_eig_ratio * lambda_max (a well-conditioned instance).
    """
    if not 1 <= num_anchors < num_nodes:
        raise ValueError("need at least one anchor and one mobile robot")
    for _ in range(max_tries):
        positions = rng.uniform(0.0, box, size=(num_nodes, 2))
        if np.min(_pairwise_distances(positions)) < 0.3:
            continue
        order = rng.permutation(num_nodes)
        edges = {tuple(sorted((int(order[k - 1]), int(order[k])))) for k in range(1, num_nodes)}
        for i in range(num_nodes):
            for j in range(i + 1, num_nodes):
                if rng.random() < extra_edge_prob:
                    edges.add((i, j))
        chosen_kind = kind or (ADDITIVE if rng.random() < 0.5 else MULTIPLICATIVE)
        model = NoiseModel(chosen_kind, sigma=float(rng.uniform(0.3, 1.2)))
        config = Configuration(positions, num_mobile=num_nodes - num_anchors)
        graph = RangingGraph(num_nodes, edges)
        if min_eig_ratio is not None:
            w = scipy.linalg.eigvalsh(assemble_fim(config, graph, model).dense())
            if w[0] <= 0 or w[0] < min_eig_ratio * w[-1]:
                continue
        return config, graph, model
    raise RuntimeError(f"no acceptable random instance after {max_tries} tries")


def _pairwise_distances(positions: np.ndarray) -> np.ndarray:
    diff = positions[:, None, :] - positions[None, :, :]
    d = np.sqrt(np.sum(diff**2, axis=-1))
    return d[np.triu_indices(len(positions), k=1)]


@dataclass
class CheckResult:
    name: str
    value: float
    tolerance: float
    passed: bool


def verification_report(
    config: Configuration,
    graph: RangingGraph,
    model: NoiseModel,
    task: TaskSpec | None = None,
    barrier: BarrierSpec | None = None,
    weight_corruption: float = 0.0,
) -> list[CheckResult]:
    """Run the full audit battery on one instance.

    ``weight_corruption`` perturbs one rigidity-matrix weight before the
    factorization check; it exists as a negative-control hook and must make
    the report fail when nonzero.
    """
    oriented = OrientedGraph.from_graph(graph)
    results: list[CheckResult] = []

    gram = gram_factorization_residual(config, oriented, model)
    if weight_corruption != 0.0:
        lhs = reordered_extended_fim(config, graph, model)
        r = rigidity_matrix(config, oriented, model)
        r[0, oriented.edge_order[0][0]] += weight_corruption
        gram = float(np.max(np.abs(lhs - r.T @ r)))
    results.append(CheckResult("gram factorization", gram, FACTORIZATION_TOL, gram <= FACTORIZATION_TOL))

    incidence = incidence_factorization_residual(config, oriented, model)
    results.append(
        CheckResult("incidence factorization", incidence, FACTORIZATION_TOL, incidence <= FACTORIZATION_TOL)
    )

    rows = block_row_sum_residual(config, graph, model)
    results.append(CheckResult("extended block-row sums", rows, NULLSPACE_TOL, rows <= NULLSPACE_TOL))

    nullspace = nullspace_residual(config, graph, model)
    results.append(CheckResult("rigid-motion annihilation", nullspace, NULLSPACE_TOL, nullspace <= NULLSPACE_TOL))

    rank_ok = rank_bound_holds(config, graph, model)
    results.append(CheckResult("rank bound 2(n+m)-3", 0.0 if rank_ok else 1.0, 0.5, rank_ok))

    fd_trace = finite_difference_gradient(
        lambda c: trace_objective(assemble_fim(c, graph, model)), config
    )
    closed = trace_objective_gradient(config, graph, model)
    err = relative_gradient_error(closed, fd_trace)
    results.append(CheckResult("trace gradient vs finite differences", err, GRADIENT_REL_TOL, err <= GRADIENT_REL_TOL))

    via_blocks = trace_objective_gradient_via_blocks(config, graph, model)
    closed_vs_blocks = float(np.max(np.abs(closed - via_blocks)))
    results.append(
        CheckResult("trace gradient closed form vs block route", closed_vs_blocks, CLOSED_FORM_TOL,
                    closed_vs_blocks <= CLOSED_FORM_TOL)
    )

    w = scipy.linalg.eigvalsh(assemble_fim(config, graph, model).dense())
    if w[0] > 1e-9 * w[-1] and w[0] > 0:
        fd_logdet = finite_difference_gradient(
            lambda c: logdet_objective(assemble_fim(c, graph, model)), config
        )
        err = relative_gradient_error(logdet_objective_gradient(config, graph, model), fd_logdet)
        results.append(
            CheckResult("logdet gradient vs finite differences", err, GRADIENT_REL_TOL, err <= GRADIENT_REL_TOL)
        )
        fd_invtrace = finite_difference_gradient(
            lambda c: inverse_trace_objective(assemble_fim(c, graph, model)), config
        )
        err = relative_gradient_error(
            inverse_trace_objective_gradient(config, graph, model), fd_invtrace
        )
        results.append(
            CheckResult("inverse-trace gradient vs finite differences", err, GRADIENT_REL_TOL,
                        err <= GRADIENT_REL_TOL)
        )

    if task is not None:
        fd_task = finite_difference_gradient(lambda c: task_potential(c, task), config)
        err = relative_gradient_error(task_potential_gradient(config, task), fd_task)
        results.append(
            CheckResult("task gradient vs finite differences", err, GRADIENT_REL_TOL, err <= GRADIENT_REL_TOL)
        )
    if barrier is not None:
        try:
            fd_conn = finite_difference_gradient(
                lambda c: connectivity_potential(c, graph, barrier), config
            )
            analytic = connectivity_potential_gradient(config, graph, barrier)[: config.num_mobile]
            err = relative_gradient_error(analytic, fd_conn)
            results.append(
                CheckResult("barrier gradient vs finite differences", err, GRADIENT_REL_TOL,
                            err <= GRADIENT_REL_TOL)
            )
        except DeploymentError:
            results.append(CheckResult("barrier gradient vs finite differences", np.inf,
                                       GRADIENT_REL_TOL, False))

    return results
