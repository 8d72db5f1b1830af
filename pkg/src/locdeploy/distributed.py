"""Round-based simulation of the neighbor-local gradient computation.

Solving F xi = c is done by discretizing the flow d(xi)/dt = -k (F xi - c)
with explicit Euler steps.  Because F has the sparsity of the ranging graph,
each mobile agent can update its own two rows of xi from its own information
blocks, its rows of c, and the xi blocks last received from its mobile
neighbors.  The harness delivers messages only at round boundaries and keeps
the global residual check for itself; agents never see global state.
"""

from __future__ import annotations

import warnings
from collections import deque
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import SolverDivergenceError, SolverStalledError
from .fim import assemble_fim, assemble_fim_derivative
from .network import Configuration, NoiseModel, RangingGraph


@dataclass(frozen=True)
class SolverParams:
    """Tuning of the discretized flow.

    ``gain_k`` is the flow gain; ``step_eta`` the Euler step (None selects
    eta * k = 1 / (block Gershgorin bound), which every agent can compute
    from local information up to a max-consensus).  ``local_stop_tol``
    optionally lets the run end when every agent saw update norms below the
    tolerance for ``local_stop_window`` consecutive rounds.
    """

    gain_k: float = 1.0
    step_eta: float | None = None
    max_rounds: int = 200_000
    residual_tol: float = 1e-8
    local_stop_tol: float | None = None
    local_stop_window: int = 10

    def __post_init__(self):
        if self.gain_k <= 0:
            raise ValueError("gain_k must be positive")
        if self.step_eta is not None and self.step_eta <= 0:
            raise ValueError("step_eta must be positive")
        if self.max_rounds < 1:
            raise ValueError("max_rounds must be at least 1")
        if self.residual_tol <= 0:
            raise ValueError("residual_tol must be positive")


@dataclass(frozen=True, eq=False)
class RoundMessage:
    """One xi block sent across a ranging link during a round."""

    round: int
    sender: int
    receiver: int
    payload: np.ndarray


class AgentState:
    """Per-agent solver state: its xi rows plus strictly local knowledge.

    The agent holds its own diagonal information block, the off-diagonal
    blocks toward its mobile neighbors (both computable from relative
    positions), and its rows of the right-hand side.  Neighbor xi blocks
    arrive only through ``receive``.
    """

    def __init__(self, agent_id: int, own_block, edge_blocks, c_block, width: int,
                 history: int = 10):
        self.agent_id = agent_id
        self.own_block = np.asarray(own_block, dtype=float)
        self.edge_blocks = {j: np.asarray(b, dtype=float) for j, b in edge_blocks.items()}
        self.c_block = np.asarray(c_block, dtype=float)
        self.xi_block = np.zeros((2, width))
        self.neighbor_blocks = {j: np.zeros((2, width)) for j in self.edge_blocks}
        self.update_norms: deque[float] = deque(maxlen=history)

    def outgoing(self) -> np.ndarray:
        return self.xi_block.copy()

    def receive(self, sender: int, payload: np.ndarray) -> None:
        if sender not in self.neighbor_blocks:
            raise ValueError(f"agent {self.agent_id} received from non-neighbor {sender}")
        self.neighbor_blocks[sender] = payload

    def step(self, eta_k: float) -> None:
        local_rows = self.own_block @ self.xi_block - self.c_block
        for j, blk in self.edge_blocks.items():
            local_rows += blk @ self.neighbor_blocks[j]
        update = -eta_k * local_rows
        self.update_norms.append(float(np.linalg.norm(update)))
        self.xi_block = self.xi_block + update

    def gershgorin_bound(self) -> float:
        """Local upper bound on the largest eigenvalue from this block row."""
        bound = float(scipy.linalg.norm(self.own_block, 2))
        for blk in self.edge_blocks.values():
            bound += float(scipy.linalg.norm(blk, 2))
        return bound

    def locally_converged(self, tol: float) -> bool:
        return (
            len(self.update_norms) == self.update_norms.maxlen
            and all(u < tol for u in self.update_norms)
        )


@dataclass
class DistributedRun:
    """Outcome of a solve: final xi, round count, residual trace, transcript."""

    xi: np.ndarray
    rounds_used: int
    final_residual: float
    converged: bool
    stopped_by: str
    residual_history: list[float]
    messages: list[RoundMessage] = field(default_factory=list)


def message_log(run: DistributedRun) -> list[RoundMessage]:
    """Deterministic transcript of a completed run, in send order."""
    return list(run.messages)


def write_transcript(messages, stream) -> None:
    """Dump one line per message: round, sender, receiver, payload entries."""
    for msg in messages:
        entries = ",".join(repr(float(v)) for v in np.ravel(msg.payload))
        stream.write(f"{msg.round},{msg.sender},{msg.receiver},{entries}\n")


def distributed_solve(
    config: Configuration,
    graph: RangingGraph,
    model: NoiseModel,
    c: np.ndarray,
    params: SolverParams | None = None,
    record_messages: bool = True,
    initial_xi: np.ndarray | None = None,
) -> DistributedRun:
    """Iterate synchronous rounds of xi <- xi - eta k (F xi - c) until the
    globally measured residual ||F xi - c||_F falls below tolerance.

    Raises SolverDivergenceError when the residual grows past 10x its initial
    value and SolverStalledError when the round budget runs out above
    tolerance.
    """
    params = params or SolverParams()
    n = config.num_mobile
    c = np.asarray(c, dtype=float)
    if c.ndim != 2 or c.shape[0] != 2 * n:
        raise ValueError(f"right-hand side must have shape (2n, w), got {c.shape}")
    if not np.all(np.isfinite(c)):
        raise ValueError("right-hand side must be finite")
    width = c.shape[1]

    F = assemble_fim(config, graph, model)
    mobile_edges = graph.mobile_edges(n)
    agents = []
    for i in range(n):
        edge_blocks = {j: F.block(i, j) for j in graph.neighbors(i) if j < n}
        agents.append(
            AgentState(
                agent_id=i,
                own_block=F.block(i, i),
                edge_blocks=edge_blocks,
                c_block=c[2 * i : 2 * i + 2],
                width=width,
                history=params.local_stop_window,
            )
        )
    if initial_xi is not None:
        initial_xi = np.asarray(initial_xi, dtype=float)
        for i, agent in enumerate(agents):
            agent.xi_block = initial_xi[2 * i : 2 * i + 2].copy()

    # Harness-side quantities; agents never see these.
    F_dense = F.dense()
    eta_k = params.step_eta * params.gain_k if params.step_eta is not None else (
        1.0 / max(agent.gershgorin_bound() for agent in agents)
    )
    lam_max = float(scipy.linalg.eigvalsh(F_dense)[-1])
    if eta_k * lam_max >= 2.0:
        warnings.warn(
            f"step eta*k={eta_k:.3e} violates the stability bound "
            f"2/lambda_max={2.0 / lam_max:.3e}; the iteration may diverge",
            RuntimeWarning,
        )

    def stacked_xi() -> np.ndarray:
        return np.vstack([agent.xi_block for agent in agents])

    def residual(xi: np.ndarray) -> float:
        return float(np.linalg.norm(F_dense @ xi - c))

    messages: list[RoundMessage] = []
    history = [residual(stacked_xi())]
    if history[0] <= params.residual_tol:
        return DistributedRun(
            xi=stacked_xi(),
            rounds_used=0,
            final_residual=history[0],
            converged=True,
            stopped_by="residual",
            residual_history=history,
            messages=messages,
        )

    for round_index in range(1, params.max_rounds + 1):
        # Exchange first, then update simultaneously from the received blocks.
        for i, j in mobile_edges:
            for sender, receiver in ((i, j), (j, i)):
                payload = agents[sender].outgoing()
                agents[receiver].receive(sender, payload)
                if record_messages:
                    messages.append(
                        RoundMessage(round=round_index, sender=sender,
                                     receiver=receiver, payload=payload)
                    )
        for agent in agents:
            agent.step(eta_k)

        res = residual(stacked_xi())
        history.append(res)
        if res <= params.residual_tol:
            return DistributedRun(
                xi=stacked_xi(),
                rounds_used=round_index,
                final_residual=res,
                converged=True,
                stopped_by="residual",
                residual_history=history,
                messages=messages,
            )
        if not np.isfinite(res) or res > 10.0 * history[0]:
            raise SolverDivergenceError(
                f"residual grew from {history[0]:.3e} to {res:.3e} "
                f"after {round_index} rounds (unstable step?)"
            )
        if params.local_stop_tol is not None and all(
            agent.locally_converged(params.local_stop_tol) for agent in agents
        ):
            return DistributedRun(
                xi=stacked_xi(),
                rounds_used=round_index,
                final_residual=res,
                converged=False,
                stopped_by="local",
                residual_history=history,
                messages=messages,
            )

    raise SolverStalledError(
        f"residual {history[-1]:.3e} still above tolerance {params.residual_tol:.3e} "
        f"after {params.max_rounds} rounds"
    )


def _column_block(deriv, column: int, n: int) -> np.ndarray:
    """Column block ``column`` of a block-sparse derivative matrix, as 2n x 2."""
    out = np.zeros((2 * n, 2))
    for (r, c), blk in deriv.blocks.items():
        if c == column:
            out[2 * r : 2 * r + 2] = blk
    return out


def distributed_logdet_gradient(
    config: Configuration,
    graph: RangingGraph,
    model: NoiseModel,
    node: int,
    axis: str,
    params: SolverParams | None = None,
    record_messages: bool = False,
    transcript: list | None = None,
) -> float:
    """One component of the D-criterion gradient via the round-based solver.

    The nonzero column blocks b_k of dF/dnu_i (k = i and mobile neighbors)
    are solved against F in parallel within the same rounds, after which each
    involved agent contributes the trace of its own rows of F^-1 b_k; the
    neighbors ship those 2x2 traces to agent ``node`` in one final round.
    """
    n = config.num_mobile
    deriv = assemble_fim_derivative(config, graph, model, node, axis)
    columns = [node] + [j for j in graph.neighbors(node) if j < n]
    rhs = np.hstack([_column_block(deriv, k, n) for k in columns])

    record = record_messages or transcript is not None
    run = distributed_solve(config, graph, model, rhs, params, record_messages=record)

    gradient = 0.0
    final_round = run.rounds_used + 1
    for t, k in enumerate(columns):
        block = run.xi[2 * k : 2 * k + 2, 2 * t : 2 * t + 2]
        gradient -= float(np.trace(block))
        if k != node:
            run.messages.append(
                RoundMessage(round=final_round, sender=k, receiver=node,
                             payload=block.copy())
            )
    if transcript is not None:
        transcript.extend(run.messages)
    return gradient
