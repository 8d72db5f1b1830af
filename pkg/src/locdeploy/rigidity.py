"""Weighted rigidity view of the network information matrix.

After regrouping coordinates as [all x; all y], the extended information
matrix factors both as the Gram matrix of a weighted rigidity matrix R and
as an incidence-matrix sandwich (I_2 kron B) Q (I_2 kron B^T).  The residual
checks here provide an independent route to the same matrix and are part of
the verification surface.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CoincidentNodesError
from .fim import MIN_SEPARATION, assemble_extended_fim
from .network import Configuration, NoiseModel, RangingGraph


@dataclass(frozen=True)
class OrientedGraph:
    """A ranging graph with one (tail, head) orientation per edge.

    ``edge_order`` fixes the row ordering of the rigidity and weight
    matrices.  All derived products are orientation-invariant; the canonical
    choice (tail = smaller index, rows sorted) makes outputs reproducible.
    """

    base: RangingGraph
    edge_order: tuple[tuple[int, int], ...]

    def __post_init__(self):
        undirected = {(min(i, j), max(i, j)) for i, j in self.edge_order}
        if len(self.edge_order) != len(undirected):
            raise ValueError("edge_order orients some edge more than once")
        if undirected != set(self.base.edges):
            raise ValueError("edge_order does not match the edges of the base graph")

    @classmethod
    def from_graph(cls, graph: RangingGraph) -> "OrientedGraph":
        return cls(base=graph, edge_order=graph.edges)

    @property
    def num_edges(self) -> int:
        return len(self.edge_order)


def coordinate_permutation(num_nodes: int) -> np.ndarray:
    """Index map sending the grouped order [x_1..x_N, y_1..y_N] to positions
    in the interleaved order [x_1, y_1, x_2, y_2, ...]."""
    perm = np.empty(2 * num_nodes, dtype=int)
    perm[:num_nodes] = 2 * np.arange(num_nodes)
    perm[num_nodes:] = 2 * np.arange(num_nodes) + 1
    return perm


def reordered_extended_fim(
    config: Configuration, graph: RangingGraph, model: NoiseModel
) -> np.ndarray:
    """Extended information matrix in the grouped [all x; all y] layout."""
    dense = assemble_extended_fim(config, graph, model).dense()
    perm = coordinate_permutation(config.num_nodes)
    return dense[np.ix_(perm, perm)]


def _edge_terms(config, oriented, model):
    """Per-edge (dx, dy, weight) with weight = 1 / (sigma d^alpha)."""
    p = config.positions
    out = []
    for tail, head in oriented.edge_order:
        delta = p[tail] - p[head]
        d2 = float(delta @ delta)
        if d2 < MIN_SEPARATION**2:
            raise CoincidentNodesError(
                f"edge ({tail}, {head}) endpoints are nearly coincident"
            )
        weight = 1.0 / (model.sigma * d2 ** (model.alpha / 2.0))
        out.append((delta[0], delta[1], weight))
    return out


def rigidity_matrix(
    config: Configuration, oriented: OrientedGraph, model: NoiseModel
) -> np.ndarray:
    """Weighted rigidity matrix, one row per edge, |E| x 2(n+m).

    The row for edge (i, j) holds +/- w dx in the x-columns of i and j and
    +/- w dy in the y-columns, with w = 1 / (sigma d^alpha).
    """
    num_nodes = config.num_nodes
    rows = np.zeros((oriented.num_edges, 2 * num_nodes))
    for e, ((tail, head), (dx, dy, w)) in enumerate(
        zip(oriented.edge_order, _edge_terms(config, oriented, model))
    ):
        rows[e, tail] = w * dx
        rows[e, head] = -w * dx
        rows[e, num_nodes + tail] = w * dy
        rows[e, num_nodes + head] = -w * dy
    return rows


def incidence_matrix(oriented: OrientedGraph) -> np.ndarray:
    """Signed node-by-edge incidence matrix: +1 at the tail, -1 at the head."""
    out = np.zeros((oriented.base.num_nodes, oriented.num_edges))
    for e, (tail, head) in enumerate(oriented.edge_order):
        out[tail, e] = 1.0
        out[head, e] = -1.0
    return out


def weight_matrix_q(
    config: Configuration, oriented: OrientedGraph, model: NoiseModel
) -> np.ndarray:
    """Edge weight matrix Q, 2|E| x 2|E| with diagonal |E| x |E| blocks.

    Block (mu, nu) holds (mu_i - mu_j)(nu_i - nu_j) / (sigma^2 d^(2 alpha))
    per edge, for mu, nu in {x, y}; the two off-diagonal blocks coincide.
    """
    num_edges = oriented.num_edges
    out = np.zeros((2 * num_edges, 2 * num_edges))
    for e, (dx, dy, w) in enumerate(_edge_terms(config, oriented, model)):
        w2 = w * w
        out[e, e] = w2 * dx * dx
        out[e, num_edges + e] = w2 * dx * dy
        out[num_edges + e, e] = w2 * dx * dy
        out[num_edges + e, num_edges + e] = w2 * dy * dy
    return out


def gram_factorization_residual(
    config: Configuration, oriented: OrientedGraph, model: NoiseModel
) -> float:
    """Max-abs difference between the reordered extended information matrix
    and R^T R."""
    lhs = reordered_extended_fim(config, oriented.base, model)
    r = rigidity_matrix(config, oriented, model)
    return float(np.max(np.abs(lhs - r.T @ r)))


def incidence_factorization_residual(
    config: Configuration, oriented: OrientedGraph, model: NoiseModel
) -> float:
    """Max-abs difference between the reordered extended information matrix
    and (I_2 kron B) Q (I_2 kron B^T)."""
    lhs = reordered_extended_fim(config, oriented.base, model)
    b = incidence_matrix(oriented)
    q = weight_matrix_q(config, oriented, model)
    ib = np.kron(np.eye(2), b)
    return float(np.max(np.abs(lhs - ib @ q @ ib.T)))
