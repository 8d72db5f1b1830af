"""Fisher information of a range-measurement network, in 2-by-2 block form.

Each measured link between nodes i and j contributes a rank-one information
block

    F_ij = -(1 / (sigma^2 d_ij^(2 alpha))) * [[dx^2, dx dy], [dx dy, dy^2]],

with dx = x_i - x_j, dy = y_i - y_j and alpha the noise-model exponent.
Diagonal blocks accumulate minus the sum of the incident off-diagonal blocks,
giving the full matrix a weighted-Laplacian structure whose sparsity pattern
mirrors the ranging graph.
"""

from __future__ import annotations

import numpy as np

from .errors import CoincidentNodesError
from .network import Configuration, NoiseModel, RangingGraph

# Below this separation the information weights blow up; treat as degenerate.
MIN_SEPARATION = 1e-9

AXES = ("x", "y")


class BlockMatrix:
    """Symmetric matrix stored as sparse 2x2 blocks keyed by node pair.

    Only nonzero blocks are stored; the sparsity pattern follows the ranging
    graph (plus the diagonal).  ``dense()`` materializes the full array for
    eigendecompositions and direct solves.
    """

    def __init__(self, block_dim: int):
        self.block_dim = int(block_dim)
        self.blocks: dict[tuple[int, int], np.ndarray] = {}

    def set(self, i: int, j: int, block) -> None:
        self.blocks[(i, j)] = np.asarray(block, dtype=float)

    def block(self, i: int, j: int) -> np.ndarray:
        return self.blocks.get((i, j), np.zeros((2, 2)))

    def dense(self) -> np.ndarray:
        out = np.zeros((2 * self.block_dim, 2 * self.block_dim))
        for (i, j), blk in self.blocks.items():
            out[2 * i : 2 * i + 2, 2 * j : 2 * j + 2] = blk
        return out

    def scaled(self, factor: float) -> "BlockMatrix":
        out = BlockMatrix(self.block_dim)
        for key, blk in self.blocks.items():
            out.blocks[key] = factor * blk
        return out

    def __repr__(self):
        return f"BlockMatrix(block_dim={self.block_dim}, nnz_blocks={len(self.blocks)})"


def _link_geometry(p_i, p_j):
    """Return (delta, squared distance) and reject near-coincident pairs."""
    delta = np.asarray(p_i, dtype=float) - np.asarray(p_j, dtype=float)
    d2 = float(delta @ delta)
    if d2 < MIN_SEPARATION**2:
        raise CoincidentNodesError(
            f"connected nodes are separated by less than {MIN_SEPARATION}"
        )
    return delta, d2


def fim_block(p_i, p_j, model: NoiseModel, connected: bool = True) -> np.ndarray:
    """Off-diagonal information block for the link between positions p_i, p_j.

    Returns the zero matrix when the pair is not connected.  The result is
    symmetric, negative semi-definite and has rank at most one.
    """
    if not connected:
        return np.zeros((2, 2))
    delta, d2 = _link_geometry(p_i, p_j)
    weight = 1.0 / (model.sigma**2 * d2**model.alpha)
    return -weight * np.outer(delta, delta)


def assemble_fim(config: Configuration, graph: RangingGraph, model: NoiseModel) -> BlockMatrix:
    """Information matrix over the mobile robots (2n x 2n).

    Diagonal blocks sum contributions from every neighbor, anchors included;
    off-diagonal blocks exist only for mobile-mobile links.
    """
    return _assemble(config, graph, model, config.num_mobile)


def assemble_extended_fim(
    config: Configuration, graph: RangingGraph, model: NoiseModel
) -> BlockMatrix:
    """Information matrix over all nodes (2(n+m) x 2(n+m)).

    Every block-row sums to zero, so the result annihilates rigid
    translations of the whole network.
    """
    return _assemble(config, graph, model, config.num_nodes)


def _assemble(config, graph, model, block_dim: int) -> BlockMatrix:
    if graph.num_nodes != config.num_nodes:
        raise ValueError(
            f"graph has {graph.num_nodes} nodes but configuration has {config.num_nodes}"
        )
    p = config.positions
    out = BlockMatrix(block_dim)
    for i in range(block_dim):
        diag = np.zeros((2, 2))
        for k in graph.neighbors(i):
            diag -= fim_block(p[i], p[k], model)
        out.set(i, i, diag)
    for i, j in graph.edges:
        if i < block_dim and j < block_dim:
            blk = fim_block(p[i], p[j], model)
            out.set(i, j, blk)
            out.set(j, i, blk)
    return out


def fim_block_derivative(p_i, p_j, model: NoiseModel, axis: str) -> np.ndarray:
    """Partial derivative of the off-diagonal block with respect to one
    coordinate of the first endpoint.

    ``axis`` selects d/dx_i or d/dy_i.  The returned 2x2 matrix is symmetric.
    """
    if axis not in AXES:
        raise ValueError(f"axis must be 'x' or 'y', got {axis!r}")
    delta, d2 = _link_geometry(p_i, p_j)
    dx, dy = delta
    alpha = model.alpha
    scale = 2.0 / (model.sigma**2 * d2**alpha)
    if axis == "x":
        a11 = alpha * dx**3 / d2 - dx
        a12 = dy * (alpha * dx**2 / d2 - 0.5)
        a22 = alpha * dx * dy**2 / d2
    else:
        a11 = alpha * dy * dx**2 / d2
        a12 = dx * (alpha * dy**2 / d2 - 0.5)
        a22 = alpha * dy**3 / d2 - dy
    return scale * np.array([[a11, a12], [a12, a22]])


def assemble_fim_derivative(
    config: Configuration,
    graph: RangingGraph,
    model: NoiseModel,
    node: int,
    axis: str,
) -> BlockMatrix:
    """Derivative of the mobile-robot information matrix with respect to one
    coordinate of mobile robot ``node``.

    Nonzero blocks are confined to row/column ``node`` and to the diagonal
    entries of its mobile neighbors:

    * d F_ii / d nu_i = -sum over neighbors k of d F_ik / d nu_i
      (anchors included in the sum),
    * d F_ij / d nu_i = d F_ji / d nu_i for mobile neighbors j,
    * d F_jj / d nu_i = -d F_ji / d nu_i.
    """
    n = config.num_mobile
    if not 0 <= node < n:
        raise IndexError(f"node {node} is not a mobile robot (num_mobile={n})")
    p = config.positions
    out = BlockMatrix(n)
    diag = np.zeros((2, 2))
    for k in graph.neighbors(node):
        g = fim_block_derivative(p[node], p[k], model, axis)
        diag -= g
        if k < n:
            out.set(node, k, g)
            out.set(k, node, g)
            out.set(k, k, -g)
    out.set(node, node, diag)
    return out
