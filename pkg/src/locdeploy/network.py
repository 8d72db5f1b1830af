"""Domain types for a planar range-measurement network.

A network consists of ``num_mobile`` robots with unknown positions followed
by ``num_anchors`` robots whose positions are known exactly.  Pairs of robots
that measure their mutual distance form the undirected ranging graph.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

ADDITIVE = "additive"
MULTIPLICATIVE = "multiplicative"
NOISE_KINDS = (ADDITIVE, MULTIPLICATIVE)


@dataclass(frozen=True)
class NoiseModel:
    """Range measurement noise: additive Gaussian or multiplicative log-normal.

    ``sigma`` is the standard deviation of the error term; it carries length
    units for additive noise and is dimensionless for multiplicative noise.
    """

    kind: str
    sigma: float

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise ValueError(f"noise kind must be one of {NOISE_KINDS}, got {self.kind!r}")
        if not (np.isfinite(self.sigma) and self.sigma > 0):
            raise ValueError(f"sigma must be a positive finite number, got {self.sigma!r}")

    @property
    def alpha(self) -> int:
        """Distance exponent of the information weights: 1 additive, 2 multiplicative."""
        return 1 if self.kind == ADDITIVE else 2


class Configuration:
    """Stacked 2D positions of the mobile robots followed by the anchors.

    Positions are stored as a read-only ``(num_nodes, 2)`` float array; rows
    ``0..num_mobile-1`` are the mobile robots, the remaining rows the anchors.
    """

    def __init__(self, positions, num_mobile: int):
        arr = np.array(positions, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != 2:
            raise ValueError(f"positions must have shape (num_nodes, 2), got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("positions must be finite")
        num_mobile = int(num_mobile)
        if not 1 <= num_mobile <= arr.shape[0]:
            raise ValueError(
                f"num_mobile must be in [1, {arr.shape[0]}], got {num_mobile}"
            )
        arr.setflags(write=False)
        self.positions = arr
        self.num_mobile = num_mobile

    @property
    def num_nodes(self) -> int:
        return self.positions.shape[0]

    @property
    def num_anchors(self) -> int:
        return self.num_nodes - self.num_mobile

    @property
    def mobile_positions(self) -> np.ndarray:
        return self.positions[: self.num_mobile]

    @property
    def anchor_positions(self) -> np.ndarray:
        return self.positions[self.num_mobile :]

    def with_positions(self, positions) -> "Configuration":
        """New configuration with the same mobile/anchor split."""
        return Configuration(positions, self.num_mobile)

    def __repr__(self):
        return (
            f"Configuration(num_mobile={self.num_mobile}, "
            f"num_anchors={self.num_anchors})"
        )


class RangingGraph:
    """Undirected graph of distance-measuring pairs over ``num_nodes`` nodes.

    Edges are stored once as sorted index pairs.  ``constrained_edges`` marks
    the subset of links that must survive deployment (barrier-protected).
    """

    def __init__(self, num_nodes: int, edges, constrained_edges=()):
        self.num_nodes = int(num_nodes)
        self.edges = self._normalize(edges, "edges")
        self.constrained_edges = self._normalize(constrained_edges, "constrained_edges")
        missing = set(self.constrained_edges) - set(self.edges)
        if missing:
            raise ValueError(f"constrained edges not present in the graph: {sorted(missing)}")
        neighbors: dict[int, list[int]] = {i: [] for i in range(self.num_nodes)}
        for i, j in self.edges:
            neighbors[i].append(j)
            neighbors[j].append(i)
        self._neighbors = {i: tuple(sorted(js)) for i, js in neighbors.items()}

    def _normalize(self, pairs, label: str) -> tuple[tuple[int, int], ...]:
        seen = set()
        for pair in pairs:
            i, j = (int(v) for v in pair)
            if i == j:
                raise ValueError(f"{label}: self-loop at node {i}")
            if not (0 <= i < self.num_nodes and 0 <= j < self.num_nodes):
                raise ValueError(f"{label}: endpoint out of range in ({i}, {j})")
            seen.add((min(i, j), max(i, j)))
        return tuple(sorted(seen))

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def neighbors(self, i: int) -> tuple[int, ...]:
        return self._neighbors[i]

    def has_edge(self, i: int, j: int) -> bool:
        return (min(i, j), max(i, j)) in set(self.edges)

    def mobile_edges(self, num_mobile: int) -> tuple[tuple[int, int], ...]:
        """Edges whose endpoints are both mobile robots."""
        return tuple((i, j) for i, j in self.edges if i < num_mobile and j < num_mobile)

    def __repr__(self):
        return f"RangingGraph(num_nodes={self.num_nodes}, num_edges={self.num_edges})"
