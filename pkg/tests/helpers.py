"""Shared fixtures-in-functions for the test suite."""

import numpy as np

from locdeploy import Configuration, NoiseModel, RangingGraph
from locdeploy.verification import random_instance

UNIT_ANCHORS = NoiseModel("additive", 1.0)


def single_mobile_perpendicular():
    """One mobile at the origin with unit anchors on both axes: F = I."""
    config = Configuration([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], num_mobile=1)
    graph = RangingGraph(3, [(0, 1), (0, 2)])
    return config, graph, NoiseModel("additive", 1.0)


def single_mobile_collinear():
    """One mobile with two collinear anchors: F singular."""
    config = Configuration([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]], num_mobile=1)
    graph = RangingGraph(3, [(0, 1), (0, 2)])
    return config, graph, NoiseModel("additive", 1.0)


def well_conditioned_instances(count, seed=0, num_nodes=None, kind=None):
    """Random instances whose mobile-robot FIM is comfortably invertible."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        n = num_nodes if num_nodes is not None else int(rng.integers(4, 13))
        out.append(random_instance(rng, n, kind=kind, min_eig_ratio=1e-3))
    return out


def generic_instances(count, seed=0, low=4, high=13):
    """Random instances with no conditioning requirement (extended-FIM checks)."""
    rng = np.random.default_rng(seed)
    return [random_instance(rng, int(rng.integers(low, high))) for _ in range(count)]
