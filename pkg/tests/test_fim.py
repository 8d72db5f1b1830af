import numpy as np
import pytest

from locdeploy import (
    CoincidentNodesError,
    Configuration,
    NoiseModel,
    RangingGraph,
    assemble_extended_fim,
    assemble_fim,
    assemble_fim_derivative,
    fim_block,
    fim_block_derivative,
)
from helpers import generic_instances, single_mobile_collinear, single_mobile_perpendicular


def test_block_axis_aligned_additive():
    m = NoiseModel("additive", 1.0)
    block = fim_block((0.0, 0.0), (1.0, 0.0), m)
    assert np.allclose(block, [[-1.0, 0.0], [0.0, 0.0]])


def test_block_disconnected_is_zero():
    m = NoiseModel("additive", 1.0)
    assert np.array_equal(fim_block((3.0, -2.0), (7.0, 5.0), m, connected=False),
                          np.zeros((2, 2)))


def test_block_multiplicative():
    m = NoiseModel("multiplicative", 0.5)
    block = fim_block((0.0, 0.0), (0.0, 2.0), m)
    assert np.allclose(block, [[0.0, 0.0], [0.0, -1.0]])


def test_block_coincident_raises():
    m = NoiseModel("additive", 1.0)
    with pytest.raises(CoincidentNodesError):
        fim_block((1.0, 1.0), (1.0, 1.0 + 1e-12), m)


def test_block_negative_semidefinite_rank_one():
    rng = np.random.default_rng(1)
    for kind in ("additive", "multiplicative"):
        m = NoiseModel(kind, float(rng.uniform(0.2, 2.0)))
        for _ in range(50):
            p_i, p_j = rng.normal(size=2), rng.normal(size=2) + 2.0
            block = fim_block(p_i, p_j, m)
            assert np.allclose(block, block.T)
            eigs = np.linalg.eigvalsh(block)
            assert np.all(eigs <= 1e-12)
            assert np.linalg.matrix_rank(block, tol=1e-12) <= 1
            d2 = float(np.sum((np.asarray(p_i) - np.asarray(p_j)) ** 2))
            expected_trace = -d2 / (m.sigma**2 * d2**m.alpha)
            assert np.isclose(np.trace(block), expected_trace)


def test_assemble_perpendicular_anchors_identity():
    config, graph, m = single_mobile_perpendicular()
    assert np.allclose(assemble_fim(config, graph, m).dense(), np.eye(2))


def test_assemble_collinear_singular():
    config, graph, m = single_mobile_collinear()
    F = assemble_fim(config, graph, m).dense()
    assert np.allclose(F, [[2.0, 0.0], [0.0, 0.0]])


def test_assemble_symmetric_psd_random():
    for config, graph, model in generic_instances(25, seed=7):
        F = assemble_fim(config, graph, model).dense()
        assert np.allclose(F, F.T)
        assert np.min(np.linalg.eigvalsh(F)) >= -1e-10


def test_leading_submatrix_of_extended():
    for config, graph, model in generic_instances(10, seed=11):
        n2 = 2 * config.num_mobile
        full = assemble_extended_fim(config, graph, model).dense()
        assert np.allclose(full[:n2, :n2], assemble_fim(config, graph, model).dense())


def test_extended_block_rows_sum_to_zero():
    for config, graph, model in generic_instances(10, seed=3):
        ext = assemble_extended_fim(config, graph, model)
        for i in range(config.num_nodes):
            total = sum(
                (ext.block(i, j) for j in range(config.num_nodes)), np.zeros((2, 2))
            )
            assert np.max(np.abs(total)) < 1e-12 * max(1.0, 1.0 / model.sigma**2)


def test_extended_two_node_example():
    m = NoiseModel("additive", 1.0)
    config = Configuration([[0.0, 0.0], [1.0, 0.0]], num_mobile=1)
    graph = RangingGraph(2, [(0, 1)])
    expected = np.array(
        [[1, 0, -1, 0], [0, 0, 0, 0], [-1, 0, 1, 0], [0, 0, 0, 0]], dtype=float
    )
    assert np.allclose(assemble_extended_fim(config, graph, m).dense(), expected)


def test_extended_annihilates_translations():
    for config, graph, model in generic_instances(10, seed=19):
        full = assemble_extended_fim(config, graph, model).dense()
        tx = np.tile([1.0, 0.0], config.num_nodes)
        ty = np.tile([0.0, 1.0], config.num_nodes)
        assert np.max(np.abs(full @ tx)) < 1e-10
        assert np.max(np.abs(full @ ty)) < 1e-10


def test_translation_invariance_exact():
    # dyadic coordinates and an integer shift keep float arithmetic exact
    m = NoiseModel("additive", 0.5)
    positions = np.array([[0.5, 0.25], [1.5, 0.75], [3.0, 1.25], [2.5, -0.5]])
    config = Configuration(positions, num_mobile=2)
    graph = RangingGraph(4, [(0, 1), (0, 2), (1, 3), (2, 3), (0, 3)])
    shifted = Configuration(positions + np.array([4.0, -2.0]), num_mobile=2)
    assert np.array_equal(
        assemble_fim(config, graph, m).dense(), assemble_fim(shifted, graph, m).dense()
    )


def test_rotation_covariance_of_blocks():
    rng = np.random.default_rng(23)
    for config, graph, model in generic_instances(10, seed=29):
        theta = float(rng.uniform(0, 2 * np.pi))
        rot = np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])
        rotated = config.with_positions(config.positions @ rot.T)
        original = assemble_fim(config, graph, model)
        transformed = assemble_fim(rotated, graph, model)
        scale = max(1.0, 1.0 / model.sigma**2)
        for key, blk in original.blocks.items():
            assert np.max(np.abs(transformed.block(*key) - rot @ blk @ rot.T)) < 1e-12 * scale


def test_derivative_block_trivial_x():
    m = NoiseModel("additive", 1.0)
    assert np.allclose(fim_block_derivative((0, 0), (1, 0), m, "x"), np.zeros((2, 2)))


def test_derivative_block_trivial_y():
    m = NoiseModel("additive", 1.0)
    assert np.allclose(fim_block_derivative((0, 0), (1, 0), m, "y"), [[0, 1], [1, 0]])


def test_derivative_block_matches_finite_differences():
    rng = np.random.default_rng(5)
    step = 1e-6
    for kind in ("additive", "multiplicative"):
        m = NoiseModel(kind, float(rng.uniform(0.3, 1.5)))
        for _ in range(50):
            p_i = rng.normal(size=2)
            p_j = p_i + rng.normal(size=2) * 2.0 + np.array([3.0, 0.0])
            for a, axis in enumerate(("x", "y")):
                plus, minus = p_i.copy(), p_i.copy()
                plus[a] += step
                minus[a] -= step
                fd = (fim_block(plus, p_j, m) - fim_block(minus, p_j, m)) / (2 * step)
                analytic = fim_block_derivative(p_i, p_j, m, axis)
                scale = max(1.0, np.max(np.abs(fd)))
                assert np.max(np.abs(analytic - fd)) / scale < 1e-6


def test_assembled_derivative_sparsity():
    for config, graph, model in generic_instances(8, seed=31):
        n = config.num_mobile
        i = n - 1
        deriv = assemble_fim_derivative(config, graph, model, i, "x")
        mobile_neighbors = {j for j in graph.neighbors(i) if j < n}
        for (r, c) in deriv.blocks:
            assert r == i or c == i or (r == c and r in mobile_neighbors)


def test_assembled_derivative_matches_finite_differences():
    for config, graph, model in generic_instances(8, seed=37):
        n = config.num_mobile
        base = np.array(config.positions)
        for i in (0, n - 1):
            for a, axis in enumerate(("x", "y")):
                plus, minus = base.copy(), base.copy()
                plus[i, a] += 1e-6
                minus[i, a] -= 1e-6
                fd = (
                    assemble_fim(Configuration(plus, n), graph, model).dense()
                    - assemble_fim(Configuration(minus, n), graph, model).dense()
                ) / 2e-6
                analytic = assemble_fim_derivative(config, graph, model, i, axis).dense()
                scale = max(1.0, np.linalg.norm(fd))
                assert np.linalg.norm(analytic - fd) / scale < 1e-5


def test_single_anchor_neighbor_diagonal_derivative_zero():
    m = NoiseModel("additive", 1.0)
    config = Configuration([[0.0, 0.0], [1.0, 0.0]], num_mobile=1)
    graph = RangingGraph(2, [(0, 1)])
    deriv = assemble_fim_derivative(config, graph, m, 0, "x")
    assert np.allclose(deriv.dense(), np.zeros((2, 2)))


def test_derivative_anchor_index_rejected():
    config, graph, m = single_mobile_perpendicular()
    with pytest.raises(IndexError):
        assemble_fim_derivative(config, graph, m, 1, "x")


def test_bundled_near_aligned_start_is_positive_definite():
    from locdeploy.cli import bundled_scenario
    from locdeploy.scenario_io import build_scenario, load_scenario

    scenario = build_scenario(load_scenario(bundled_scenario("dealign")))
    F = assemble_fim(scenario.initial, scenario.graph, scenario.model).dense()
    assert F.shape == (8, 8)
    assert np.min(np.linalg.eigvalsh(F)) > 0.0


def test_assemble_propagates_coincident_error():
    m = NoiseModel("additive", 1.0)
    config = Configuration([[0.0, 0.0], [0.0, 0.0], [1.0, 1.0]], num_mobile=2)
    graph = RangingGraph(3, [(0, 1), (1, 2)])
    with pytest.raises(CoincidentNodesError):
        assemble_fim(config, graph, m)
