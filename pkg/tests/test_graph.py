import numpy as np
import pytest

from ducomp import (Topology, TopologyError, WeightMatrixError, build_ring,
                    build_weight_matrix, validate_weights)
from ducomp.graph import weights_to_csv

from conftest import random_connected_topology


def test_ring_smallest_cycle_is_one_edge():
    t = build_ring(2)
    assert t.edges == frozenset({(0, 1)})


def test_ring_five():
    t = build_ring(5)
    assert t.edges == frozenset({(0, 1), (1, 2), (2, 3), (3, 4), (0, 4)})
    assert t.neighbors(0) == [1, 4]


def test_ring_three_is_triangle():
    t = build_ring(3)
    assert t.edges == frozenset({(0, 1), (1, 2), (0, 2)})


def test_ring_rejects_single_agent():
    with pytest.raises(TopologyError):
        build_ring(1)


def test_topology_rejects_self_loop():
    with pytest.raises(TopologyError):
        Topology(m=3, edges=frozenset({(0, 0), (0, 1), (1, 2)}))


def test_topology_rejects_disconnected():
    with pytest.raises(TopologyError):
        Topology(m=4, edges=frozenset({(0, 1), (2, 3)}))


def test_lazy_metropolis_two_agents_exact():
    W = build_weight_matrix(build_ring(2))
    assert np.array_equal(W.entries, np.array([[0.75, 0.25], [0.25, 0.75]]))
    assert W.eta == pytest.approx(0.5, abs=1e-12)
    assert W.lambda_min == pytest.approx(0.5, abs=1e-12)


def test_uniform_scheme_rejected_for_two_agents():
    # averaging matrix on K2 has eigenvalues {1, 0}: not positive definite
    with pytest.raises(WeightMatrixError):
        build_weight_matrix(build_ring(2), scheme="uniform")


def test_uniform_scheme_requires_complete_graph():
    with pytest.raises(WeightMatrixError):
        build_weight_matrix(build_ring(5), scheme="uniform")


def test_unknown_scheme():
    with pytest.raises(WeightMatrixError):
        build_weight_matrix(build_ring(3), scheme="nope")


def test_ring5_lazy_metropolis_diagnostics(W5):
    assert np.abs(W5.entries.sum(axis=1) - 1.0).max() < 1e-12
    assert W5.lambda_min > 0
    assert W5.eta < 1
    # hand values: diagonal (1 + 1/3)/2, neighbors 1/6
    assert W5.entries[0, 0] == pytest.approx(2.0 / 3.0, abs=1e-15)
    assert W5.entries[0, 1] == pytest.approx(1.0 / 6.0, abs=1e-15)


def test_validate_identity_connectivity_fails():
    report = validate_weights(np.eye(3))
    assert report.clause("stochasticity").passed
    assert report.clause("positive_definiteness").passed
    assert not report.clause("connectivity").passed
    assert report.eta == pytest.approx(1.0, abs=1e-12)


def test_validate_two_agent_lazy_metropolis():
    report = validate_weights(np.array([[0.75, 0.25], [0.25, 0.75]]))
    assert report.all_passed
    assert report.eta == pytest.approx(0.5, abs=1e-12)


def test_validate_asymmetric_fails_symmetry():
    report = validate_weights(np.array([[1.0, 0.0], [0.5, 0.5]]))
    assert not report.clause("symmetry").passed


def test_validate_rejects_nonsquare():
    with pytest.raises(WeightMatrixError):
        validate_weights(np.ones((2, 3)))


def test_random_topologies_invariants():
    # 100 random connected graphs, m in [2, 20]
    rng = np.random.default_rng(1234)
    for _ in range(100):
        m = int(rng.integers(2, 21))
        topo = random_connected_topology(rng, m)
        W = build_weight_matrix(topo)
        ones = np.ones(m)
        assert np.abs(W.entries @ ones - ones).max() < 1e-12
        assert np.abs(W.entries - W.entries.T).max() < 1e-12
        assert W.lambda_min > 0
        assert W.eta < 1
        # eta equals the second-largest eigenvalue magnitude (dense oracle)
        eigs = np.sort(np.abs(np.linalg.eigvalsh(W.entries)))
        assert W.eta == pytest.approx(eigs[-2], abs=1e-10)
        # (I - W) annihilates the consensus direction
        assert np.abs((np.eye(m) - W.entries) @ ones).max() < 1e-12


def test_weights_csv_roundtrip(tmp_path, W5):
    path = tmp_path / "w.csv"
    weights_to_csv(W5.entries, path)
    back = np.array([[float(v) for v in line.split(",")]
                     for line in path.read_text().strip().splitlines()])
    assert np.array_equal(back, W5.entries)
