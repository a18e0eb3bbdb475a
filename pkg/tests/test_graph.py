import numpy as np
import pytest

from quasirand.graph import (DegenerateSubsetError, EmptyGraphError, Partition, WeightedGraph,
                             format_edge_list, is_connected, normalize_weights, read_edge_list,
                             volume, volume_density, weighted_cut, write_edge_list)

from conftest import complete_bipartite, complete_graph


def test_weights_are_symmetrized_and_read_only():
    g = WeightedGraph([[0, 2], [2, 0]])
    assert g.degrees.tolist() == [2.0, 2.0]
    with pytest.raises(ValueError):
        g.weights[0, 1] = 5


def test_rejects_negative_weights_and_loops():
    with pytest.raises(ValueError):
        WeightedGraph([[0, -1], [-1, 0]])
    with pytest.raises(ValueError):
        WeightedGraph([[1, 0], [0, 0]])
    assert WeightedGraph([[1, 0], [0, 0]], allow_loops=True).weights[0, 0] == 1


def test_rejects_asymmetric():
    with pytest.raises(ValueError):
        WeightedGraph([[0, 1], [0, 0]])


def test_normalize_weights_sums_to_one():
    g = normalize_weights(complete_graph(5))
    assert g.weights.sum() == pytest.approx(1.0)
    with pytest.raises(EmptyGraphError):
        normalize_weights(WeightedGraph(np.zeros((3, 3))))


def test_volume_and_cut_on_k22():
    g = complete_bipartite(2, 2)
    assert volume(g, [0, 1]) == 4
    assert weighted_cut(g, [0, 1], [2, 3]) == 4
    assert weighted_cut(g, [0, 1], [0, 1]) == 0
    assert volume_density(g, [0, 1], [2, 3]) == pytest.approx(0.25)
    with pytest.raises(DegenerateSubsetError):
        volume_density(WeightedGraph.from_edges(3, [(0, 1)]), [2], [0])


def test_volume_density_scales_inversely():
    g = complete_bipartite(2, 3)
    assert volume_density(g.scaled(7.5), [0], [2, 3]) == pytest.approx(volume_density(g, [0], [2, 3]) / 7.5)


def test_partition_validation():
    p = Partition([0, 1, 1, 0])
    assert p.k == 2 and p.sizes.tolist() == [2, 2]
    assert p.cluster(1).tolist() == [1, 2]
    with pytest.raises(ValueError):
        Partition([0, 2, 2])
    with pytest.raises(ValueError):
        Partition([0, 0], k=2)
    assert Partition([1, 1, 0]).canonical() == Partition([0, 0, 1])


def test_edge_list_round_trip(tmp_path):
    g = WeightedGraph.from_edges(5, [(0, 1), (1, 2, 2.5), (3, 4)])
    path = tmp_path / "g.txt"
    write_edge_list(g, path)
    h = read_edge_list(path)
    assert h.n == 5
    assert np.array_equal(h.weights, g.weights)
    assert format_edge_list(h) == path.read_text()


def test_edge_list_header_keeps_isolated_vertices():
    g = read_edge_list(["# n=4", "0 1"])
    assert g.n == 4 and not is_connected(g)


def test_edge_list_errors():
    with pytest.raises(ValueError, match="duplicate"):
        read_edge_list(["0 1", "1 0"])
    with pytest.raises(ValueError, match="self-loop"):
        read_edge_list(["2 2"])
    with pytest.raises(ValueError):
        read_edge_list(["0 1 2 3"])
