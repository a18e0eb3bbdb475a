import numpy as np
import pytest

from quasirand.graph import WeightedGraph
from quasirand.numerics import eigh
from quasirand.spectra import (DisconnectedGraphError, adjacency_threshold, largest_gap_index,
                               modularity_matrix, normalized_modularity_matrix, spectral_summary,
                               spectrum_vs_model, structural_eigs)

from conftest import acceptance_sample, complete_bipartite, complete_graph


def test_k4_modularity_spectrum():
    values = eigh(normalized_modularity_matrix(complete_graph(4))).values
    assert np.allclose(np.sort(values), [-1 / 3] * 3 + [0.0], atol=1e-9)


@pytest.mark.parametrize("n", [5, 9])
def test_kn_modularity_spectrum(n):
    values = eigh(normalized_modularity_matrix(complete_graph(n))).values
    assert np.allclose(np.sort(values)[:-1], -1 / (n - 1))


def test_bipartite_has_minus_one():
    values = eigh(normalized_modularity_matrix(complete_bipartite(3, 4))).values
    assert values[0] == pytest.approx(-1.0)


def test_trivial_eigenvector_is_sqrt_degree():
    g = complete_bipartite(2, 3)
    M = normalized_modularity_matrix(g)
    d = g.degrees / g.degrees.sum()
    assert np.allclose(M @ np.sqrt(d), 0)


def test_modularity_matrix_rows_sum_to_zero():
    M = modularity_matrix(complete_bipartite(2, 3))
    assert np.allclose(M.sum(axis=1), 0)


def test_scale_invariance():
    g = complete_bipartite(2, 3)
    assert np.allclose(normalized_modularity_matrix(g), normalized_modularity_matrix(g.scaled(3)))


def test_disconnected_raises():
    g = WeightedGraph.from_edges(4, [(0, 1), (2, 3)])
    with pytest.raises(DisconnectedGraphError):
        normalized_modularity_matrix(g)
    with pytest.raises(DisconnectedGraphError):
        normalized_modularity_matrix(WeightedGraph.from_edges(3, [(0, 1)]))


def test_structural_counts_on_sbm():
    s = acceptance_sample(0)
    summary = spectral_summary(s.graph)
    assert summary.structural_count_adj == 2
    assert summary.structural_count_mod == 1
    assert largest_gap_index(summary.adjacency_eigs.values, 10) == 2


def test_structural_eigs_modes():
    assert structural_eigs(np.array([0.9, -0.6, 0.2]), "modularity", delta=0.5)[0] == 2
    assert structural_eigs(np.array([100.0, 10.0]), "adjacency", n=100)[0] == 1
    assert adjacency_threshold(100) == pytest.approx(np.sqrt(100 * np.log(100)))
    with pytest.raises(ValueError):
        structural_eigs(np.array([1.0]), "laplacian")


def test_spectrum_vs_model():
    dev = spectrum_vs_model(acceptance_sample(0))
    assert dev.structural_deviation[0] < 0.05
    assert dev.max_remaining < 0.15


def test_summary_json_shape():
    d = spectral_summary(complete_bipartite(3, 3)).to_dict(top=3)
    assert len(d["adjacency_eigenvalues"]) == 3
    assert set(d["thresholds"]) == {"adjacency", "delta"}
