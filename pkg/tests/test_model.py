import json

import numpy as np
import pytest

from quasirand.model import (ModelError, ModelGraph, blow_up, blowup_spectrum, graphon_value,
                             load_model, model_hom_density, model_spectrum, proportional_sizes,
                             surrogate_matrix)
from quasirand.numerics import eigh
from quasirand.spectra import normalized_modularity_matrix
from quasirand.graph import WeightedGraph


@pytest.mark.parametrize("r,P,invariant", [
    ([0.6, 0.5], [[0.5, 0.1], [0.1, 0.5]], "r_sum"),
    ([1.0, 0.0], [[0.5, 0.1], [0.1, 0.5]], "r_positive"),
    ([0.5, 0.5], [[0.5, 0.2], [0.1, 0.5]], "P_symmetric"),
    ([0.5, 0.5], [[1.5, 0.1], [0.1, 0.5]], "P_range"),
    ([0.5, 0.5], [[0.5, 0.5], [0.5, 0.5]], "P_rank"),
    ([0.5, 0.5], [[0.5]], "P_shape"),
])
def test_invariants_are_named(r, P, invariant):
    with pytest.raises(ModelError) as exc:
        ModelGraph(r, P)
    assert exc.value.invariant == invariant


def test_load_model_round_trip(tmp_path, model):
    path = tmp_path / "m.json"
    path.write_text(json.dumps(model.to_dict()))
    m = load_model(path)
    assert np.array_equal(m.P, model.P) and np.array_equal(m.r, model.r)
    path.write_text("{bad")
    with pytest.raises(ModelError) as exc:
        load_model(path)
    assert exc.value.invariant == "json_syntax"


def test_class_degrees(model):
    assert np.allclose(model.class_degrees(), [0.45, 0.40])


def test_blowup_spectrum_oracle(model):
    # eigenvalues of 250 * P: (1.5 +- sqrt(0.02)) / 2 * 250
    expected = 125 * (1.5 + np.array([1, -1]) * np.sqrt(0.05))
    assert np.allclose(blowup_spectrum(model, (250, 250)), expected)
    assert np.allclose(blowup_spectrum(model, (250, 250)), [215.45, 159.55], atol=0.01)


def test_blowup_spectrum_matches_dense(model):
    B = blow_up(model, (7, 5))
    dense = eigh(B).values[:2]
    assert np.allclose(dense, blowup_spectrum(model, (7, 5)))


def test_model_spectrum_acceptance(model):
    ms = model_spectrum(model)
    assert ms.trivial_value == pytest.approx(1.0)
    # det(B) / 1 = (0.56 - 0.01) / (4 * 0.45 * 0.40)
    assert ms.structural_values[0] == pytest.approx(0.55 / 0.72)
    assert ms.structural_values[0] == pytest.approx(0.7639, abs=1e-4)


def test_disassortative_value():
    h = ModelGraph([0.5, 0.5], [[0.1, 0.8], [0.8, 0.1]])
    assert model_spectrum(h).structural_values[0] == pytest.approx((0.1 - 0.8) / 0.9)


@pytest.mark.parametrize("P", [[[0.0, 0.6, 0.2], [0.6, 0.0, 0.3], [0.2, 0.3, 0.0]],
                               [[0.8, 0.1], [0.1, 0.7]]])
def test_surrogate_is_blowup_modularity_spectrum(P):
    k = len(P)
    h = ModelGraph(np.full(k, 1 / k), P)
    B = blow_up(h, np.full(k, 6))
    g = WeightedGraph(B, allow_loops=True)
    mu = eigh(normalized_modularity_matrix(g)).values[:k - 1]
    assert np.allclose(np.sort(mu), np.sort(model_spectrum(h).structural_values), atol=1e-9)


def test_surrogate_symmetric(model):
    B = surrogate_matrix(model)
    assert np.allclose(B, B.T)


def test_proportional_sizes():
    assert proportional_sizes([0.5, 0.5], 501).tolist() == [251, 250]
    assert proportional_sizes([0.2, 0.3, 0.5], 10).tolist() == [2, 3, 5]


def test_graphon_value(model):
    assert graphon_value(model, 0.1, 0.2) == 0.8
    assert graphon_value(model, 0.5, 0.2) == 0.1
    assert graphon_value(model, 0.9, 0.9) == 0.7
    with pytest.raises(ValueError):
        graphon_value(model, 1.0, 0.0)


def test_model_hom_density_closed_forms(model):
    assert model_hom_density("vertex", model) == pytest.approx(1.0)
    assert model_hom_density("edge", model) == pytest.approx(0.25 * (0.8 + 0.7 + 0.2))
    # hom(C_t, W) = sum of eigenvalues of (P / 2)^t
    lam = np.linalg.eigvalsh(model.P / 2)
    for t in (3, 4, 5):
        assert model_hom_density(f"C{t}", model) == pytest.approx(np.sum(lam ** t))
