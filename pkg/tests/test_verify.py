import json

import numpy as np
import pytest

from quasirand.generator import blowup_graph
from quasirand.graph import Partition, WeightedGraph
from quasirand.model import ModelGraph
from quasirand.verify import (NoStructureError, check_P0_proxy,
                              check_PI, check_PI_plus, check_PII, check_PIII, check_PIV,
                              classify_structure, load_thresholds, loglog_slope, rate_sweep)

from conftest import (acceptance_model, acceptance_sample, complete_bipartite, complete_graph,
                      random_graph, star)


def test_PI_on_sbm():
    v = check_PI(acceptance_sample(0).graph, 2)
    assert v.passed
    assert np.allclose(v.metrics["q_hat"], [0.431, 0.319], atol=0.01)


def test_PI_fails_on_er():
    v = check_PI(random_graph(500, 0.5, 0), 2)
    assert not v.passed and v.metrics["structural_count"] == 1


def test_PI_on_blowup():
    g, _ = blowup_graph(acceptance_model(), (40, 40))
    v = check_PI(g, 2)
    assert v.passed and v.metrics["S2_plain"] <= 1e-12


def test_PI_plus():
    v = check_PI_plus(acceptance_sample(0).graph, 2, acceptance_model())
    assert v.passed and v.metrics["max_density_deviation"] <= 0.03
    sizes = (30, 20)
    g, _ = blowup_graph(acceptance_model(), sizes)
    vb = check_PI_plus(g, 2, acceptance_model())
    assert vb.metrics["max_density_deviation"] <= 1 / min(sizes)


def test_PI_plus_fails_on_glued_models():
    # two independent SBM samples joined by a sparse bridge
    a = acceptance_sample(0, n=200).graph.weights
    b = acceptance_sample(1, n=200).graph.weights
    A = np.zeros((400, 400))
    A[:200, :200], A[200:, 200:] = a, b
    A[np.arange(0, 200, 10), np.arange(200, 400, 10)] = 1
    A = np.maximum(A, A.T)
    v = check_PI_plus(WeightedGraph(A), 2, acceptance_model())
    assert not v.passed
    assert v.metrics["max_density_deviation"] > 0.05


def test_PII():
    v = check_PII(acceptance_sample(0).graph, 2, c=0.2, C=0.8)
    assert v.passed and v.metrics["exception_fraction"] == 0
    assert not check_PII(star(30), 2).passed
    with pytest.warns(UserWarning):
        kn = check_PII(complete_graph(20), 2)
    assert not kn.passed and kn.metrics["structural_count"] == 0


def test_PIII_k22():
    v = check_PIII(complete_bipartite(2, 2), Partition([0, 0, 1, 1]), theta=0.1)
    assert v.passed
    assert v.metrics["md_partition"] == pytest.approx(0)
    lb = v.metrics["lower_bounds"]["md_1"]
    assert lb["source"] == "exact_md1" and lb["value"] == pytest.approx(0.5)


def test_PIII_sbm():
    s = acceptance_sample(0)
    v = check_PIII(s.graph, s.partition)
    assert v.passed
    assert v.metrics["md_partition_kind"] == "heuristic_estimate"
    assert v.metrics["lower_bounds"]["md_1"]["value"] > 0.05


def test_PIII_k1_vacuous():
    v = check_PIII(complete_graph(5), Partition.trivial(5))
    assert any("vacuous" in note for note in v.notes)
    assert "md_1" in v.metrics["lower_bounds"]


def test_PIV():
    s = acceptance_sample(0)
    assert check_PIV(s.graph, s.partition).passed
    n = 250
    assert check_PIV(complete_graph(n), Partition.trivial(n), np.ones((1, 1))).passed
    assert not check_PIV(complete_graph(15), Partition.trivial(15), np.ones((1, 1))).passed
    kmm = complete_bipartite(40, 40)
    assert not check_PIV(kmm, Partition.trivial(80)).passed


def test_PIV_blowup_only_diagonal_correction():
    h = acceptance_model()
    g, p = blowup_graph(h, (20, 20))
    v = check_PIV(g, p, h.P)
    A = g.weights
    # exact codegree deviation from the missing diagonal, computed directly
    expected = 0.0
    for Ui in p.clusters():
        for Uj in p.clusters():
            N2 = A[np.ix_(Ui, Uj)] @ A[np.ix_(Ui, Uj)].T
            pij = h.P[p.labels[Ui[0]], p.labels[Uj[0]]]
            expected = max(expected, np.abs(N2 - pij ** 2 * len(Uj)).sum() / 40 ** 3)
    assert v.metrics["max_normalized_n3"] == pytest.approx(expected)


def test_P0_proxy_labelled():
    v = check_P0_proxy(acceptance_sample(0).graph, 2, acceptance_model())
    assert v.passed and v.to_dict()["proxy"] is True


def test_classify_structure():
    assert classify_structure(acceptance_sample(0).graph, 2) == "community"
    assert classify_structure(complete_bipartite(2, 2), 2) == "anticommunity"
    with pytest.raises(NoStructureError, match="no k-structure"):
        classify_structure(complete_graph(4), 2)


def test_classify_disassortative():
    from quasirand.generator import SampleSpec, sample

    h = ModelGraph([0.5, 0.5], [[0.1, 0.8], [0.8, 0.1]])
    g = sample(SampleSpec(h, 200, seed=0, fixed_sizes=(100, 100))).graph
    assert classify_structure(g, 2) == "anticommunity"


def test_thresholds_file(tmp_path):
    path = tmp_path / "t.json"
    path.write_text(json.dumps({"theta": 0.2}))
    assert load_thresholds(path).theta == 0.2
    path.write_text(json.dumps({"nope": 1}))
    with pytest.raises(ValueError):
        load_thresholds(path)


def test_verdict_dict_contains_referenced_metrics():
    d = check_PII(acceptance_sample(0).graph, 2).to_dict()
    for key in ("exception_fraction", "structural_count", "S2_weighted"):
        assert key in d["metrics"]


def test_loglog_slope():
    assert loglog_slope([1, 10, 100], [1, 0.1, 0.01]) == pytest.approx(-1)


def test_rate_sweep_requires_three_sizes():
    with pytest.raises(ValueError):
        rate_sweep(acceptance_model(), [100, 200], [0])
    with pytest.raises(ValueError):
        rate_sweep(acceptance_model(), [100, 200, 300], [])


def test_rate_sweep_jobs_independent():
    h = acceptance_model()
    a = rate_sweep(h, [60, 90, 120], [0, 1], ["plain_kvariance", "mu_k"], jobs=1)
    b = rate_sweep(h, [60, 90, 120], [0, 1], ["plain_kvariance", "mu_k"], jobs=2)
    assert a["plain_kvariance"].cells == b["plain_kvariance"].cells
    assert a["mu_k"].slope == b["mu_k"].slope


def test_rate_sweep_slopes():
    reports = rate_sweep(acceptance_model(), [200, 400, 800], range(5),
                         ["plain_kvariance", "nonstructural_sqrt", "piv_statistic"])
    assert reports["plain_kvariance"].slope <= -0.8
    assert abs(reports["nonstructural_sqrt"].slope) <= 0.2
    assert reports["piv_statistic"].decreasing
    assert all(r.within_band for r in reports.values())


@pytest.mark.parametrize("seed", range(4))
def test_implication_audit(seed):
    # on samples passing PI+, the downstream checks pass at default thresholds
    s = acceptance_sample(seed)
    if check_PI_plus(s.graph, 2, acceptance_model()).passed:
        assert check_PII(s.graph, 2).passed, "PII threshold calibration"
        assert check_PIII(s.graph, s.partition).passed, "PIII threshold calibration"
