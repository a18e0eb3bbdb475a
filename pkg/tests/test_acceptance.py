"""Acceptance criteria 1-10, one test per criterion.

Each test records a one-line verdict before asserting, and the summary hook
in ``conftest.py`` prints the lines at the end of the run.
"""

import json
import math
from functools import lru_cache

import networkx as nx
import numpy as np
import pytest

from quasirand.cli import main
from quasirand.clustering import k_variance, match_partitions
from quasirand.discrepancy import (discrepancy_spectral_bounds, converse_rhs,
                                   min_k_discrepancy, partition_discrepancy_exact,
                                   partition_discrepancy_heuristic)
from quasirand.graph import Partition, WeightedGraph
from quasirand.model import blowup_spectrum, model_hom_density, model_spectrum
from quasirand.numerics import cut_norm_exact, eigh
from quasirand.spectra import normalized_modularity_matrix, structural_eigs
from quasirand.subgraphs import (cluster_degrees, codegree_report, cycle, hom_count, hom_density,
                                 parse_pattern)

from conftest import (acceptance_model, acceptance_sample, complete_bipartite, complete_graph,
                      random_graph)

ACCEPTANCE = {}
SEEDS = range(20)
N = 500


def record(number, ok, detail):
    ACCEPTANCE[number] = (bool(ok), detail)
    print(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}")


@lru_cache(maxsize=1)
def small_connected_graphs():
    """Every connected graph on 2..7 vertices, one per isomorphism class."""
    out = []
    for G in nx.graph_atlas_g():
        n = G.number_of_nodes()
        if 2 <= n <= 7 and nx.is_connected(G):
            A = nx.to_numpy_array(G, nodelist=sorted(G.nodes()))
            out.append(WeightedGraph(A))
    return out


@lru_cache(maxsize=None)
def corpus_row(index):
    g = small_connected_graphs()[index]
    mu = eigh(normalized_modularity_matrix(g)).values
    md1 = partition_discrepancy_exact(g, Partition.trivial(g.n)).value
    md2 = min_k_discrepancy(g, 2).value
    return abs(mu[0]), abs(mu[1]) if mu.size > 1 else 0.0, md1, md2


@lru_cache(maxsize=None)
def sbm_analysis(seed):
    s = acceptance_sample(seed, N)
    g = s.graph
    adj = eigh(g.weights).values
    mod = eigh(normalized_modularity_matrix(g)).values
    s_plain, _ = k_variance(g, 2, "plain", seed=seed)
    s_weighted, p_weighted = k_variance(g, 2, "weighted", seed=seed)
    return {"adj": adj, "mod": mod, "S2": s_plain, "S2w": s_weighted, "p": p_weighted}


def test_criterion_01_expander_mixing():
    graphs = small_connected_graphs()
    violations = []
    for i in range(len(graphs)):
        mu1, _, md1, _ = corpus_row(i)
        if md1 > mu1 + 1e-12:
            violations.append(i)
    # connected graphs on 2..7 vertices: 1 + 2 + 6 + 21 + 112 + 853
    ok = not violations and len(graphs) == 995
    record(1, ok, f"md_1 <= |mu_1| on {len(graphs)} connected graphs (n<=7), "
                  f"{len(violations)} violations")
    assert ok


def test_criterion_02_converse_bound():
    graphs = small_connected_graphs()
    checked, violations = 0, []
    for i in range(len(graphs)):
        mu1, mu2, md1, md2 = corpus_row(i)
        for k, mu, md in ((1, mu1, md1), (2, mu2, md2)):
            if 0 < md < 1:
                checked += 1
                if mu > converse_rhs(md, k) + 1e-12:
                    violations.append((i, k))
    ok = not violations and checked > 0
    record(2, ok, f"|mu_k| <= 9 md_k (k+2 - 9k ln md_k), k in {{1,2}}: {checked} cases, "
                  f"{len(violations)} violations")
    assert ok


def test_criterion_03_hand_values():
    md1_k4 = min_k_discrepancy(complete_graph(4), 1).value
    md2_k22 = min_k_discrepancy(complete_bipartite(2, 2), 2).value
    spec_k4 = np.sort(eigh(normalized_modularity_matrix(complete_graph(4))).values)
    hom = hom_count(cycle(4), complete_graph(3))
    checks = {
        "md_1(K4)=0.25": abs(md1_k4 - 0.25) <= 1e-10,
        "md_2(K22)=0": abs(md2_k22) <= 1e-12,
        "spec(M_D(K4))": np.allclose(spec_k4, [-1 / 3, -1 / 3, -1 / 3, 0.0], atol=1e-9, rtol=0),
        "hom(C4,K3)=18": hom == 18,
    }
    ok = all(checks.values())
    record(3, ok, ", ".join(f"{k} {'ok' if v else 'FAIL'}" for k, v in checks.items()))
    assert ok


def test_criterion_04_sbm_spectra():
    h = acceptance_model()
    targets = blowup_spectrum(h, (N // 2, N // 2))
    mu_target = model_spectrum(h).structural_values[0]
    noise = 3 * math.sqrt(N)
    good_adj = good_mod = 0
    for seed in SEEDS:
        a = sbm_analysis(seed)
        adj, mod = a["adj"], a["mod"]
        near = [i for i, lam in enumerate(adj)
                if any(abs(lam - t) <= 0.1 * abs(t) for t in targets)]
        rest = np.delete(adj, near)
        if (len(near) == 2 and sorted(adj[near]) == pytest.approx(sorted(targets), rel=0.1)
                and np.max(np.abs(rest)) <= noise):
            good_adj += 1
        count, idx = structural_eigs(mod, "modularity", delta=0.5)
        others = np.abs(np.delete(mod, idx))
        if count == 1 and abs(mod[idx[0]] - mu_target) <= 0.05 and others.max() <= 0.15:
            good_mod += 1
    ok = good_adj >= 18 and good_mod >= 18
    record(4, ok, f"adjacency {good_adj}/20 (targets {targets.round(2).tolist()}), "
                  f"modularity {good_mod}/20 (target {mu_target:.4f})")
    assert ok


def test_criterion_05_recovery_and_variances():
    good = 0
    worst_acc, worst_s2, worst_s2w = 1.0, 0.0, 0.0
    for seed in SEEDS:
        a = sbm_analysis(seed)
        acc = match_partitions(a["p"], acceptance_sample(seed, N).partition)[0]
        worst_acc = min(worst_acc, acc)
        worst_s2, worst_s2w = max(worst_s2, a["S2"]), max(worst_s2w, a["S2w"])
        if acc >= 0.98 and a["S2"] <= 10 / N and a["S2w"] <= 0.05:
            good += 1
    ok = good >= 18
    record(5, ok, f"{good}/20 seeds; min accuracy {worst_acc:.3f}, max S_2^2 {worst_s2:.4f} "
                  f"(<= {10 / N}), max weighted S_2^2 {worst_s2w:.4f} (<= 0.05)")
    assert ok


def test_criterion_06_codegree():
    h = acceptance_model()
    stats = [codegree_report(acceptance_sample(s, N).graph, acceptance_sample(s, N).partition,
                             h.P).max_normalized for s in SEEDS]
    good = sum(v <= 0.01 for v in stats)
    means = []
    for n in (200, 400, 800):
        vals = [codegree_report(acceptance_sample(s, n).graph, acceptance_sample(s, n).partition,
                                h.P).max_normalized for s in range(5)]
        means.append(float(np.mean(vals)))
    decreasing = means[0] > means[1] > means[2]
    ok = good >= 18 and decreasing
    record(6, ok, f"{good}/20 seeds <= 0.01 (max {max(stats):.4f}); means over n=200,400,800: "
                  f"{[round(m, 5) for m in means]}")
    assert ok


def test_criterion_07_spectral_upper_bound():
    violations, slacks = 0, []
    for seed in SEEDS:
        g = acceptance_sample(seed, N).graph
        p = sbm_analysis(seed)["p"]
        md = partition_discrepancy_heuristic(g, p, seed=seed).value
        upper = discrepancy_spectral_bounds(g, 2, p).upper
        slacks.append(upper - md)
        violations += md > upper
    ok = violations == 0
    record(7, ok, f"{violations} violations over 20 seeds; slack min {min(slacks):.3f}, "
                  f"max {max(slacks):.3f}")
    assert ok


def test_criterion_08_exact_identities():
    rng = np.random.default_rng(2024)
    failures = []
    for inst in range(100):
        n = int(rng.integers(5, 31))
        g = random_graph(n, float(rng.uniform(0.2, 0.8)), int(rng.integers(2 ** 31)))
        lam = eigh(g.weights).values
        for t in (3, 4, 5, 6):
            direct = hom_count(cycle(t), g, method="enumerate") if n <= 15 or t <= 4 else \
                hom_count(cycle(t), g)
            if not math.isclose(direct, float(np.sum(lam ** t)), rel_tol=1e-6, abs_tol=1e-6):
                failures.append((inst, "cycle", t))
        k = int(rng.integers(1, 4))
        p = Partition(np.arange(n) % k)
        rep = codegree_report(g, p)
        cuts = cluster_degrees(g, p).block_cuts
        for i in range(k):
            for j in range(k):
                if rep.codegree_sum[i, j] != rep.degree_square_sum[i, j]:
                    failures.append((inst, "identity", i, j))
                if rep.codegree_sum[i, j] * p.sizes[j] < cuts[i, j] ** 2:
                    failures.append((inst, "cs_between", i, j))
            if rep.codegree_sum[i, i] * p.sizes[i] < cuts[i, i] ** 2:
                failures.append((inst, "cs_within", i))
        m = min(n, 12)
        E = g.weights[:m, :m] - g.weights[:m, :m].mean()
        value, rows, cols = cut_norm_exact(E)
        if rows and abs(abs(E[np.ix_(rows, cols)].sum()) - value) > 1e-12:
            failures.append((inst, "cutnorm"))
    ok = not failures
    record(8, ok, f"100 random instances: cycle traces, codegree identity, Cauchy-Schwarz bounds, "
                  f"cut-norm witnesses; {len(failures)} failures")
    assert ok, failures[:5]


def test_criterion_09_reproducibility(tmp_path):
    model = tmp_path / "model.json"
    model.write_text(json.dumps(acceptance_model().to_dict()))
    d = tmp_path / "r0"
    d.mkdir()
    runs = []
    for jobs in ("1", "4", "1"):
        code = main(["generate", str(model), "--n", "300", "--seed", "17", "--out", str(d / "g.txt"),
                     "--jobs", jobs])
        runs.append((code, [(d / f).read_bytes() for f in
                            ("g.txt", "g.txt.json", "g.txt.manifest.json")]))
    identical = all(r == runs[0] for r in runs)
    g = d / "g.txt"
    part = d / "g.txt.json"
    commands = {
        "analyze": ["analyze", str(g), "--out", str(tmp_path / "a.json")],
        "discrepancy": ["discrepancy", str(g), "--partition", str(part), "--mode", "heuristic",
                        "--out", str(tmp_path / "d.json")],
        "verify": ["verify", str(g), "--model", str(model), "--partition", str(part),
                   "--out", str(tmp_path / "v.json")],
        "sweep": ["sweep", str(model), "--sizes", "40,60,80", "--seeds", "0:2",
                  "--out-csv", str(tmp_path / "s.csv")],
    }
    manifests = {"generate": tmp_path / "r0" / "g.txt.manifest.json"}
    for name, argv in commands.items():
        main(argv)
        out = argv[argv.index("--out-csv" if name == "sweep" else "--out") + 1]
        manifests[name] = out + ".manifest.json"
    replays = {name: main(["replay", str(path), "--compare"]) for name, path in manifests.items()}
    ok = identical and runs[0][0] == 0 and all(code == 0 for code in replays.values())
    record(9, ok, f"generate byte-identical across runs and --jobs: {identical}; "
                  f"replay exit codes {replays}")
    assert ok


def test_criterion_10_hom_density_convergence():
    h = acceptance_model()
    patterns = {name: parse_pattern(name) for name in ("edge", "C3", "C4")}
    expected = {name: model_hom_density(F, h) for name, F in patterns.items()}
    good, worst = 0, 0.0
    for seed in SEEDS:
        g = acceptance_sample(seed, N).graph
        devs = [abs(hom_density(F, g) - expected[name]) for name, F in patterns.items()]
        worst = max(worst, max(devs))
        good += max(devs) <= 0.05
    ok = good >= 18
    record(10, ok, f"{good}/20 seeds within 0.05 for edge, C3, C4 (worst deviation {worst:.4f})")
    assert ok
