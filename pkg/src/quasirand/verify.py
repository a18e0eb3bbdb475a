"""Finite-n checks of the multiclass quasirandom properties.

Limit statements become threshold checks at documented operating points
(``Thresholds``) and log-log rate sweeps over growing ``n``. Each checker
returns a ``PropertyVerdict`` whose ``metrics`` contain every quantity the
pass/fail decision looks at.
"""

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from itertools import permutations

import numpy as np

from .clustering import k_variance
from .discrepancy import (CapExceededError, DISCREPANCY_CAP, _check_cap, _exact,
                          discrepancy_spectral_bounds, converse_inverse,
                          partition_discrepancy_heuristic)
from .generator import SampleSpec, sample
from .graph import Partition, as_graph
from .model import model_hom_density, proportional_sizes
from .numerics import eigh
from .spectra import (DisconnectedGraphError, adjacency_threshold, normalized_modularity_matrix,
                      structural_eigs)
from .subgraphs import cluster_degrees, codegree_report, hom_density, parse_pattern

PROPERTIES = ("PI", "PI_plus", "PII", "PIII", "PIV", "P0_proxy")
PROXY_PATTERNS = ("edge", "C3", "C4", "K3", "P3")


@dataclass(frozen=True)
class Thresholds:
    """Operating points of the finite-n checks.

    ``kvar_plain`` multiplies ``1/n``: the plain variance must satisfy
    ``S_k^2 <= kvar_plain / n``.
    """

    nonstructural_ratio: float = 0.1
    nonstructural_sqrt: float = 3.0
    kvar_plain: float = 10.0
    kvar_weighted: float = 0.05
    delta: float = 0.5
    c_thr: float = 1.0
    theta: float = 0.05
    md_max: float = 0.15
    piv: float = 0.01
    degree_c: float = 0.1
    degree_C: float = 0.9
    exception_fraction: float = 0.05
    density_tol: float = 0.05
    hom_tol: float = 0.05

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown threshold(s): {sorted(unknown)}")
        return cls(**{k: float(v) for k, v in data.items()})

    def to_dict(self):
        return asdict(self)


def load_thresholds(path):
    with open(path) as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise ValueError("thresholds file must hold a JSON object")
    return Thresholds.from_dict(data)


@dataclass
class PropertyVerdict:
    property: str
    passed: bool
    metrics: dict
    thresholds: dict
    status: str = None
    notes: list = field(default_factory=list)

    def __post_init__(self):
        if self.status is None:
            self.status = "pass" if self.passed else "fail"

    def to_dict(self):
        out = {
            "property": self.property,
            "pass": bool(self.passed),
            "status": self.status,
            "metrics": _jsonable(self.metrics),
            "thresholds": _jsonable(self.thresholds),
            "notes": list(self.notes),
        }
        if self.property == "P0_proxy":
            out["proxy"] = True
        return out


def skipped(prop, reason):
    return PropertyVerdict(prop, False, {}, {}, status="skipped", notes=[reason])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _t(thresholds):
    return Thresholds() if thresholds is None else thresholds


def _pick(t, *names):
    return {name: getattr(t, name) for name in names}


def _ratio_deviation(p, r):
    if p is None or r is None or p.k != len(r):
        return None
    ratios = np.sort(p.sizes / float(p.n))
    return float(np.max(np.abs(ratios - np.sort(np.asarray(r)))))


def check_PI(g, k, thresholds=None, r=None, seed=0):
    """Adjacency spectrum and plain k-variance.

    Passes iff exactly ``k`` eigenvalues exceed ``c_thr sqrt(n ln n)``, the
    largest remaining ``|lambda|/n`` is within ``nonstructural_ratio`` and
    ``S_k^2 <= kvar_plain / n``. ``r`` only adds a balancing metric.
    """
    t = _t(thresholds)
    g = as_graph(g)
    n = g.n
    values = eigh(g.weights).values
    count, _ = structural_eigs(values, "adjacency", c_thr=t.c_thr, n=n)
    rest = np.abs(values[k:])
    nonstruct = float(rest.max()) / n if rest.size else 0.0
    s2, p = k_variance(g, k, "plain", seed=seed)
    metrics = {
        "q_hat": (values[:k] / n).tolist(),
        "structural_count": count,
        "max_nonstructural_ratio": nonstruct,
        "S2_plain": s2,
        "S2_plain_limit": t.kvar_plain / n,
        "adjacency_threshold": adjacency_threshold(n, t.c_thr),
    }
    dev = _ratio_deviation(p, r)
    if dev is not None:
        metrics["cluster_ratio_deviation"] = dev
    passed = count == k and nonstruct <= t.nonstructural_ratio and s2 <= t.kvar_plain / n
    return PropertyVerdict("PI", bool(passed), metrics,
                           _pick(t, "c_thr", "nonstructural_ratio", "kvar_plain"))


def _matched_density_deviation(densities, P):
    """Smallest ``max |d(U_i, U_j) - p_{pi(i) pi(j)}|`` over relabelings ``pi``."""
    k = P.shape[0]
    best, best_perm = np.inf, None
    for perm in permutations(range(k)):
        perm = list(perm)
        dev = float(np.max(np.abs(densities - P[np.ix_(perm, perm)])))
        if dev < best:
            best, best_perm = dev, perm
    return best, best_perm


def check_PI_plus(g, k, h, thresholds=None, seed=0):
    """PI with remaining eigenvalues ``O(sqrt n)`` and block densities matching ``h.P``.

    Densities are measured on the plain-variance minimizing partition after
    the best relabeling against the model classes.
    """
    t = _t(thresholds)
    g = as_graph(g)
    if h.k != k:
        raise ValueError("model class count differs from k")
    n = g.n
    base = check_PI(g, k, t, r=h.r, seed=seed)
    values = eigh(g.weights).values
    rest = np.abs(values[k:])
    sqrt_ratio = float(rest.max()) / math.sqrt(n) if rest.size else 0.0
    _, p = k_variance(g, k, "plain", seed=seed)
    densities = cluster_degrees(g, p).densities
    dens_dev, perm = _matched_density_deviation(densities, h.P)
    metrics = dict(base.metrics)
    metrics.update({
        "max_nonstructural_sqrt": sqrt_ratio,
        "S2_plain_times_n": base.metrics["S2_plain"] * n,
        "max_density_deviation": dens_dev,
        "class_matching": perm,
    })
    passed = (base.passed and sqrt_ratio <= t.nonstructural_sqrt
              and dens_dev <= t.density_tol)
    return PropertyVerdict("PI_plus", bool(passed), metrics,
                           _pick(t, "c_thr", "nonstructural_ratio", "kvar_plain",
                                 "nonstructural_sqrt", "density_tol"))


def check_PII(g, k, thresholds=None, delta=None, c=None, C=None, r=None, seed=0):
    """No dominant vertices, ``k-1`` structural ``|mu| > delta`` and small weighted variance."""
    t = _t(thresholds)
    delta = t.delta if delta is None else delta
    c = t.degree_c if c is None else c
    C = t.degree_C if C is None else C
    g = as_graph(g)
    n = g.n
    scaled = g.degrees / n
    exc = float(np.mean((scaled < c) | (scaled > C)))
    try:
        values = eigh(normalized_modularity_matrix(g)).values
    except DisconnectedGraphError as err:
        return skipped("PII", str(err))
    count, _ = structural_eigs(values, "modularity", delta=delta)
    s2w, p = k_variance(g, k, "weighted", seed=seed)
    rest = np.abs(values[k - 1:])
    metrics = {
        "exception_fraction": exc,
        "structural_count": count,
        "structural_mu": values[:count].tolist(),
        "max_remaining_mu": float(rest.max()) if rest.size else 0.0,
        "S2_weighted": s2w,
    }
    dev = _ratio_deviation(p, r)
    if dev is not None:
        metrics["cluster_ratio_deviation"] = dev
    passed = exc <= t.exception_fraction and count == k - 1 and s2w <= t.kvar_weighted
    return PropertyVerdict("PII", bool(passed), metrics,
                           {"delta": delta, "degree_c": c, "degree_C": C,
                            "exception_fraction": t.exception_fraction,
                            "kvar_weighted": t.kvar_weighted})


def md_j_lower_bound(g, j, mu_j, cap=DISCREPANCY_CAP, seed=0):
    """Certified lower bound on ``md_j`` and its source.

    The converse mixing bound inverse is always available; for ``j = 1``
    the 1-partition is unique, so any witness value on it (exact within
    ``cap``, otherwise local search) is a lower bound as well.
    """
    inv = converse_inverse(mu_j, j)
    best, source = (inv, "converse_bound") if inv is not None else (0.0, "not_applicable")
    if j == 1:
        trivial = Partition.trivial(g.n)
        try:
            _check_cap(trivial, cap)
            val, how = _exact(g, trivial).value, "exact_md1"
        except CapExceededError:
            val, how = partition_discrepancy_heuristic(g, trivial, seed=seed).value, "witness_md1"
        if val > best:
            best, source = val, how
    return float(best), source, inv


def check_PIII(g, p, thresholds=None, theta=None, cap=DISCREPANCY_CAP, seed=0):
    """Small discrepancy on ``p`` and ``md_j > theta`` for every ``j < k``.

    ``md(G; p)`` is exact when every cluster pair fits under ``cap``;
    otherwise the local-search value is reported (an estimate from below)
    next to the spectral upper bound.
    """
    t = _t(thresholds)
    theta = t.theta if theta is None else theta
    g = as_graph(g)
    if not isinstance(p, Partition):
        p = Partition(p)
    k = p.k
    notes = []
    try:
        _check_cap(p, cap)
        md = _exact(g, p)
        md_kind = "exact"
    except CapExceededError:
        md = partition_discrepancy_heuristic(g, p, seed=seed)
        md_kind = "heuristic_estimate"
        notes.append("md(G;p) beyond the exact cap; local-search value used")
    try:
        values = eigh(normalized_modularity_matrix(g)).values
    except DisconnectedGraphError as err:
        return skipped("PIII", str(err))
    metrics = {"md_partition": md.value, "md_partition_kind": md_kind, "lower_bounds": {}}
    if md_kind != "exact":
        try:
            bounds = discrepancy_spectral_bounds(g, k, p)
            metrics["md_partition_upper_bound"] = bounds.upper
        except ValueError as err:
            notes.append(f"spectral upper bound unavailable: {err}")
    lower_ok = True
    for j in range(1, k):
        lb, source, inv = md_j_lower_bound(g, j, values[j - 1], cap=cap, seed=seed)
        metrics["lower_bounds"][f"md_{j}"] = {
            "value": lb, "source": source, "mu": float(values[j - 1]),
            "converse_inverse": inv,
        }
        lower_ok &= lb > theta
    if k == 1:
        notes.append("k=1: theta clause is vacuous")
        lb, source, inv = md_j_lower_bound(g, 1, values[0], cap=cap, seed=seed)
        metrics["lower_bounds"]["md_1"] = {"value": lb, "source": source,
                                           "mu": float(values[0]), "converse_inverse": inv}
    passed = lower_ok and md.value <= t.md_max
    return PropertyVerdict("PIII", bool(passed), metrics,
                           {"theta": theta, "md_max": t.md_max}, notes=notes)


def check_PIV(g, p, P_hat="estimate", thresholds=None):
    """Codegree concentration; passes iff the worst ``n^3``-normalized block deviation is small."""
    t = _t(thresholds)
    g = as_graph(g)
    rep = codegree_report(g, p, P_hat)
    metrics = {
        "max_normalized_n3": rep.max_normalized,
        "normalized_n3": rep.normalized,
        "normalized_model": rep.normalized_model,
        "P_source": rep.P_source,
    }
    return PropertyVerdict("PIV", bool(rep.max_normalized <= t.piv), metrics, _pick(t, "piv"))


def check_P0_proxy(g, k, h, thresholds=None, partition=None, seed=0):
    """Proxy for homomorphism-density convergence.

    Compares the densities of a few small patterns with the model values
    and requires PI and PIV too. This is not a test of convergence itself.
    """
    t = _t(thresholds)
    g = as_graph(g)
    hom = {}
    worst = 0.0
    for name in PROXY_PATTERNS:
        F = parse_pattern(name)
        observed, expected = hom_density(F, g), model_hom_density(F, h)
        hom[name] = {"observed": observed, "model": expected}
        worst = max(worst, abs(observed - expected))
    pi = check_PI(g, k, t, seed=seed)
    if partition is None:
        _, partition = k_variance(g, k, "plain", seed=seed)
    piv = check_PIV(g, partition, thresholds=t)
    metrics = {"hom_densities": hom, "max_hom_deviation": worst,
               "PI_pass": pi.passed, "PIV_pass": piv.passed}
    passed = worst <= t.hom_tol and pi.passed and piv.passed
    return PropertyVerdict("P0_proxy", bool(passed), metrics,
                           _pick(t, "hom_tol", "nonstructural_ratio", "kvar_plain", "piv"),
                           notes=["proxy: finite pattern densities plus PI and PIV"])


class NoStructureError(ValueError):
    pass


def classify_structure(g, k, delta=0.5):
    """``"community"``, ``"anticommunity"`` or ``"mixed"`` from the signs of the structural ``mu``."""
    if k < 2:
        raise ValueError("classification needs k >= 2")
    values = eigh(normalized_modularity_matrix(g)).values
    count, idx = structural_eigs(values, "modularity", delta=delta)
    if count != k - 1:
        raise NoStructureError("no k-structure at this delta")
    mu = values[idx]
    if np.all(mu > 0):
        return "community"
    if np.all(mu < 0):
        return "anticommunity"
    return "mixed"


# metric name -> (target exponent, allowed slope band)
RATE_METRICS = {
    "nonstructural_sqrt": (0.0, (-0.3, 0.2)),
    "mu_k": (-0.5, (-math.inf, -0.25)),
    "plain_kvariance": (-1.0, (-math.inf, -0.8)),
    "weighted_kvariance": (-1.0, (-math.inf, -0.8)),
    "md_planted": (-0.5, (-math.inf, -0.2)),
    "piv_statistic": (-0.5, (-math.inf, -0.25)),
}


@dataclass(frozen=True)
class RateReport:
    metric: str
    sizes: list
    means: list
    cells: list
    slope: float
    target: float
    band: tuple
    within_band: bool
    decreasing: bool

    def to_dict(self):
        return _jsonable({
            "metric": self.metric, "sizes": self.sizes, "means": self.means,
            "slope": self.slope, "target_exponent": self.target,
            "band": [None if not math.isfinite(b) else b for b in self.band],
            "within_band": self.within_band, "decreasing": self.decreasing,
        })


def sweep_cell(model, n, seed, metrics):
    """Metric values for one generated sample (fixed proportional class sizes)."""
    spec = SampleSpec(model, n, seed=seed, fixed_sizes=proportional_sizes(model.r, n))
    s = sample(spec)
    g, k = s.graph, model.k
    out = {}
    if "nonstructural_sqrt" in metrics:
        values = eigh(g.weights).values
        out["nonstructural_sqrt"] = float(np.abs(values[k:]).max()) / math.sqrt(n)
    if "mu_k" in metrics:
        mu = eigh(normalized_modularity_matrix(g)).values
        out["mu_k"] = float(abs(mu[k - 1]))
    if "plain_kvariance" in metrics:
        out["plain_kvariance"] = k_variance(g, k, "plain", seed=seed)[0]
    if "weighted_kvariance" in metrics:
        out["weighted_kvariance"] = k_variance(g, k, "weighted", seed=seed)[0]
    if "md_planted" in metrics:
        out["md_planted"] = partition_discrepancy_heuristic(g, s.partition, seed=seed).value
    if "piv_statistic" in metrics:
        out["piv_statistic"] = codegree_report(g, s.partition, model.P).max_normalized
    return out


def _cell_job(args):
    model_dict, n, seed, metrics = args
    from .model import ModelGraph

    return n, seed, sweep_cell(ModelGraph.from_dict(model_dict), n, seed, metrics)


def loglog_slope(sizes, values):
    x, y = np.log(np.asarray(sizes, float)), np.log(np.asarray(values, float))
    return float(np.polyfit(x, y, 1)[0])


def rate_sweep(model, sizes, seeds, metrics=("weighted_kvariance",), jobs=1):
    """Mean of each metric over ``seeds`` per size, with the fitted log-log slope.

    Results do not depend on ``jobs``: cells are pure and sorted by
    ``(n, seed)`` before aggregation.
    """
    sizes = sorted(int(n) for n in sizes)
    seeds = [int(s) for s in seeds]
    metrics = list(metrics)
    if len(set(sizes)) < 3:
        raise ValueError("a rate sweep needs at least 3 distinct sizes")
    if not seeds:
        raise ValueError("a rate sweep needs at least one seed")
    for m in metrics:
        if m not in RATE_METRICS:
            raise ValueError(f"unknown metric {m!r}; choose from {sorted(RATE_METRICS)}")
    grid = [(model.to_dict(), n, s, metrics) for n in sizes for s in seeds]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_cell_job, grid))
    else:
        results = [_cell_job(a) for a in grid]
    results.sort(key=lambda t: (t[0], t[1]))
    reports = {}
    for m in metrics:
        cells = [(n, s, vals[m]) for n, s, vals in results]
        means = [float(np.mean([v for nn, _, v in cells if nn == n])) for n in sizes]
        if min(means) > 0:
            slope = loglog_slope(sizes, means)
        else:
            slope = -math.inf
        target, band = RATE_METRICS[m]
        reports[m] = RateReport(
            m, sizes, means, cells, slope, target, band,
            bool(band[0] <= slope <= band[1]),
            all(b < a for a, b in zip(means, means[1:])))
    return reports
