"""Modularity and normalized modularity matrices and their structural eigenvalues."""

from dataclasses import dataclass

import numpy as np

from .graph import as_graph, is_connected, normalize_weights
from .model import model_spectrum
from .numerics import EigenSystem, eigh

DEFAULT_DELTA = 0.5
DEFAULT_C_THR = 1.0


class DisconnectedGraphError(ValueError):
    pass


def _require_connected(g):
    if np.any(g.degrees <= 0):
        raise DisconnectedGraphError("zero-degree vertex; M_D requires irreducible A")
    if not is_connected(g):
        raise DisconnectedGraphError("M_D requires irreducible A")


def modularity_matrix(g):
    """``M = A - d d^T`` computed on the graph rescaled so that weights sum to one."""
    g = as_graph(g)
    _require_connected(g)
    g = normalize_weights(g)
    d = g.degrees
    return g.weights - np.outer(d, d)


def normalized_modularity_matrix(g):
    """``M_D = D^-1/2 A D^-1/2 - sqrt(d) sqrt(d)^T`` on the normalized graph."""
    g = as_graph(g)
    _require_connected(g)
    g = normalize_weights(g)
    root = np.sqrt(g.degrees)
    inv = 1.0 / root
    return inv[:, None] * g.weights * inv[None, :] - np.outer(root, root)


def adjacency_threshold(n, c_thr=DEFAULT_C_THR):
    """Magnitude ``c_thr * sqrt(n ln n)`` separating Theta(n) from O(sqrt n) eigenvalues."""
    return c_thr * np.sqrt(n * np.log(n)) if n > 1 else 0.0


def gap_table(values):
    mags = np.abs(np.asarray(values, dtype=np.float64))
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(mags[1:] > 0, mags[:-1] / mags[1:], np.inf)
    return ratios


def structural_eigs(es, mode="modularity", delta=DEFAULT_DELTA, c_thr=DEFAULT_C_THR, n=None):
    """Count structural eigenvalues.

    In ``"modularity"`` mode these are the ``|mu_i| > delta``; in
    ``"adjacency"`` mode the ``|lambda_i| > c_thr * sqrt(n ln n)``, with ``n``
    taken from the eigensystem size unless given.

    Returns
    -------
    count : int
    indices : ndarray of int
        Positions (in ``|.|`` order) of the structural eigenvalues.
    """
    values = es.values if isinstance(es, EigenSystem) else np.asarray(es, dtype=np.float64)
    if mode == "modularity":
        thr = delta
    elif mode == "adjacency":
        thr = adjacency_threshold(n if n is not None else values.size, c_thr)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    idx = np.flatnonzero(np.abs(values) > thr)
    return int(idx.size), idx


def largest_gap_index(values, limit=None):
    """1-based count ``i`` maximizing ``|v_i| / |v_{i+1}|`` over the first ``limit`` ratios."""
    ratios = gap_table(values)
    if limit is not None:
        ratios = ratios[:limit]
    finite = np.where(np.isfinite(ratios), ratios, np.finfo(float).max)
    return int(np.argmax(finite)) + 1 if ratios.size else 0


@dataclass(frozen=True)
class SpectralSummary:
    adjacency_eigs: EigenSystem
    modularity_eigs: EigenSystem
    structural_count_adj: int
    structural_count_mod: int
    adjacency_gap_table: np.ndarray
    modularity_gap_table: np.ndarray
    adjacency_threshold: float
    delta: float

    def to_dict(self, top=None):
        sl = slice(None) if top is None else slice(0, top)
        return {
            "adjacency_eigenvalues": self.adjacency_eigs.values[sl].tolist(),
            "modularity_eigenvalues": self.modularity_eigs.values[sl].tolist(),
            "structural_count_adjacency": self.structural_count_adj,
            "structural_count_modularity": self.structural_count_mod,
            "adjacency_gap_table": _finite_list(self.adjacency_gap_table[sl]),
            "modularity_gap_table": _finite_list(self.modularity_gap_table[sl]),
            "largest_gap_adjacency": largest_gap_index(self.adjacency_eigs.values, top),
            "thresholds": {"adjacency": self.adjacency_threshold, "delta": self.delta},
        }


def _finite_list(a):
    return [float(x) if np.isfinite(x) else None for x in a]


def spectral_summary(g, delta=DEFAULT_DELTA, c_thr=DEFAULT_C_THR):
    g = as_graph(g)
    adj = eigh(g.weights)
    mod = eigh(normalized_modularity_matrix(g))
    thr = adjacency_threshold(g.n, c_thr)
    count_adj, _ = structural_eigs(adj, "adjacency", c_thr=c_thr, n=g.n)
    count_mod, _ = structural_eigs(mod, "modularity", delta=delta)
    return SpectralSummary(adj, mod, count_adj, count_mod, gap_table(adj.values),
                           gap_table(mod.values), float(thr), float(delta))


@dataclass(frozen=True)
class ModelDeviation:
    structural_deviation: np.ndarray
    observed: np.ndarray
    expected: np.ndarray
    max_remaining: float


def spectrum_vs_model(sample_or_graph, model=None):
    """Compare the top ``k-1`` normalized modularity eigenvalues with the model limits."""
    if model is None:
        g, model = sample_or_graph.graph, sample_or_graph.spec.model
    else:
        g = as_graph(sample_or_graph)
    values = eigh(normalized_modularity_matrix(g)).values
    expected = model_spectrum(model).structural_values
    m = expected.size
    observed = values[:m]
    remaining = np.abs(values[m:])
    return ModelDeviation(np.abs(observed - expected), observed, expected,
                          float(remaining.max()) if remaining.size else 0.0)
