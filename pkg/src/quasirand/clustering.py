"""Spectral vertex representatives, weighted k-means and k-variances.

Two embeddings are provided:

* adjacency representatives: rows of the ``n x k`` matrix of eigenvectors
  of ``A`` for the ``k`` eigenvalues largest in absolute value, clustered
  with plain k-means; the optimum is the k-variance ``S_k^2``;
* modularity representatives: rows of ``D^-1/2 [u_1 .. u_{k-1}]`` where
  ``u_i`` are eigenvectors of the normalized modularity matrix, clustered
  with degree-weighted k-means; the optimum is the weighted k-variance.

The estimators follow the scikit-learn conventions so they compose with
pipelines and model selection utilities.
"""

import warnings
from dataclasses import dataclass, field
from itertools import permutations

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from ._validation import check_seed
from .graph import Partition, as_graph, normalize_weights
from .numerics import eigh
from .spectra import normalized_modularity_matrix

DEFAULT_RESTARTS = 20
DEFAULT_MAX_ITER = 500
DEFAULT_TOL = 1e-9
GAP_TOL = 1e-10
MAX_MATCH_K = 8


class UnstableSubspaceWarning(UserWarning):
    pass


@dataclass(frozen=True)
class Embedding:
    points: np.ndarray
    weights: np.ndarray
    source: str
    eigenvalues: np.ndarray
    warning: str = None


@dataclass(frozen=True)
class KMeansResult:
    partition: Partition
    centers: np.ndarray
    objective: float
    restarts_used: int
    history: list = field(default=None, repr=False)


def _rel_gap_too_small(values, k):
    if k >= values.size:
        return False
    scale = max(1.0, abs(values[0]))
    return abs(abs(values[k - 1]) - abs(values[k])) <= GAP_TOL * scale


def adjacency_representatives(g, k):
    g = as_graph(g)
    if not 1 <= k < g.n:
        raise ValueError(f"need 1 <= k < n, got k={k}, n={g.n}")
    es = eigh(g.weights)
    warn = None
    if _rel_gap_too_small(es.values, k):
        warn = "unstable subspace"
        warnings.warn(f"|lambda_{k}| = |lambda_{k + 1}|: unstable subspace", UnstableSubspaceWarning)
    return Embedding(es.vectors[:, :k].copy(), np.ones(g.n), "adjacency",
                     es.values[:k].copy(), warn)


def modularity_representatives(g, k):
    g = as_graph(g)
    if k < 2:
        raise ValueError("modularity representatives need k >= 2 (for k = 1 the weighted variance is 0)")
    if k > g.n:
        raise ValueError(f"k={k} exceeds n={g.n}")
    es = eigh(normalized_modularity_matrix(g))
    warn = None
    if _rel_gap_too_small(es.values, k - 1):
        warn = "unstable subspace"
        warnings.warn(f"|mu_{k - 1}| = |mu_{k}|: unstable subspace", UnstableSubspaceWarning)
    d = normalize_weights(g).degrees
    points = es.vectors[:, :k - 1] / np.sqrt(d)[:, None]
    return Embedding(points, d.copy(), "modularity", es.values[:k - 1].copy(), warn)


def _sq_dists(X, centers):
    return ((X[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)


def _weighted_means(X, w, labels, k):
    d = X.shape[1]
    mass = np.bincount(labels, weights=w, minlength=k)
    sums = np.zeros((k, d))
    np.add.at(sums, labels, X * w[:, None])
    counts = np.bincount(labels, minlength=k)
    centers = np.full((k, d), np.nan)
    ok = mass > 0
    centers[ok] = sums[ok] / mass[ok, None]
    # zero-mass but nonempty clusters fall back to the plain mean
    zero = (~ok) & (counts > 0)
    for i in np.flatnonzero(zero):
        centers[i] = X[labels == i].mean(axis=0)
    return centers, counts


def _objective(X, w, labels, centers):
    return float(np.sum(w * ((X - centers[labels]) ** 2).sum(axis=1)))


def _kmeans_pp(X, w, k, rng):
    n = X.shape[0]
    p = w / w.sum() if w.sum() > 0 else np.full(n, 1.0 / n)
    centers = [X[rng.choice(n, p=p)]]
    closest = ((X - centers[0]) ** 2).sum(axis=1)
    for _ in range(1, k):
        score = w * closest
        total = score.sum()
        if total <= 0:
            # every point coincides with a chosen center: take the first unused point
            idx = int(np.argmax(closest > 0)) if np.any(closest > 0) else 0
        else:
            idx = rng.choice(n, p=score / total)
        centers.append(X[idx])
        closest = np.minimum(closest, ((X - X[idx]) ** 2).sum(axis=1))
    return np.array(centers)


def _lloyd(X, w, centers, max_iter, tol):
    k = centers.shape[0]
    labels = np.argmin(_sq_dists(X, centers), axis=1)
    obj = _objective(X, w, labels, centers)
    history = [obj]
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        centers, counts = _weighted_means(X, w, labels, k)
        empty = np.flatnonzero(counts == 0)
        if empty.size:
            cost = w * ((X - centers[labels]) ** 2).sum(axis=1)
            taken = set()
            for i in empty:
                order = np.argsort(-cost, kind="stable")
                pick = next(int(v) for v in order if int(v) not in taken)
                taken.add(pick)
                centers[i] = X[pick]
        new_labels = np.argmin(_sq_dists(X, centers), axis=1)
        new_obj = _objective(X, w, new_labels, centers)
        assert new_obj <= obj + 1e-12 * max(1.0, abs(obj)), "k-means objective increased"
        history.append(new_obj)
        converged = np.array_equal(new_labels, labels) or obj - new_obj <= tol * obj
        labels, obj = new_labels, new_obj
        if converged:
            break
    centers, counts = _weighted_means(X, w, labels, k)
    return labels, centers, _objective(X, w, labels, centers), history, n_iter


def _restart_rngs(seed, restarts):
    children = np.random.SeedSequence(check_seed(seed)).spawn(restarts)
    return [np.random.Generator(np.random.PCG64(c)) for c in children]


def kmeans(e, k, restarts=DEFAULT_RESTARTS, seed=0, weights=None,
           max_iter=DEFAULT_MAX_ITER, tol=DEFAULT_TOL):
    """Weighted Lloyd k-means with k-means++ seeding; best of ``restarts`` runs.

    Parameters
    ----------
    e : Embedding or array-like of shape (n, d)
    k : int
    restarts : int
    seed : int
        Restart ``i`` uses the ``i``-th child of ``SeedSequence(seed)``.
    weights : array-like of shape (n,), optional
        Overrides the embedding weights (default: unit weights for arrays).

    Returns
    -------
    KMeansResult
    """
    if isinstance(e, Embedding):
        X, w = e.points, e.weights
    else:
        X, w = np.asarray(e, dtype=np.float64), None
    if X.ndim == 1:
        X = X[:, None]
    if weights is not None:
        w = np.asarray(weights, dtype=np.float64)
    if w is None:
        w = np.ones(X.shape[0])
    if np.any(w < 0):
        raise ValueError("weights must be nonnegative")
    n_distinct = np.unique(X, axis=0).shape[0]
    if k < 1 or k > n_distinct:
        raise ValueError(f"k={k} exceeds the number of distinct points ({n_distinct})")
    best = None
    for rng in _restart_rngs(seed, restarts):
        init = _kmeans_pp(X, w, k, rng)
        labels, centers, obj, history, _ = _lloyd(X, w, init, max_iter, tol)
        if np.unique(labels).size < k:
            continue
        if best is None or obj < best[2]:
            best = (labels, centers, obj, history)
    if best is None:
        raise RuntimeError("every restart ended with an empty cluster")
    labels, centers, obj, history = best
    return KMeansResult(Partition(labels, k=k), centers, obj, restarts, history)


def k_variance(g, k, which="weighted", restarts=DEFAULT_RESTARTS, seed=0):
    """Plain (adjacency) or weighted (modularity) k-variance and its minimizing partition."""
    g = as_graph(g)
    if which == "plain":
        emb = adjacency_representatives(g, k)
    elif which == "weighted":
        if k == 1:
            return 0.0, Partition.trivial(g.n)
        emb = modularity_representatives(g, k)
    else:
        raise ValueError(f"which must be 'plain' or 'weighted', got {which!r}")
    res = kmeans(emb, k, restarts=restarts, seed=seed)
    return res.objective, res.partition


def k_clusterable(g, k, eps, restarts=DEFAULT_RESTARTS, seed=0):
    """Check ``S_k^2 <= eps^2 S_{k-1}^2`` on the k-dimensional adjacency representatives.

    Returns ``(flag, s_k, s_km1)`` with the two variances.
    """
    if k < 2:
        raise ValueError("k-clusterability compares k with k-1 >= 1")
    emb = adjacency_representatives(g, k)
    s_k = kmeans(emb, k, restarts=restarts, seed=seed).objective
    s_km1 = kmeans(emb, k - 1, restarts=restarts, seed=seed).objective
    return bool(s_k <= eps ** 2 * s_km1), s_k, s_km1


def match_partitions(p, q):
    """Best agreement fraction over label permutations (exhaustive, k <= 8).

    Returns ``(accuracy, perm)`` where ``perm[i]`` is the label in ``q``
    matched to label ``i`` of ``p``.
    """
    if not isinstance(p, Partition):
        p = Partition(p)
    if not isinstance(q, Partition):
        q = Partition(q)
    if p.n != q.n or p.k != q.k:
        raise ValueError("partitions must have the same n and k")
    k = p.k
    if k > MAX_MATCH_K:
        raise ValueError(f"k={k} exceeds {MAX_MATCH_K} for exhaustive matching")
    conf = np.zeros((k, k), dtype=np.int64)
    np.add.at(conf, (p.labels, q.labels), 1)
    rows = np.arange(k)
    best, best_perm = -1, None
    for perm in permutations(range(k)):
        agree = int(conf[rows, perm].sum())
        if agree > best:
            best, best_perm = agree, perm
    return best / p.n, tuple(best_perm)


class WeightedKMeans(ClusterMixin, BaseEstimator):
    """Weighted k-means (Lloyd iterations, k-means++ seeding, best of restarts).

    Parameters
    ----------
    n_clusters : int, default=2
    n_init : int, default=20
        Number of seeded restarts.
    max_iter : int, default=500
    tol : float, default=1e-9
        Relative decrease of the objective below which iterations stop.
    random_state : int, default=0

    Attributes
    ----------
    labels_ : ndarray of shape (n_samples,)
    cluster_centers_ : ndarray of shape (n_clusters, n_features)
    inertia_ : float
        Weighted within-cluster sum of squares of the best restart.
    inertia_history_ : list of float
        Objective after each Lloyd iteration of the best restart.
    """

    def __init__(self, n_clusters=2, n_init=DEFAULT_RESTARTS, max_iter=DEFAULT_MAX_ITER,
                 tol=DEFAULT_TOL, random_state=0):
        self.n_clusters = n_clusters
        self.n_init = n_init
        self.max_iter = max_iter
        self.tol = tol
        self.random_state = random_state

    def fit(self, X, y=None, sample_weight=None):
        X = check_array(X, dtype=np.float64)
        res = kmeans(X, self.n_clusters, restarts=self.n_init, seed=self.random_state,
                     weights=sample_weight, max_iter=self.max_iter, tol=self.tol)
        self.labels_ = res.partition.labels.copy()
        self.cluster_centers_ = res.centers
        self.inertia_ = res.objective
        self.inertia_history_ = res.history
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "cluster_centers_")
        X = check_array(X, dtype=np.float64)
        return np.argmin(_sq_dists(X, self.cluster_centers_), axis=1)


class SpectralRepresentatives(TransformerMixin, BaseEstimator):
    """Map an adjacency matrix to spectral vertex representatives.

    ``kind="modularity"`` gives the ``(k-1)``-dimensional degree-scaled
    representatives, ``kind="adjacency"`` the ``k``-dimensional adjacency
    ones. ``transform`` is transductive: it embeds the vertices of the
    graph it is given.
    """

    def __init__(self, n_clusters=2, kind="modularity"):
        self.n_clusters = n_clusters
        self.kind = kind

    def _embed(self, A):
        if self.kind == "modularity":
            return modularity_representatives(A, self.n_clusters)
        if self.kind == "adjacency":
            return adjacency_representatives(A, self.n_clusters)
        raise ValueError(f"unknown kind {self.kind!r}")

    def fit(self, X, y=None):
        emb = self._embed(X)
        self.embedding_ = emb.points
        self.sample_weight_ = emb.weights
        self.eigenvalues_ = emb.eigenvalues
        self.n_features_in_ = np.asarray(X).shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "embedding_")
        return self._embed(X).points


class KVarianceClustering(ClusterMixin, BaseEstimator):
    """Spectral clustering that minimizes the (weighted) k-variance.

    Parameters
    ----------
    n_clusters : int, default=2
    weighted : bool, default=True
        Cluster the degree-weighted modularity representatives (``True``)
        or the plain adjacency representatives (``False``).
    n_init : int, default=20
    random_state : int, default=0

    Attributes
    ----------
    labels_ : ndarray of shape (n_vertices,)
    partition_ : Partition
    variance_ : float
        The attained k-variance.
    embedding_ : ndarray
    """

    def __init__(self, n_clusters=2, weighted=True, n_init=DEFAULT_RESTARTS, random_state=0):
        self.n_clusters = n_clusters
        self.weighted = weighted
        self.n_init = n_init
        self.random_state = random_state

    def fit(self, X, y=None):
        g = as_graph(X)
        k = self.n_clusters
        if self.weighted and k == 1:
            self.embedding_ = np.zeros((g.n, 0))
            self.variance_ = 0.0
            self.partition_ = Partition.trivial(g.n)
        else:
            emb = (modularity_representatives(g, k) if self.weighted
                   else adjacency_representatives(g, k))
            res = kmeans(emb, k, restarts=self.n_init, seed=self.random_state)
            self.embedding_ = emb.points
            self.variance_ = res.objective
            self.partition_ = res.partition
        self.labels_ = self.partition_.labels.copy()
        self.n_features_in_ = g.n
        return self
