"""Weighted graph data model, vertex partitions and the edge-list format."""

import re

import numpy as np
from scipy.sparse.csgraph import connected_components

from ._validation import check_adjacency, check_labels, check_vertex_set


class EmptyGraphError(ValueError):
    pass


class DegenerateSubsetError(ValueError):
    pass


class WeightedGraph:
    """Undirected edge-weighted graph stored as a dense symmetric matrix.

    The graph is immutable: the weight matrix and degree vector are
    read-only views computed once at construction.

    Parameters
    ----------
    weights : array-like of shape (n, n)
        Symmetric nonnegative weights with zero diagonal.
    allow_loops : bool, default=False
        Accept nonzero diagonal entries. Only meant for building exact
        block-constant oracles; every analysis assumes a loop-free graph.
    """

    def __init__(self, weights, allow_loops=False):
        a = check_adjacency(weights, allow_loops=allow_loops)
        a.setflags(write=False)
        self._weights = a
        d = a.sum(axis=1)
        d.setflags(write=False)
        self._degrees = d

    @classmethod
    def from_edges(cls, n, edges):
        """Build from ``(u, v)`` or ``(u, v, w)`` tuples; symmetric closure applied."""
        a = np.zeros((n, n))
        for e in edges:
            u, v = int(e[0]), int(e[1])
            w = float(e[2]) if len(e) > 2 else 1.0
            a[u, v] = a[v, u] = w
        return cls(a)

    @property
    def n(self):
        return self._weights.shape[0]

    @property
    def weights(self):
        return self._weights

    @property
    def degrees(self):
        return self._degrees

    @property
    def total_weight(self):
        return float(self._degrees.sum())

    @property
    def simple_flag(self):
        w = self._weights
        return bool(np.all((w == 0) | (w == 1)))

    def edges(self):
        """Upper-triangle edges as ``(u, v, w)`` in lexicographic order."""
        iu, ju = np.nonzero(np.triu(self._weights, 1))
        return [(int(u), int(v), float(self._weights[u, v])) for u, v in zip(iu, ju)]

    def n_edges(self):
        return int(np.count_nonzero(np.triu(self._weights, 1)))

    def scaled(self, c):
        return WeightedGraph(self._weights * float(c))

    def subgraph(self, members):
        idx = check_vertex_set(members, self.n)
        return WeightedGraph(self._weights[np.ix_(idx, idx)])

    def __repr__(self):
        return f"WeightedGraph(n={self.n}, edges={self.n_edges()})"


def as_graph(g):
    return g if isinstance(g, WeightedGraph) else WeightedGraph(g)


class Partition:
    """A proper k-partition of ``n`` vertices given by cluster labels.

    Labels must lie in ``0..k-1`` and every cluster must be nonempty.
    """

    def __init__(self, labels, k=None):
        labels = check_labels(labels)
        if labels.size == 0:
            raise ValueError("partition of an empty vertex set")
        if k is None:
            k = int(labels.max()) + 1
        k = int(k)
        if k < 1:
            raise ValueError("k must be positive")
        if labels.max() >= k:
            raise ValueError(f"label {int(labels.max())} out of range for k={k}")
        sizes = np.bincount(labels, minlength=k)
        if np.any(sizes == 0):
            empty = [int(i) for i in np.flatnonzero(sizes == 0)]
            raise ValueError(f"empty clusters {empty}; a proper partition is required")
        labels.setflags(write=False)
        self._labels = labels
        self._k = k
        self._sizes = sizes

    @classmethod
    def from_clusters(cls, clusters, n=None):
        n = n if n is not None else sum(len(c) for c in clusters)
        labels = np.full(n, -1, dtype=np.int64)
        for i, members in enumerate(clusters):
            for v in members:
                if labels[v] != -1:
                    raise ValueError(f"vertex {v} assigned twice")
                labels[v] = i
        if np.any(labels < 0):
            raise ValueError("some vertices are unassigned")
        return cls(labels, k=len(clusters))

    @classmethod
    def trivial(cls, n):
        return cls(np.zeros(n, dtype=np.int64), k=1)

    @property
    def labels(self):
        return self._labels

    @property
    def k(self):
        return self._k

    @property
    def n(self):
        return self._labels.shape[0]

    @property
    def sizes(self):
        return self._sizes.copy()

    def cluster(self, i):
        return np.flatnonzero(self._labels == i)

    def clusters(self):
        return [self.cluster(i) for i in range(self._k)]

    def canonical(self):
        """Relabel clusters in order of first occurrence."""
        mapping = {}
        for lab in self._labels:
            mapping.setdefault(int(lab), len(mapping))
        return Partition([mapping[int(v)] for v in self._labels], k=self._k)

    def __eq__(self, other):
        return (isinstance(other, Partition) and self._k == other._k
                and np.array_equal(self._labels, other._labels))

    def __repr__(self):
        return f"Partition(n={self.n}, k={self._k}, sizes={self._sizes.tolist()})"


def normalize_weights(g):
    """Rescale the weights so that they sum to one over all ordered pairs."""
    g = as_graph(g)
    total = g.total_weight
    if total <= 0:
        raise EmptyGraphError("empty graph")
    if abs(total - 1.0) <= 1e-15:
        return g
    return WeightedGraph(g.weights / total, allow_loops=bool(np.any(np.diag(g.weights))))


def volume(g, X):
    g = as_graph(g)
    idx = check_vertex_set(X, g.n)
    return float(g.degrees[idx].sum())


def weighted_cut(g, X, Y):
    """Sum of ``a_ij`` over ``i`` in X and ``j`` in Y (overlap allowed)."""
    g = as_graph(g)
    xi = check_vertex_set(X, g.n)
    yi = check_vertex_set(Y, g.n)
    if xi.size == 0 or yi.size == 0:
        return 0.0
    return float(g.weights[np.ix_(xi, yi)].sum())


def volume_density(g, X, Y):
    g = as_graph(g)
    vx, vy = volume(g, X), volume(g, Y)
    if vx <= 0 or vy <= 0:
        raise DegenerateSubsetError("degenerate subset")
    return weighted_cut(g, X, Y) / (vx * vy)


def is_connected(g):
    g = as_graph(g)
    if g.n <= 1:
        return True
    n_comp, _ = connected_components(g.weights > 0, directed=False)
    return n_comp == 1


_N_DIRECTIVE = re.compile(r"#\s*n\s*=\s*(\d+)")


def read_edge_list(path_or_lines, n=None):
    """Parse the ``u v [w]`` edge-list format.

    Ids are 0-based, ``#`` starts a comment and a ``# n=<count>`` comment
    fixes the vertex count (otherwise it is ``max id + 1``). Duplicate
    unordered pairs and self-loops are errors.
    """
    if isinstance(path_or_lines, (str, bytes)) or hasattr(path_or_lines, "__fspath__"):
        with open(path_or_lines) as fh:
            lines = fh.read().splitlines()
    else:
        lines = list(path_or_lines)
    edges = {}
    declared_n = None
    for lineno, raw in enumerate(lines, 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            m = _N_DIRECTIVE.fullmatch(line)
            if m:
                declared_n = int(m.group(1))
            continue
        line = line.split("#", 1)[0]
        parts = line.split()
        if len(parts) not in (2, 3):
            raise ValueError(f"line {lineno}: expected 'u v [w]'")
        u, v = int(parts[0]), int(parts[1])
        w = float(parts[2]) if len(parts) == 3 else 1.0
        if u < 0 or v < 0:
            raise ValueError(f"line {lineno}: negative vertex id")
        if u == v:
            raise ValueError(f"line {lineno}: self-loop {u}")
        key = (min(u, v), max(u, v))
        if key in edges:
            raise ValueError(f"line {lineno}: duplicate edge {key}")
        edges[key] = w
    top = max((max(k) for k in edges), default=-1) + 1
    if n is None:
        n = declared_n if declared_n is not None else top
    if top > n:
        raise ValueError(f"vertex id {top - 1} exceeds declared n={n}")
    return WeightedGraph.from_edges(n, [(u, v, w) for (u, v), w in edges.items()])


def format_edge_list(g):
    """Serialize ``g`` with a ``# n=`` header; unit weights are omitted."""
    g = as_graph(g)
    out = [f"# n={g.n}"]
    for u, v, w in g.edges():
        out.append(f"{u} {v}" if w == 1.0 else f"{u} {v} {w!r}")
    return "\n".join(out) + "\n"


def write_edge_list(g, path):
    with open(path, "w", newline="\n") as fh:
        fh.write(format_edge_list(g))
