"""Model graphs: cluster ratios plus a symmetric edge-probability matrix.

The limit of the normalized modularity spectrum for a generalized random
graph on model ``(r, P)`` is read off a k x k matrix. With class degrees
``D_i = sum_l p_il r_l``, set

    B_ij = p_ij * sqrt(r_i r_j) / sqrt(D_i D_j).

``B`` is similar to ``diag(D)^-1 P diag(r)``, whose rows sum to one, so its
Perron root is exactly 1 with eigenvector ``sqrt(r_i D_i)``. A blown-up
graph with class sizes ``n r_i`` has the same nonzero normalized adjacency
spectrum as ``B``; subtracting the rank-one ``sqrt(d) sqrt(d)^T`` term removes
the Perron root, so the remaining k-1 eigenvalues of ``B`` are the structural
values of the normalized modularity matrix.
"""

import json
from dataclasses import dataclass

import numpy as np

from ._validation import check_symmetric

RANK_TOL = 1e-8
MAX_PATTERN_VERTICES = 8


class ModelError(ValueError):
    """Invalid model; ``invariant`` names the violated condition."""

    def __init__(self, invariant, message):
        super().__init__(f"{invariant}: {message}")
        self.invariant = invariant


class ModelGraph:
    """Model graph ``H``: k classes with ratios ``r`` and edge probabilities ``P``.

    Validation requires ``r > 0`` summing to one, ``P`` symmetric with
    entries in ``[0, 1]`` and full rank (smallest ``|eigenvalue| > rank_tol``).
    """

    def __init__(self, r, P, rank_tol=RANK_TOL):
        r = np.asarray(r, dtype=np.float64)
        P = np.asarray(P, dtype=np.float64)
        if r.ndim != 1 or r.size == 0:
            raise ModelError("r_shape", "r must be a nonempty vector")
        k = r.size
        if P.shape != (k, k):
            raise ModelError("P_shape", f"P must be {k}x{k}, got {P.shape}")
        if np.any(r <= 0):
            raise ModelError("r_positive", "cluster ratios must be positive")
        if abs(r.sum() - 1.0) > 1e-12:
            raise ModelError("r_sum", f"cluster ratios sum to {float(r.sum()):.12g}, not 1")
        try:
            check_symmetric(P, "P")
        except ValueError:
            raise ModelError("P_symmetric", "P must be symmetric") from None
        if np.any(P < 0) or np.any(P > 1):
            raise ModelError("P_range", "entries of P must lie in [0, 1]")
        smallest = float(np.min(np.abs(np.linalg.eigvalsh(P))))
        if smallest <= rank_tol:
            raise ModelError("P_rank", f"P is rank deficient (smallest |eigenvalue| {smallest:.3g})")
        r = r.copy()
        r.setflags(write=False)
        P = (P + P.T) / 2.0
        P.setflags(write=False)
        self.r = r
        self.P = P

    @property
    def k(self):
        return self.r.size

    def class_degrees(self):
        """Expected degree fraction ``D_i = sum_l p_il r_l`` of each class."""
        return self.P @ self.r

    def __repr__(self):
        return f"ModelGraph(k={self.k}, r={self.r.tolist()}, P={self.P.tolist()})"

    def to_dict(self):
        return {"k": self.k, "r": self.r.tolist(), "P": self.P.tolist()}

    @classmethod
    def from_dict(cls, data):
        if not isinstance(data, dict):
            raise ModelError("json_object", "model must be a JSON object")
        for key in ("r", "P"):
            if key not in data:
                raise ModelError(f"{key}_missing", f"model is missing '{key}'")
        model = cls(data["r"], data["P"])
        if "k" in data and data["k"] != model.k:
            raise ModelError("k_mismatch", f"k={data['k']} but r has {model.k} entries")
        return model


def load_model(path):
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ModelError("json_syntax", str(exc)) from None
    return ModelGraph.from_dict(data)


def proportional_sizes(r, n):
    """Integer class sizes summing to ``n``, proportional to ``r`` (largest remainder)."""
    r = np.asarray(r, dtype=np.float64)
    raw = r * n
    sizes = np.floor(raw).astype(np.int64)
    short = n - int(sizes.sum())
    order = np.lexsort((np.arange(r.size), -(raw - sizes)))
    sizes[order[:short]] += 1
    return sizes


def blow_up(h, sizes):
    """Block-constant ``n x n`` matrix with value ``p_ij`` on block ``U_i x U_j``.

    Vertices are ordered by class. Diagonal entries of diagonal blocks keep
    ``p_ii`` so that the result has exactly the rank of ``P``.
    """
    sizes = np.asarray(sizes, dtype=np.int64)
    if sizes.shape != (h.k,) or np.any(sizes <= 0):
        raise ValueError("sizes must be k positive integers")
    labels = np.repeat(np.arange(h.k), sizes)
    return h.P[np.ix_(labels, labels)]


def blowup_spectrum(h, sizes):
    """Nonzero eigenvalues of ``blow_up(h, sizes)`` via the k x k matrix ``S^1/2 P S^1/2``."""
    sizes = np.asarray(sizes, dtype=np.float64)
    root = np.sqrt(sizes)
    small = root[:, None] * h.P * root[None, :]
    values = np.linalg.eigvalsh(small)
    order = np.lexsort((-values, -np.abs(values)))
    return values[order]


@dataclass(frozen=True)
class ModelSpectrum:
    trivial_value: float
    structural_values: np.ndarray


def surrogate_matrix(h):
    D = h.class_degrees()
    if np.any(D <= 0):
        raise ModelError("isolated_class", "isolated class (zero expected degree)")
    scale = np.sqrt(h.r / D)
    return scale[:, None] * h.P * scale[None, :]


def model_spectrum(h):
    """Limit values of the normalized modularity spectrum for model ``h``."""
    B = surrogate_matrix(h)
    values = np.linalg.eigvalsh(B)
    perron = int(np.argmax(values))
    trivial = float(values[perron])
    rest = np.delete(values, perron)
    order = np.lexsort((-rest, -np.abs(rest)))
    return ModelSpectrum(trivial, rest[order])


def graphon_value(h, x, y):
    """Step-function graphon of ``h`` at ``(x, y)`` in ``[0, 1)^2``."""
    for t in (x, y):
        if not 0.0 <= t < 1.0:
            raise ValueError("graphon arguments must lie in [0, 1)")
    edges = np.cumsum(h.r)[:-1]
    i = int(np.searchsorted(edges, x, side="right"))
    j = int(np.searchsorted(edges, y, side="right"))
    return float(h.P[i, j])


def model_hom_density(F, h):
    """Homomorphism density of pattern ``F`` in ``h`` by summing over all k^s maps."""
    from .subgraphs import as_pattern

    F = as_pattern(F)
    s = F.s
    if s > MAX_PATTERN_VERTICES:
        raise ValueError(f"pattern has {s} vertices; at most {MAX_PATTERN_VERTICES} supported")
    if s == 0:
        return 1.0
    maps = np.indices((h.k,) * s).reshape(s, -1)
    weight = np.prod(h.r[maps], axis=0)
    for u, v in F.edges:
        weight = weight * h.P[maps[u], maps[v]]
    return float(weight.sum())
