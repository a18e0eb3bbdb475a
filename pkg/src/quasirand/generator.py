"""Sampling generalized random graphs (stochastic block models) from a model graph.

Draw order, which fixes the output for a given seed:

1. memberships (multinomial mode only): one uniform ``u_v`` per vertex in
   index order, ``c_v`` = first class whose cumulative ratio exceeds ``u_v``;
   on an empty class the next ``n`` uniforms are drawn, up to 100 attempts;
2. edges: one uniform per unordered pair ``(u, v)``, ``u < v``, in
   lexicographic order; the edge is present iff the uniform is below
   ``p_{c_u c_v}``.

In fixed-sizes mode vertices ``0..n_1-1`` form class 0, the next ``n_2``
class 1, and so on, and no membership draws are made.
"""

from dataclasses import dataclass, field

import numpy as np

from ._validation import check_seed
from .graph import Partition, WeightedGraph
from .model import ModelGraph, blow_up
from .numerics import seeded_rng

MAX_MEMBERSHIP_ATTEMPTS = 100


class EmptyClusterError(RuntimeError):
    pass


@dataclass(frozen=True)
class SampleSpec:
    model: ModelGraph
    n: int
    seed: int = 0
    fixed_sizes: tuple = None

    def __post_init__(self):
        n = int(self.n)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "seed", check_seed(self.seed))
        if n < self.model.k:
            raise ValueError(f"n={n} is smaller than k={self.model.k}")
        if self.fixed_sizes is not None:
            sizes = tuple(int(s) for s in self.fixed_sizes)
            if len(sizes) != self.model.k:
                raise ValueError("fixed_sizes must have one entry per class")
            if any(s <= 0 for s in sizes) or sum(sizes) != n:
                raise ValueError("fixed_sizes must be positive and sum to n")
            object.__setattr__(self, "fixed_sizes", sizes)

    @property
    def membership_mode(self):
        return "multinomial" if self.fixed_sizes is None else "fixed_sizes"

    def to_dict(self):
        return {
            "model": self.model.to_dict(),
            "n": self.n,
            "seed": self.seed,
            "membership_mode": self.membership_mode,
            "fixed_sizes": list(self.fixed_sizes) if self.fixed_sizes else None,
        }


@dataclass(frozen=True)
class LabeledSample:
    graph: WeightedGraph
    partition: Partition
    spec: SampleSpec = field(repr=False)

    def block_edge_counts(self):
        """Edge counts per class pair; ``[i, i]`` counts each edge once."""
        A = self.graph.weights
        H = np.zeros((self.graph.n, self.partition.k))
        H[np.arange(self.graph.n), self.partition.labels] = 1.0
        cuts = H.T @ A @ H
        counts = cuts.copy()
        counts[np.diag_indices_from(counts)] /= 2.0
        return np.rint(counts).astype(np.int64)


def _draw_memberships(rng, r, n):
    cum = np.cumsum(r)
    cum[-1] = 1.0
    for _ in range(MAX_MEMBERSHIP_ATTEMPTS):
        labels = np.searchsorted(cum, rng.random(n), side="right")
        if np.all(np.bincount(labels, minlength=r.size) > 0):
            return labels
    raise EmptyClusterError(
        f"empty cluster in {MAX_MEMBERSHIP_ATTEMPTS} membership draws; "
        "resample or use fixed_sizes")


def sample(spec):
    """Draw one graph and its planted partition for ``spec``."""
    h = spec.model
    rng = seeded_rng(spec.seed)
    if spec.fixed_sizes is None:
        labels = _draw_memberships(rng, h.r, spec.n)
    else:
        labels = np.repeat(np.arange(h.k), spec.fixed_sizes)
    n = spec.n
    iu, ju = np.triu_indices(n, 1)
    probs = h.P[labels[iu], labels[ju]]
    present = rng.random(iu.size) < probs
    A = np.zeros((n, n))
    A[iu[present], ju[present]] = 1.0
    A += A.T
    return LabeledSample(WeightedGraph(A), Partition(labels, k=h.k), spec)


def decompose(s):
    """Split ``A = B + W`` into the blown-up model matrix and the noise.

    ``B[u, v] = p_{c_u c_v}`` for every pair including ``u = v``, so ``W``
    carries ``-p_ii`` on the diagonal.
    """
    labels = s.partition.labels
    B = s.spec.model.P[np.ix_(labels, labels)]
    W = s.graph.weights - B
    return B, W


def blowup_graph(h, sizes):
    """Loop-free deterministic graph: ``blow_up(h, sizes)`` with zero diagonal."""
    B = blow_up(h, sizes).copy()
    np.fill_diagonal(B, 0.0)
    labels = np.repeat(np.arange(h.k), np.asarray(sizes, dtype=np.int64))
    return WeightedGraph(B), Partition(labels, k=h.k)


@dataclass(frozen=True)
class BalancingReport:
    n: list
    max_deviation: list
    min_ratio: list
    weak_pass: list
    monotone: bool


def balancing_report(samples, c=None):
    """Cluster-size balance along a sequence of samples of growing ``n``.

    Reports ``max_i |n_i/n - r_i|`` per sample, the weak condition
    ``min_i n_i/n >= c`` (when ``c`` is given) and whether the deviations
    are non-increasing in ``n``.
    """
    samples = list(samples)
    if len(samples) < 2:
        raise ValueError("balancing_report needs at least two samples")
    rows = []
    for s in samples:
        n = s.graph.n
        ratios = s.partition.sizes / float(n)
        dev = float(np.max(np.abs(ratios - s.spec.model.r)))
        rows.append((n, dev, float(ratios.min())))
    rows.sort(key=lambda t: t[0])
    devs = [t[1] for t in rows]
    monotone = all(b <= a + 1e-15 for a, b in zip(devs, devs[1:]))
    weak = [None if c is None else bool(t[2] >= c) for t in rows]
    return BalancingReport([t[0] for t in rows], devs, [t[2] for t in rows], weak, monotone)
