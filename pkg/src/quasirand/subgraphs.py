"""Homomorphism and induced-subgraph counts, cluster degrees and codegrees."""

import re
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .graph import Partition, as_graph

MAX_PATTERN_VERTICES = 8
DEFAULT_BUDGET = 5 * 10**7
_CHUNK_ENTRIES = 1 << 22


class BudgetExceededError(RuntimeError):
    pass


@dataclass(frozen=True)
class SimpleGraphPattern:
    """Small simple graph ``F`` on vertices ``0..s-1``."""

    s: int
    edges: frozenset

    def __init__(self, s, edges=()):
        s = int(s)
        if s < 0 or s > MAX_PATTERN_VERTICES:
            raise ValueError(f"patterns have 0..{MAX_PATTERN_VERTICES} vertices, got {s}")
        norm = set()
        for u, v in edges:
            u, v = int(u), int(v)
            if u == v:
                raise ValueError(f"pattern loop at {u}")
            if not (0 <= u < s and 0 <= v < s):
                raise ValueError(f"pattern edge ({u}, {v}) out of range")
            e = (min(u, v), max(u, v))
            if e in norm:
                raise ValueError(f"pattern multi-edge {e}")
            norm.add(e)
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "edges", frozenset(norm))

    @property
    def n_edges(self):
        return len(self.edges)

    def degrees(self):
        deg = [0] * self.s
        for u, v in self.edges:
            deg[u] += 1
            deg[v] += 1
        return deg

    def neighbors(self, u):
        return sorted({b if a == u else a for a, b in self.edges if u in (a, b)})

    def components(self):
        """Vertex lists of connected components, each sorted."""
        seen, comps = set(), []
        for start in range(self.s):
            if start in seen:
                continue
            stack, comp = [start], []
            seen.add(start)
            while stack:
                u = stack.pop()
                comp.append(u)
                for w in self.neighbors(u):
                    if w not in seen:
                        seen.add(w)
                        stack.append(w)
            comps.append(sorted(comp))
        return comps

    def induced(self, vertices):
        index = {v: i for i, v in enumerate(vertices)}
        return SimpleGraphPattern(
            len(vertices),
            [(index[u], index[v]) for u, v in self.edges if u in index and v in index])

    def relabeled(self, perm):
        return SimpleGraphPattern(self.s, [(perm[u], perm[v]) for u, v in self.edges])

    def is_cycle(self):
        return (self.s >= 3 and self.n_edges == self.s
                and all(d == 2 for d in self.degrees()) and len(self.components()) == 1)

    def is_path(self):
        if self.s == 0 or self.n_edges != self.s - 1 or len(self.components()) != 1:
            return False
        return all(d <= 2 for d in self.degrees())


def cycle(t):
    return SimpleGraphPattern(t, [(i, (i + 1) % t) for i in range(t)])


def path(t):
    """Path on ``t`` vertices."""
    return SimpleGraphPattern(t, [(i, i + 1) for i in range(t - 1)])


def complete(s):
    return SimpleGraphPattern(s, combinations(range(s), 2))


EDGE = complete(2)
VERTEX = complete(1)

_ALIAS = re.compile(r"([CKP])(\d+)")


def parse_pattern(text):
    """Parse ``"C4"``, ``"K3"``, ``"P3"``, ``"edge"`` or ``"s; u-v,u-v"``.

    ``Ct`` is the cycle with t edges (3 <= t <= 8), ``Ks`` the complete
    graph (s <= 5) and ``Pt`` the path on t vertices.
    """
    text = text.strip()
    if text in ("edge", "K2"):
        return EDGE
    if text == "vertex":
        return VERTEX
    m = _ALIAS.fullmatch(text)
    if m:
        kind, t = m.group(1), int(m.group(2))
        if kind == "C" and 3 <= t <= 8:
            return cycle(t)
        if kind == "K" and 1 <= t <= 5:
            return complete(t)
        if kind == "P" and 1 <= t <= 8:
            return path(t)
        raise ValueError(f"alias {text!r} out of range")
    if ";" in text:
        head, body = text.split(";", 1)
        edges = []
        for item in filter(None, (p.strip() for p in body.split(","))):
            u, v = item.split("-")
            edges.append((int(u), int(v)))
        return SimpleGraphPattern(int(head), edges)
    raise ValueError(f"cannot parse pattern {text!r}")


def as_pattern(F):
    if isinstance(F, SimpleGraphPattern):
        return F
    if isinstance(F, str):
        return parse_pattern(F)
    raise TypeError(f"expected a pattern or pattern string, got {type(F).__name__}")


def _traversal_order(F, vertices):
    """Order pattern vertices so each one (after the first) has a placed neighbor."""
    deg = F.degrees()
    order = [max(vertices, key=lambda v: (deg[v], -v))]
    rest = set(vertices) - set(order)
    while rest:
        placed = set(order)
        nxt = max(rest, key=lambda v: (len(set(F.neighbors(v)) & placed), deg[v], -v))
        order.append(nxt)
        rest.remove(nxt)
    return order


def _estimated_nodes(n, density, F, order):
    placed, total = [], 0.0
    for w in order[:-1]:
        placed.append(w)
        e = sum(1 for a, b in F.edges if a in placed and b in placed)
        total += float(n) ** len(placed) * density ** e
    return total


def _hom_connected(F, A, budget, fast=True):
    n = A.shape[0]
    if F.s == 1:
        return float(n)
    if fast and F.is_cycle():
        return float(np.trace(np.linalg.matrix_power(A, F.s)))
    if fast and F.is_path():
        ones = np.ones(n)
        walk = ones
        for _ in range(F.s - 1):
            walk = A @ walk
        return float(ones @ walk)
    order = _traversal_order(F, list(range(F.s)))
    density = float(np.count_nonzero(A)) / max(n * n, 1)
    if _estimated_nodes(n, density, F, order) > budget:
        raise BudgetExceededError("homomorphism enumeration exceeds budget")
    pos = {v: i for i, v in enumerate(order)}
    maps = np.arange(n, dtype=np.int64)[:, None]
    weights = np.ones(n)
    total = 0.0
    for step, w in enumerate(order[1:], start=1):
        back = [pos[u] for u in F.neighbors(w) if pos[u] < step]
        last = step == F.s - 1
        chunk = max(1, _CHUNK_ENTRIES // n)
        new_maps, new_weights = [], []
        for lo in range(0, maps.shape[0], chunk):
            m_chunk = maps[lo:lo + chunk]
            cand = A[m_chunk[:, back[0]]]
            for b in back[1:]:
                cand = cand * A[m_chunk[:, b]]
            w_chunk = weights[lo:lo + chunk]
            if last:
                total += float(w_chunk @ cand.sum(axis=1))
                continue
            rows, cols = np.nonzero(cand)
            new_maps.append(np.hstack([m_chunk[rows], cols[:, None]]))
            new_weights.append(w_chunk[rows] * cand[rows, cols])
        if last:
            return total
        maps = np.vstack(new_maps) if new_maps else np.zeros((0, step + 1), dtype=np.int64)
        weights = np.concatenate(new_weights) if new_weights else np.zeros(0)
        if maps.shape[0] > budget:
            raise BudgetExceededError("homomorphism enumeration exceeds budget")
    return total


def hom_count(F, g, budget=DEFAULT_BUDGET, method="auto"):
    """Number of maps ``V(F) -> V(G)`` sending edges to edges.

    For weighted graphs each map contributes the product of its edge
    weights. Components are counted separately and multiplied; cycles use
    ``trace(A^t)``, paths use walk counts, anything else is enumerated by
    backtracking with adjacency pruning under a node-count budget.
    ``method="enumerate"`` skips the closed forms.
    """
    if method not in ("auto", "enumerate"):
        raise ValueError(f"unknown method {method!r}")
    F = as_pattern(F)
    A = as_graph(g).weights
    total = 1.0
    for comp in F.components():
        total *= _hom_connected(F.induced(comp), A, budget, fast=method == "auto")
    return total


def hom_density(F, g, budget=DEFAULT_BUDGET):
    F = as_pattern(F)
    n = as_graph(g).n
    return hom_count(F, g, budget) / float(n) ** F.s


def induced_count(M, g, budget=DEFAULT_BUDGET):
    """Ordered injective s-tuples whose induced subgraph equals ``M`` exactly."""
    M = as_pattern(M)
    g = as_graph(g)
    if not g.simple_flag:
        raise ValueError("induced counts need a simple graph")
    A = g.weights.astype(bool)
    n = g.n
    s = M.s
    if s == 0:
        return 1
    if s > n:
        return 0
    non_adj = ~A
    np.fill_diagonal(non_adj, False)
    density = float(A.sum()) / max(n * (n - 1), 1)
    est, e_placed = 0.0, 0
    for t in range(1, s):
        e_placed = sum(1 for a, b in M.edges if b < t)
        pairs = t * (t - 1) // 2
        est += float(n) ** t * density ** e_placed * (1 - density) ** (pairs - e_placed)
    if est > budget:
        raise BudgetExceededError("induced-subgraph enumeration exceeds budget")
    adjacent = {(u, v) for u, v in M.edges} | {(v, u) for u, v in M.edges}
    maps = np.arange(n, dtype=np.int64)[:, None]
    for w in range(1, s):
        chunk = max(1, _CHUNK_ENTRIES // n)
        parts, count = [], 0
        for lo in range(0, maps.shape[0], chunk):
            m_chunk = maps[lo:lo + chunk]
            cand = np.ones((m_chunk.shape[0], n), dtype=bool)
            for u in range(w):
                rows = A[m_chunk[:, u]] if (u, w) in adjacent else non_adj[m_chunk[:, u]]
                cand &= rows
            if w == s - 1:
                count += int(cand.sum())
                continue
            r, c = np.nonzero(cand)
            parts.append(np.hstack([m_chunk[r], c[:, None]]))
        if w == s - 1:
            return count
        maps = np.vstack(parts) if parts else np.zeros((0, w + 1), dtype=np.int64)
        if maps.shape[0] > budget:
            raise BudgetExceededError("induced-subgraph enumeration exceeds budget")
    return int(maps.shape[0])


@dataclass(frozen=True)
class ClusterDegrees:
    """``table[u, j]`` is ``N_1(u; U_j)``; ``densities[i, j]`` is ``e(U_i, U_j) / (n_i n_j)``."""

    table: np.ndarray
    block_cuts: np.ndarray
    densities: np.ndarray


def _onehot(p):
    out = np.zeros((p.n, p.k))
    out[np.arange(p.n), p.labels] = 1.0
    return out


def cluster_degrees(g, p):
    g = as_graph(g)
    if not isinstance(p, Partition):
        p = Partition(p)
    if p.n != g.n:
        raise ValueError("partition size does not match the graph")
    H = _onehot(p)
    table = g.weights @ H
    cuts = H.T @ table
    sizes = p.sizes.astype(np.float64)
    return ClusterDegrees(table, cuts, cuts / np.outer(sizes, sizes))


@dataclass(frozen=True)
class CodegreeReport:
    """Codegree deviations per ordered class pair ``(i, j)``.

    ``deviation[i, j] = sum_{u, v in U_i} |N_2(u, v; U_j) - p_ij^2 n_j|`` with
    the sum over all ordered pairs including ``u = v``.
    """

    deviation: np.ndarray
    normalized: np.ndarray
    normalized_model: np.ndarray
    codegree_sum: np.ndarray
    degree_square_sum: np.ndarray
    degree_table: np.ndarray
    P_used: np.ndarray
    P_source: str
    n: int

    @property
    def max_normalized(self):
        return float(self.normalized.max())


def codegree_report(g, p, P_hat="estimate"):
    """Codegree concentration statistics for partition ``p``.

    ``P_hat`` is either a k x k matrix of reference probabilities or
    ``"estimate"`` to use the observed block densities.
    """
    g = as_graph(g)
    if not isinstance(p, Partition):
        p = Partition(p)
    degrees = cluster_degrees(g, p)
    if isinstance(P_hat, str):
        if P_hat != "estimate":
            raise ValueError("P_hat must be a matrix or 'estimate'")
        P_used, source = degrees.densities, "estimate"
    else:
        P_used = np.asarray(P_hat, dtype=np.float64)
        if P_used.shape != (p.k, p.k):
            raise ValueError(f"P_hat must be {p.k}x{p.k}")
        source = "given"
    A = g.weights
    clusters = p.clusters()
    sizes = p.sizes
    n = g.n
    k = p.k
    dev = np.zeros((k, k))
    csum = np.zeros((k, k))
    dsq = np.zeros((k, k))
    for i, Ui in enumerate(clusters):
        for j, Uj in enumerate(clusters):
            block = A[np.ix_(Ui, Uj)]
            N2 = block @ block.T
            target = P_used[i, j] ** 2 * sizes[j]
            dev[i, j] = np.abs(N2 - target).sum()
            csum[i, j] = N2.sum()
            dsq[i, j] = np.sum(block.sum(axis=0) ** 2)
    with np.errstate(divide="ignore", invalid="ignore"):
        model_scale = P_used ** 2 * np.outer(sizes.astype(float) ** 2, sizes)
        normalized_model = np.where(model_scale > 0, dev / model_scale, np.inf)
    return CodegreeReport(dev, dev / float(n) ** 3, normalized_model, csum, dsq,
                          degrees.table, P_used, source, n)
