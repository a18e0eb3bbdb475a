"""Multiway discrepancy of a weighted graph with respect to a vertex partition.

For clusters ``U_i, U_j`` and nonempty ``X`` in ``U_i``, ``Y`` in ``U_j``

    md(X, Y; U_i, U_j) = |a(X, Y) - rho(U_i, U_j) Vol(X) Vol(Y)| / sqrt(Vol(X) Vol(Y))

and ``md(G; U_1..U_k)`` is its maximum over ``i <= j`` and all such subsets.
``X`` and ``Y`` may overlap when ``i = j``. The minimum over proper
k-partitions is ``md_k(G)``. Every value is invariant under rescaling the
weights.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import bisect

from ._validation import check_vertex_set
from .graph import DegenerateSubsetError, Partition, as_graph

DISCREPANCY_CAP = 24
JUMBLE_CAP = 22
MIN_K_MAX_N = 12
DEFAULT_PARTITION_BUDGET = 200_000
_TABLE_ENTRIES = 1 << 20


class CapExceededError(ValueError):
    pass


class BudgetExceededError(RuntimeError):
    pass


@dataclass(frozen=True)
class DiscrepancyResult:
    value: float
    witness_X: list
    witness_Y: list
    pair: tuple
    method: str

    def to_dict(self):
        return {
            "value": self.value,
            "method": self.method,
            "pair": list(self.pair) if self.pair is not None else None,
            "witness_X": list(self.witness_X),
            "witness_Y": list(self.witness_Y),
        }


def _rho(A, d, Ui, Uj):
    vi, vj = d[Ui].sum(), d[Uj].sum()
    if vi <= 0 or vj <= 0:
        raise DegenerateSubsetError("degenerate cluster (zero volume)")
    return A[np.ix_(Ui, Uj)].sum() / (vi * vj)


def pair_discrepancy(g, X, Y, Ui, Uj):
    """``md(X, Y; U_i, U_j)`` for nonempty ``X`` in ``U_i`` and ``Y`` in ``U_j``."""
    g = as_graph(g)
    A, d = g.weights, g.degrees
    xi, yi = check_vertex_set(X, g.n), check_vertex_set(Y, g.n)
    ui, uj = check_vertex_set(Ui, g.n), check_vertex_set(Uj, g.n)
    if not (np.isin(xi, ui).all() and np.isin(yi, uj).all()):
        raise ValueError("X must lie in U_i and Y in U_j")
    vx, vy = d[xi].sum(), d[yi].sum()
    if xi.size == 0 or yi.size == 0 or vx <= 0 or vy <= 0:
        raise DegenerateSubsetError("degenerate subset")
    a = A[np.ix_(xi, yi)].sum()
    return float(abs(a - _rho(A, d, ui, uj) * vx * vy) / math.sqrt(vx * vy))


def subset_indicators(m):
    """``(2^m, m)`` 0/1 matrix; row ``s`` is the indicator of bitmask ``s``."""
    masks = np.arange(1 << m, dtype=np.int64)
    return ((masks[:, None] >> np.arange(m)) & 1).astype(np.float64)


def _mask_to_members(mask, members):
    return [int(members[b]) for b in range(len(members)) if (mask >> b) & 1]


def _pair_max_exact(A, d, Ui, Uj, rho, stop_above=np.inf):
    """Maximum of ``md(X, Y; U_i, U_j)`` over all nonempty subsets.

    Row subsets are processed in blocks; for each block the cut weights
    against every column subset come from one matrix product with the
    subset-indicator table. Stops early once a value exceeds ``stop_above``.
    Returns ``(value, x_mask, y_mask)``.
    """
    ni, nj = Ui.size, Uj.size
    Bi, Bj = subset_indicators(ni), subset_indicators(nj)
    vol_x = Bi @ d[Ui]
    vol_y = Bj @ d[Uj]
    S = Bi @ A[np.ix_(Ui, Uj)]
    chunk = max(1, _TABLE_ENTRIES >> nj)
    best, bx, by = 0.0, 0, 0
    y_ok = vol_y > 0
    for lo in range(1, 1 << ni, chunk):
        hi = min(lo + chunk, 1 << ni)
        vx = vol_x[lo:hi]
        cut = S[lo:hi] @ Bj.T
        denom = np.sqrt(np.outer(vx, vol_y))
        ok = (vx[:, None] > 0) & y_ok[None, :]
        with np.errstate(divide="ignore", invalid="ignore"):
            val = np.where(ok, np.abs(cut - rho * np.outer(vx, vol_y)) / denom, 0.0)
        flat = int(np.argmax(val))
        r, c = divmod(flat, val.shape[1])
        if val[r, c] > best:
            best, bx, by = float(val[r, c]), lo + r, c
            if best > stop_above:
                break
    return best, bx, by


def _check_cap(p, cap):
    sizes = p.sizes
    for i in range(p.k):
        for j in range(i, p.k):
            if sizes[i] + sizes[j] > cap:
                raise CapExceededError(
                    f"clusters {i},{j} have {sizes[i]}+{sizes[j]} vertices > cap {cap}; use heuristic")


def _as_partition(p, n):
    if not isinstance(p, Partition):
        p = Partition(p)
    if p.n != n:
        raise ValueError("partition size does not match the graph")
    return p


def _exact(g, p, stop_above=np.inf):
    A, d = g.weights, g.degrees
    clusters = p.clusters()
    pairs = [(i, j) for i in range(p.k) for j in range(i, p.k)]
    pairs.sort(key=lambda ij: (clusters[ij[0]].size + clusters[ij[1]].size, ij))
    best = DiscrepancyResult(0.0, [], [], pairs[0], "exact")
    for i, j in pairs:
        Ui, Uj = clusters[i], clusters[j]
        val, bx, by = _pair_max_exact(A, d, Ui, Uj, _rho(A, d, Ui, Uj), stop_above)
        if val > best.value:
            best = DiscrepancyResult(val, _mask_to_members(bx, Ui), _mask_to_members(by, Uj),
                                     (i, j), "exact")
            if val > stop_above:
                break
    return best


def partition_discrepancy_exact(g, p, cap=DISCREPANCY_CAP):
    """Exact ``md(G; U_1..U_k)`` with witnesses by full subset enumeration."""
    g = as_graph(g)
    p = _as_partition(p, g.n)
    _check_cap(p, cap)
    return _exact(g, p)


def _spectral_starts(block, dx, dy, rho):
    dev = block - rho * np.outer(dx, dy)
    sx, sy = np.sqrt(np.maximum(dx, 1e-300)), np.sqrt(np.maximum(dy, 1e-300))
    scaled = dev / sx[:, None] / sy[None, :]
    try:
        u, _, vt = np.linalg.svd(scaled, full_matrices=False)
    except np.linalg.LinAlgError:
        return []
    starts = []
    for comp in range(min(2, u.shape[1])):
        a, b = u[:, comp], vt[comp]
        for x, y in ((a > 0, b > 0), (a < 0, b < 0), (a > 0, b < 0), (a < 0, b > 0)):
            if x.any() and y.any():
                starts.append((x.astype(float), y.astype(float)))
    return starts


def _md_value(a, vx, vy, rho):
    if vx <= 0 or vy <= 0:
        return -np.inf
    return abs(a - rho * vx * vy) / math.sqrt(vx * vy)


def _climb(block, dx, dy, rho, x, y, max_steps):
    """Steepest-ascent single-vertex flips on the indicator vectors ``x``, ``y``."""
    x, y = x.copy(), y.copy()
    cy = block @ y
    cx = block.T @ x
    a = float(x @ cy)
    vx, vy = float(dx @ x), float(dy @ y)
    cur = _md_value(a, vx, vy, rho)
    for _ in range(max_steps):
        sgn_x = 1.0 - 2.0 * x
        new_vx = vx + sgn_x * dx
        new_ax = a + sgn_x * cy
        with np.errstate(divide="ignore", invalid="ignore"):
            gx = np.where(new_vx > 0, np.abs(new_ax - rho * new_vx * vy) / np.sqrt(new_vx * vy), -np.inf)
        sgn_y = 1.0 - 2.0 * y
        new_vy = vy + sgn_y * dy
        new_ay = a + sgn_y * cx
        with np.errstate(divide="ignore", invalid="ignore"):
            gy = np.where(new_vy > 0, np.abs(new_ay - rho * vx * new_vy) / np.sqrt(vx * new_vy), -np.inf)
        ix, iy = int(np.argmax(gx)), int(np.argmax(gy))
        best_x, best_y = gx[ix], gy[iy]
        if max(best_x, best_y) <= cur * (1 + 1e-12) + 1e-15:
            break
        if best_x >= best_y:
            s = sgn_x[ix]
            x[ix] += s
            cx += s * block[ix]
            a, vx, cur = float(new_ax[ix]), float(new_vx[ix]), float(best_x)
        else:
            s = sgn_y[iy]
            y[iy] += s
            cy += s * block[:, iy]
            a, vy, cur = float(new_ay[iy]), float(new_vy[iy]), float(best_y)
    return cur, x, y


def partition_discrepancy_heuristic(g, p, seed=0, iters=None, starts=12):
    """Lower bound on ``md(G; U_1..U_k)`` by multi-start local search.

    For every cluster pair the search starts from sign patterns of the top
    singular vectors of the volume-scaled deviation block plus ``starts``
    random subsets, then climbs by single-vertex flips in ``X`` or ``Y``.
    The returned witnesses attain the reported value, so it never exceeds
    the exact maximum.
    """
    g = as_graph(g)
    p = _as_partition(p, g.n)
    A, d = g.weights, g.degrees
    clusters = p.clusters()
    pairs = [(i, j) for i in range(p.k) for j in range(i, p.k)]
    seqs = np.random.SeedSequence(seed).spawn(len(pairs))
    best = DiscrepancyResult(0.0, [], [], pairs[0], "heuristic")
    for (i, j), ss in zip(pairs, seqs):
        rng = np.random.Generator(np.random.PCG64(ss))
        Ui, Uj = clusters[i], clusters[j]
        block = A[np.ix_(Ui, Uj)]
        dx, dy = d[Ui], d[Uj]
        rho = _rho(A, d, Ui, Uj)
        steps = iters if iters is not None else 4 * (Ui.size + Uj.size)
        candidates = _spectral_starts(block, dx, dy, rho)
        # singletons at the most deviating entry
        dev = np.abs(block - rho * np.outer(dx, dy)) / np.sqrt(np.outer(np.maximum(dx, 1e-300),
                                                                           np.maximum(dy, 1e-300)))
        r, c = np.unravel_index(int(np.argmax(dev)), dev.shape)
        x0, y0 = np.zeros(Ui.size), np.zeros(Uj.size)
        x0[r], y0[c] = 1.0, 1.0
        candidates.append((x0, y0))
        for _ in range(starts):
            qx, qy = rng.uniform(0.1, 0.9, size=2)
            x = (rng.random(Ui.size) < qx).astype(float)
            y = (rng.random(Uj.size) < qy).astype(float)
            if not x.any():
                x[rng.integers(Ui.size)] = 1.0
            if not y.any():
                y[rng.integers(Uj.size)] = 1.0
            candidates.append((x, y))
        for x, y in candidates:
            val, xs, ys = _climb(block, dx, dy, rho, x, y, steps)
            if val > best.value:
                best = DiscrepancyResult(float(val), Ui[xs > 0.5].tolist(), Uj[ys > 0.5].tolist(),
                                         (i, j), "heuristic")
    if best.witness_X:
        # report the value recomputed from the witnesses
        value = pair_discrepancy(g, best.witness_X, best.witness_Y,
                                 clusters[best.pair[0]], clusters[best.pair[1]])
        best = DiscrepancyResult(value, best.witness_X, best.witness_Y, best.pair, "heuristic")
    return best


def partition_discrepancy(g, p, cap=DISCREPANCY_CAP, seed=0):
    """Exact value when every pair fits under ``cap``, heuristic lower bound otherwise."""
    g = as_graph(g)
    p = _as_partition(p, g.n)
    try:
        _check_cap(p, cap)
    except CapExceededError:
        return partition_discrepancy_heuristic(g, p, seed=seed)
    return _exact(g, p)


def _stirling2(n, k):
    row = [1] + [0] * k
    for i in range(1, n + 1):
        new = [0] * (k + 1)
        for j in range(1, min(i, k) + 1):
            new[j] = j * row[j] + row[j - 1]
        row = new
    return row[k]


def restricted_growth_strings(n, k):
    """Canonical labelings of the proper k-partitions of ``n`` items (first-occurrence order)."""
    labels = [0] * n

    def rec(t, top):
        if n - t < k - 1 - top:
            return
        if t == n:
            if top == k - 1:
                yield list(labels)
            return
        for lab in range(min(top + 1, k - 1) + 1):
            labels[t] = lab
            yield from rec(t + 1, max(top, lab))

    if n == 0 or k < 1 or k > n:
        return iter(())
    return rec(1, 0)


@dataclass(frozen=True)
class MinDiscrepancy:
    """``value`` is exact (``kind="exact"``), an upper bound on ``md_k`` or an estimate."""

    value: float
    partition: Partition
    kind: str
    witness: DiscrepancyResult = field(repr=False, default=None)


def min_k_discrepancy(g, k, mode="exact", budget=DEFAULT_PARTITION_BUDGET,
                      cap=DISCREPANCY_CAP, seed=0):
    """Minimum k-way discrepancy.

    ``mode="exact"`` enumerates every proper k-partition (n <= 12) with a
    branch-and-bound inner maximum. ``mode="spectral_seeded"`` evaluates the
    weighted k-variance partition: exactly when within ``cap`` (an upper
    bound on ``md_k``), otherwise by local search (an estimate only).
    """
    from .clustering import k_variance

    g = as_graph(g)
    n = g.n
    if mode == "exact":
        if n > MIN_K_MAX_N:
            raise BudgetExceededError(f"exact md_k needs n <= {MIN_K_MAX_N}, got {n}")
        if not 1 <= k <= n:
            raise ValueError(f"need 1 <= k <= n, got k={k}")
        count = _stirling2(n, k)
        if count > budget:
            raise BudgetExceededError(f"{count} partitions exceed the budget {budget}")
        best_val, best_p, best_w = np.inf, None, None
        for labels in restricted_growth_strings(n, k):
            p = Partition(labels, k=k)
            _check_cap(p, cap)
            res = _exact(g, p, stop_above=best_val)
            if res.value < best_val:
                best_val, best_p, best_w = res.value, p, res
        return MinDiscrepancy(float(best_val), best_p, "exact", best_w)
    if mode == "spectral_seeded":
        _, p = k_variance(g, k, "weighted", seed=seed)
        try:
            _check_cap(p, cap)
        except CapExceededError:
            res = partition_discrepancy_heuristic(g, p, seed=seed)
            return MinDiscrepancy(res.value, p, "estimate", res)
        res = _exact(g, p)
        return MinDiscrepancy(res.value, p, "upper_bound", res)
    raise ValueError(f"unknown mode {mode!r}")


def converse_rhs(m, k):
    """Right-hand side ``9 m (k + 2 - 9 k ln m)`` of the converse mixing bound."""
    return 9.0 * m * (k + 2 - 9.0 * k * math.log(m))


def converse_peak(k):
    """End of the interval ``(0, m_peak]`` where ``converse_rhs`` is increasing."""
    return min(1.0, math.exp((k + 2) / (9.0 * k) - 1.0))


def converse_inverse(mu_k, k, xtol=1e-14):
    """Smallest ``m`` in (0, 1) with ``converse_rhs(m, k) = |mu_k|``, or ``None``.

    Any ``md_k`` in (0, 1) satisfying the converse mixing bound is at least
    this value. ``None`` means the bound gives no information (``mu_k = 0``
    or ``|mu_k|`` beyond the peak of the increasing branch).
    """
    target = abs(float(mu_k))
    peak = converse_peak(k)
    if target <= 0 or target > converse_rhs(peak, k):
        return None
    lo = 1e-300
    if converse_rhs(lo, k) >= target:
        return lo
    return bisect(lambda m: converse_rhs(m, k) - target, lo, peak, xtol=xtol, rtol=1e-15, maxiter=2000)


def degree_bounds(g, exception_fraction=0.05):
    """``(c, C)`` with ``c n <= d_v <= C n`` outside the trimmed tails.

    ``floor(exception_fraction * n / 2)`` vertices are dropped from each
    end of the sorted degree sequence; the dropped ids are returned too.
    """
    g = as_graph(g)
    n = g.n
    order = np.argsort(g.degrees, kind="stable")
    drop = int(math.floor(exception_fraction * n / 2))
    kept = order[drop:n - drop] if drop else order
    excluded = np.sort(np.concatenate([order[:drop], order[n - drop:]])) if drop else np.array([], int)
    deg = g.degrees[kept]
    return float(deg.min()) / n, float(deg.max()) / n, excluded.tolist()


def weighted_variance_of(g, p):
    """Weighted variance ``sum_v d_v |r_v - c_i|^2`` of modularity representatives under ``p``."""
    from .clustering import _weighted_means, modularity_representatives

    g = as_graph(g)
    p = _as_partition(p, g.n)
    if p.k == 1:
        return 0.0
    emb = modularity_representatives(g, p.k)
    centers, _ = _weighted_means(emb.points, emb.weights, p.labels, p.k)
    diff = emb.points - centers[p.labels]
    return float(np.sum(emb.weights * (diff ** 2).sum(axis=1)))


@dataclass(frozen=True)
class SpectralBounds:
    upper: float
    upper_flag: str
    lower: float
    lower_applicable: bool
    mu_k: float
    s: float
    c: float
    C: float
    exceptions: list

    def to_dict(self):
        return {
            "upper": self.upper,
            "upper_flag": self.upper_flag,
            "lower": self.lower,
            "lower_applicable": self.lower_applicable,
            "mu_k": self.mu_k,
            "s": self.s,
            "c": self.c,
            "C": self.C,
            "n_exceptions": len(self.exceptions),
        }


def discrepancy_spectral_bounds(g, k, p=None, c=None, C=None, exception_fraction=0.05):
    """Spectral bracket for the k-way discrepancy.

    ``upper = 2 (C/c) (sqrt(2k) s + |mu_k|)`` bounds ``md(G; p)`` for the
    weighted-variance partition ``p`` (``s^2`` its weighted variance); the
    vanishing correction to ``C/c`` is dropped, hence the "asymptotic" flag.
    ``lower`` inverts the converse mixing bound and lower-bounds ``md_k``.
    """
    from .spectra import normalized_modularity_matrix
    from .numerics import eigh

    g = as_graph(g)
    values = eigh(normalized_modularity_matrix(g)).values
    mu_k = float(abs(values[k - 1])) if k - 1 < values.size else 0.0
    c_est, C_est, excluded = degree_bounds(g, exception_fraction)
    c = c_est if c is None else c
    C = C_est if C is None else C
    if p is None:
        from .clustering import k_variance

        _, p = k_variance(g, k, "weighted")
    s = math.sqrt(weighted_variance_of(g, p))
    upper = 2.0 * (C / c) * (math.sqrt(2 * k) * s + mu_k)
    inv = converse_inverse(mu_k, k)
    return SpectralBounds(upper, "asymptotic", inv if inv is not None else 0.0,
                          inv is not None, mu_k, s, c, C, excluded)


@dataclass(frozen=True)
class JumbleResult:
    holds: bool
    margin: float
    worst_X: list
    worst_Y: list


def _subset_edge_counts(A):
    """``e(X)`` and ``|X|`` for every subset bitmask of the vertex set."""
    n = A.shape[0]
    e = np.zeros(1)
    size = np.zeros(1)
    for v in range(n):
        ss = np.zeros(1)
        for u in range(v):
            ss = np.concatenate([ss, ss + A[u, v]])
        e = np.concatenate([e, e + ss])
        size = np.concatenate([size, size + 1])
    return e, size


def jumbledness(g, p_density, beta, partition=None, cap=None):
    """Exhaustive ``(p, beta)``-jumbledness check.

    Without a partition: ``|e(X) - p C(|X|, 2)| <= beta |X|`` for every
    ``X`` (n <= 22). With a 2-partition ``(U_1, U_2)``: the bi-jumbled
    condition ``|e(X, Y) - p |X||Y|| <= beta sqrt(|X||Y|)`` for ``X`` in
    ``U_1``, ``Y`` in ``U_2`` (n_1 + n_2 <= 24). ``margin`` is the largest
    excess of the left side over the right (``<= 0`` when the check holds).
    """
    g = as_graph(g)
    A = g.weights
    if partition is None:
        cap = JUMBLE_CAP if cap is None else cap
        if g.n > cap:
            raise CapExceededError(f"n={g.n} exceeds the jumbledness cap {cap}")
        e, size = _subset_edge_counts(A)
        excess = np.abs(e - p_density * size * (size - 1) / 2.0) - beta * size
        worst = int(np.argmax(excess))
        members = np.arange(g.n)
        wx = _mask_to_members(worst, members)
        return JumbleResult(bool(excess[worst] <= 1e-9), float(excess[worst]), wx, wx)
    p = _as_partition(partition, g.n)
    if p.k != 2:
        raise ValueError("bi-jumbledness needs a 2-partition")
    cap = DISCREPANCY_CAP if cap is None else cap
    U1, U2 = p.clusters()
    if U1.size + U2.size > cap:
        raise CapExceededError(f"{U1.size}+{U2.size} exceeds the cap {cap}")
    B1, B2 = subset_indicators(U1.size), subset_indicators(U2.size)
    cut = B1 @ A[np.ix_(U1, U2)] @ B2.T
    sx, sy = B1.sum(axis=1), B2.sum(axis=1)
    prod = np.outer(sx, sy)
    excess = np.abs(cut - p_density * prod) - beta * np.sqrt(prod)
    flat = int(np.argmax(excess))
    r, c = divmod(flat, excess.shape[1])
    return JumbleResult(bool(excess[r, c] <= 1e-9), float(excess[r, c]),
                        _mask_to_members(r, U1), _mask_to_members(c, U2))
