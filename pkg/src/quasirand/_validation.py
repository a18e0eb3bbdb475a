"""Input validation helpers shared by the estimators and functional API."""

import numbers

import numpy as np

SYMMETRY_TOL = 1e-12


def check_square(m, name="matrix"):
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"{name} must be square, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} contains non-finite entries")
    return m


def check_symmetric(m, name="matrix", tol=SYMMETRY_TOL):
    """Return ``m`` as a float array after checking it is symmetric.

    The tolerance is absolute, scaled by the largest entry when that
    exceeds one so that large weights are not rejected for rounding.
    """
    m = check_square(m, name)
    scale = max(1.0, float(np.max(np.abs(m)))) if m.size else 1.0
    if m.size and np.max(np.abs(m - m.T)) > tol * scale:
        raise ValueError(f"{name} is not symmetric")
    return m


def check_adjacency(weights, allow_loops=False):
    """Validate a weighted adjacency matrix (symmetric, nonnegative, no loops)."""
    a = check_symmetric(weights, "adjacency matrix")
    if np.any(a < 0):
        raise ValueError("adjacency matrix has negative weights")
    if not allow_loops and np.any(np.diag(a) != 0):
        raise ValueError("adjacency matrix has self-loops (a_ii must be 0)")
    # exact symmetry downstream, rounding noise is folded away here
    return (a + a.T) / 2.0


def check_labels(labels, n=None):
    labels = np.asarray(labels)
    if labels.ndim != 1:
        raise ValueError("labels must be a 1-d sequence")
    if labels.size and not np.issubdtype(labels.dtype, np.integer):
        as_int = labels.astype(np.int64)
        if not np.array_equal(as_int, labels):
            raise ValueError("labels must be integers")
        labels = as_int
    labels = labels.astype(np.int64)
    if n is not None and labels.shape[0] != n:
        raise ValueError(f"expected {n} labels, got {labels.shape[0]}")
    if labels.size and labels.min() < 0:
        raise ValueError("labels must be nonnegative")
    return labels


def check_seed(seed):
    if isinstance(seed, (bool, np.bool_)) or not isinstance(seed, numbers.Integral):
        raise TypeError(f"seed must be an integer, got {type(seed).__name__}")
    seed = int(seed)
    if seed < 0 or seed >= 2**64:
        raise ValueError("seed must lie in [0, 2**64)")
    return seed


def check_vertex_set(members, n):
    """Return a sorted unique int array of vertex ids, all within range."""
    idx = np.asarray(sorted(set(int(v) for v in members)), dtype=np.int64)
    if idx.size and (idx[0] < 0 or idx[-1] >= n):
        raise ValueError(f"vertex ids must lie in [0, {n})")
    return idx
