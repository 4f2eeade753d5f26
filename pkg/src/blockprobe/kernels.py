"""Hot numeric kernels.

Each kernel is written as a plain-loop function and compiled with numba unless
``BLOCKPROBE_NO_NUMBA=1``. The layout optimizer, Prim MST, and smooth-kNN
calibration run the *same source* on both paths (bit-identical results);
pairwise distances get a vectorized numpy fallback instead, which may differ
from the loop path in the last few ulps due to summation order.
"""

import numpy as np

from .accel import HAS_NUMBA, maybe_njit

if HAS_NUMBA:
    from numba import prange
else:  # pragma: no cover - exercised via BLOCKPROBE_NO_NUMBA
    prange = range

_U64_1 = np.uint64(0x9E3779B97F4A7C15)
_U64_2 = np.uint64(0xBF58476D1CE4E5B9)
_U64_3 = np.uint64(0x94D049BB133111EB)


@maybe_njit(cache=True)
def _splitmix64(state):
    # Wrapping uint64 arithmetic; identical in numba and numpy-scalar mode.
    state = state + _U64_1
    z = state
    z = (z ^ (z >> np.uint64(30))) * _U64_2
    z = (z ^ (z >> np.uint64(27))) * _U64_3
    return state, z ^ (z >> np.uint64(31))


@maybe_njit(cache=True, parallel=True)
def _pairwise_sqdist_loops(a, b):
    na, nb = a.shape[0], b.shape[0]
    dim = a.shape[1]
    out = np.empty((na, nb), dtype=np.float64)
    for i in prange(na):
        for j in range(nb):
            s = 0.0
            for d in range(dim):
                diff = a[i, d] - b[j, d]
                s += diff * diff
            out[i, j] = s
    return out


def _pairwise_sqdist_numpy(a, b):
    out = np.empty((a.shape[0], b.shape[0]), dtype=np.float64)
    for i in range(a.shape[0]):
        diff = b - a[i]
        out[i] = np.einsum("ij,ij->i", diff, diff)
    return out


def pairwise_sqdist(a, b) -> np.ndarray:
    """Squared euclidean distances between rows of ``a`` and rows of ``b``.

    Always accumulates in float64 regardless of input dtype.
    """
    a = np.ascontiguousarray(a, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    if a.shape[1] != b.shape[1]:
        raise ValueError(f"dimension mismatch: {a.shape[1]} vs {b.shape[1]}")
    if HAS_NUMBA:
        return _pairwise_sqdist_loops(a, b)
    return _pairwise_sqdist_numpy(a, b)


@maybe_njit(cache=True)
def prim_mst(weights):
    """Minimum spanning tree of a dense symmetric weight matrix (Prim, O(n^2)).

    Returns an (n-1, 3) array of (u, v, w) rows in insertion order. Ties on
    the key pick the smallest vertex index (first strict minimum).
    """
    n = weights.shape[0]
    in_tree = np.zeros(n, dtype=np.bool_)
    key = np.full(n, np.inf)
    parent = np.full(n, -1, dtype=np.int64)
    key[0] = 0.0
    edges = np.empty((n - 1, 3), dtype=np.float64)
    count = 0
    for _ in range(n):
        u = -1
        best = np.inf
        for v in range(n):
            if not in_tree[v] and key[v] < best:
                best = key[v]
                u = v
        in_tree[u] = True
        if parent[u] >= 0:
            edges[count, 0] = parent[u]
            edges[count, 1] = u
            edges[count, 2] = key[u]
            count += 1
        for v in range(n):
            if not in_tree[v] and weights[u, v] < key[v]:
                key[v] = weights[u, v]
                parent[v] = u
    return edges


@maybe_njit(cache=True)
def smooth_knn_calibrate(dists, target, n_iter, floor_scale, global_mean):
    """Per-point (rho, sigma) so that sum_j exp(-max(0, d_j - rho)/sigma) hits
    ``target``.

    ``dists`` is (n, k) ascending neighbor distances, self excluded. rho is
    the first nonzero distance (0 for an all-zero row). sigma is found by
    doubling + bisection; rows whose sigma lands below ``floor_scale`` times
    the mean neighbor distance are clamped and flagged degenerate.

    Returns (rho, sigma, residual, clamped).
    """
    n, k = dists.shape
    rho = np.zeros(n)
    sigma = np.ones(n)
    residual = np.zeros(n)
    clamped = np.zeros(n, dtype=np.bool_)
    for i in range(n):
        row = dists[i]
        for j in range(k):
            if row[j] > 0.0:
                rho[i] = row[j]
                break
        lo = 0.0
        hi = np.inf
        mid = 1.0
        psum = 0.0
        for _ in range(n_iter):
            psum = 0.0
            for j in range(k):
                d = row[j] - rho[i]
                if d > 0.0:
                    psum += np.exp(-d / mid)
                else:
                    psum += 1.0
            if abs(psum - target) < 1e-8:
                break
            if psum > target:
                hi = mid
                mid = (lo + hi) / 2.0
            else:
                lo = mid
                if hi == np.inf:
                    mid *= 2.0
                else:
                    mid = (lo + hi) / 2.0
        sigma[i] = mid
        residual[i] = abs(psum - target)
        mean_i = 0.0
        for j in range(k):
            mean_i += row[j]
        mean_i /= k
        floor = floor_scale * (mean_i if mean_i > 0.0 else global_mean)
        if sigma[i] < floor:
            sigma[i] = floor
            clamped[i] = True
        if sigma[i] <= 0.0:
            sigma[i] = 1.0
            clamped[i] = True
    return rho, sigma, residual, clamped


@maybe_njit(cache=True)
def optimize_layout_kernel(
    pos,
    heads,
    tails,
    epochs_per_sample,
    n_epochs,
    initial_lr,
    a,
    b,
    negative_sample_rate,
    rng_state,
):
    """Stochastic attract/repulse layout over a weighted edge list.

    ``pos`` (n, dim) float64 is updated in place. Edges are directed (each
    undirected edge appears in both orientations); an edge fires whenever its
    schedule counter falls due, pulling both endpoints together and pushing
    the head away from ``negative_sample_rate`` random points. Per-coordinate
    gradient terms are clipped to [-4, 4] before the learning-rate scaling.
    Deterministic for a fixed ``rng_state`` on either accel path.
    """
    n, dim = pos.shape
    n_edges = heads.shape[0]
    next_due = epochs_per_sample.copy()
    state = rng_state
    nf = np.uint64(n)
    for epoch in range(n_epochs):
        alpha = initial_lr * (1.0 - epoch / n_epochs)
        for e in range(n_edges):
            if next_due[e] > epoch:
                continue
            i = heads[e]
            j = tails[e]
            d2 = 0.0
            for d in range(dim):
                diff = pos[i, d] - pos[j, d]
                d2 += diff * diff
            if d2 > 0.0:
                coeff = (-2.0 * a * b * d2 ** (b - 1.0)) / (1.0 + a * d2**b)
                for d in range(dim):
                    g = coeff * (pos[i, d] - pos[j, d])
                    if g > 4.0:
                        g = 4.0
                    elif g < -4.0:
                        g = -4.0
                    pos[i, d] += alpha * g
                    pos[j, d] -= alpha * g
            for _ in range(negative_sample_rate):
                state, z = _splitmix64(state)
                t = np.int64(z % nf)
                if t == i:
                    continue
                d2 = 0.0
                for d in range(dim):
                    diff = pos[i, d] - pos[t, d]
                    d2 += diff * diff
                if d2 > 0.0:
                    coeff = 2.0 * b / ((0.001 + d2) * (1.0 + a * d2**b))
                    for d in range(dim):
                        g = coeff * (pos[i, d] - pos[t, d])
                        if g > 4.0:
                            g = 4.0
                        elif g < -4.0:
                            g = -4.0
                        pos[i, d] += alpha * g
                else:
                    # Exactly overlapping with a non-neighbor: kick apart.
                    for d in range(dim):
                        pos[i, d] += alpha * 4.0
            next_due[e] += epochs_per_sample[e]
    return pos
