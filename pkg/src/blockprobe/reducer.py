"""Local-topology-preserving dimensionality reduction.

Pipeline: exact kNN graph -> per-point bandwidth calibration -> fuzzy edge
weights symmetrized with the probabilistic t-conorm -> stochastic
attract/repulse layout against the fitted low-dimensional similarity curve
1/(1 + a*d^(2b)).

Layout runs single-threaded and seeded: same seed, same coordinates, on
either acceleration path.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import curve_fit

from .accel import HAS_NUMBA
from .errors import CurveFitError, LayoutNumericsError
from .kernels import optimize_layout_kernel, pairwise_sqdist, smooth_knn_calibrate
from .matrix import EmbeddingMatrix

SIGMA_FLOOR_SCALE = 1e-3
SMOOTH_TOLERANCE = 1e-5


@dataclass
class ReducerConfig:
    n_components: int = 2
    n_neighbors: int = 15
    min_dist: float = 0.1
    spread: float = 1.0
    n_epochs: int = 500
    negative_sample_rate: int = 5
    initial_learning_rate: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.n_components < 1:
            raise ValueError("n_components must be >= 1")
        if self.n_neighbors < 2:
            raise ValueError("n_neighbors must be >= 2")
        if not self.min_dist < self.spread:
            raise ValueError("min_dist must be < spread")


@dataclass
class NeighborGraph:
    indices: np.ndarray  # (n, k) neighbor rows, ascending distance
    dists: np.ndarray  # (n, k)
    rho: np.ndarray
    sigma: np.ndarray
    residuals: np.ndarray
    clamped: np.ndarray
    weights: np.ndarray  # (n, n) dense symmetrized membership


@dataclass
class ReducedEmbedding:
    n_components: int
    coordinates: np.ndarray  # (n, n_components) float64
    ids: list[str]
    labels: list[str]
    block_index: int
    config: ReducerConfig = field(default_factory=ReducerConfig)

    def to_matrix(self) -> EmbeddingMatrix:
        return EmbeddingMatrix(
            block_index=self.block_index,
            ids=list(self.ids),
            labels=list(self.labels),
            vectors=self.coordinates.astype(np.float32),
        )


def knn_graph(points, n_neighbors: int):
    """Exact k-nearest-others per row: (indices, distances), ascending, ties
    broken by row order (callers pass canonically sorted matrices)."""
    x = points.vectors if isinstance(points, EmbeddingMatrix) else points
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[0]
    if n <= n_neighbors:
        raise ValueError(f"need more than n_neighbors={n_neighbors} points, got {n}")
    d = np.sqrt(pairwise_sqdist(x, x))
    np.fill_diagonal(d, np.inf)
    idx = np.argsort(d, axis=1, kind="stable")[:, :n_neighbors]
    return idx, np.take_along_axis(d, idx, axis=1)


def smooth_knn_dist(neighbor_distances, k: int):
    """(rho, sigma) for one point's ascending neighbor distances."""
    row = np.asarray(neighbor_distances, dtype=np.float64).reshape(1, -1)
    if k < 2:
        raise ValueError("k must be >= 2")
    rho, sigma, _, _ = smooth_knn_calibrate(
        row, math.log2(k), 200, SIGMA_FLOOR_SCALE, float(row.mean())
    )
    return float(rho[0]), float(sigma[0])


def _calibrate(dists: np.ndarray, k: int):
    return smooth_knn_calibrate(
        dists, math.log2(k), 200, SIGMA_FLOOR_SCALE, float(dists.mean())
    )


def fuzzy_union(directed: np.ndarray) -> np.ndarray:
    """Probabilistic t-conorm a + b - a*b over a directed weight matrix."""
    return directed + directed.T - directed * directed.T


def build_graph(points, cfg: ReducerConfig) -> NeighborGraph:
    idx, dists = knn_graph(points, cfg.n_neighbors)
    rho, sigma, residuals, clamped = _calibrate(dists, cfg.n_neighbors)
    n = idx.shape[0]
    directed = np.zeros((n, n))
    vals = np.exp(-np.maximum(0.0, dists - rho[:, None]) / sigma[:, None])
    rows = np.repeat(np.arange(n), cfg.n_neighbors)
    directed[rows, idx.ravel()] = vals.ravel()
    return NeighborGraph(
        indices=idx,
        dists=dists,
        rho=rho,
        sigma=sigma,
        residuals=residuals,
        clamped=clamped,
        weights=fuzzy_union(directed),
    )


def fit_ab(min_dist: float, spread: float) -> tuple[float, float]:
    """Least-squares (a, b) of 1/(1 + a*x^(2b)) against the offset exponential
    target over a 301-point grid on [0, 3*spread]."""
    if not 0 < min_dist < spread:
        raise ValueError("need 0 < min_dist < spread")
    xs = np.linspace(0.0, 3.0 * spread, 301)
    ys = np.where(xs <= min_dist, 1.0, np.exp(-(xs - min_dist) / spread))

    def curve(x, a, b):
        return 1.0 / (1.0 + a * x ** (2.0 * b))

    (a, b), _ = curve_fit(curve, xs, ys, p0=(1.0, 1.0), maxfev=10000)
    residual = float(np.max(np.abs(curve(xs, a, b) - ys)))
    if residual >= 0.05:
        raise CurveFitError(
            f"curve fit residual {residual:.4f} >= 0.05 for "
            f"min_dist={min_dist}, spread={spread}"
        )
    return float(a), float(b)


def _edge_list(weights: np.ndarray):
    heads, tails = np.nonzero(weights)
    keep = heads != tails
    heads, tails = heads[keep], tails[keep]
    w = weights[heads, tails]
    pos = w > 0.0
    return heads[pos].astype(np.int64), tails[pos].astype(np.int64), w[pos]


def optimize_layout(graph: NeighborGraph, cfg: ReducerConfig) -> np.ndarray:
    """Seeded stochastic layout: returns (n, n_components) float64."""
    n = graph.weights.shape[0]
    rng = np.random.default_rng(cfg.seed)
    pos = rng.uniform(-10.0, 10.0, size=(n, cfg.n_components))
    heads, tails, w = _edge_list(graph.weights)
    epochs_per_sample = 1.0 / w
    a, b = fit_ab(cfg.min_dist, cfg.spread)
    state = np.uint64(cfg.seed) ^ np.uint64(0xD1B54A32D192ED03)
    args = (
        pos,
        heads,
        tails,
        epochs_per_sample,
        cfg.n_epochs,
        cfg.initial_learning_rate,
        a,
        b,
        cfg.negative_sample_rate,
        state,
    )
    if HAS_NUMBA:
        pos = optimize_layout_kernel(*args)
    else:
        with np.errstate(over="ignore"):
            pos = optimize_layout_kernel(*args)
    bad = ~np.isfinite(pos)
    if bad.any():
        raise LayoutNumericsError(
            f"non-finite coordinates for rows {np.flatnonzero(bad.any(axis=1))[:5]}"
        )
    return pos


def reduce(points: EmbeddingMatrix, cfg: ReducerConfig) -> ReducedEmbedding:
    """Embed ``points`` into cfg.n_components dimensions; output rows align
    with input rows. Seeding is applied in canonical id order, so row
    permutations of the input permute the output identically."""
    order = points.canonical_order()
    sorted_m = points.take(order)
    graph = build_graph(sorted_m, cfg)
    pos = optimize_layout(graph, cfg)
    unsort = np.argsort(order, kind="stable")
    return ReducedEmbedding(
        n_components=cfg.n_components,
        coordinates=pos[unsort],
        ids=list(points.ids),
        labels=list(points.labels),
        block_index=points.block_index,
        config=cfg,
    )


def trustworthiness(original, reduced, k: int = 15) -> float:
    """Rank-penalty score in [0, 1]: 1 when the embedding introduces no false
    neighbors at size k."""
    x = original.vectors if isinstance(original, EmbeddingMatrix) else original
    y = reduced.coordinates if isinstance(reduced, ReducedEmbedding) else reduced
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = x.shape[0]
    if y.shape[0] != n:
        raise ValueError("row count mismatch between original and reduced")
    if not 1 <= k <= n - 1:
        raise ValueError("k must be in [1, n-1]")
    dx = pairwise_sqdist(x, x)
    dy = pairwise_sqdist(y, y)
    np.fill_diagonal(dx, np.inf)
    np.fill_diagonal(dy, np.inf)
    order_x = np.argsort(dx, axis=1, kind="stable")
    rank_x = np.empty_like(order_x)
    rows = np.arange(n)[:, None]
    rank_x[rows, order_x] = np.arange(n)[None, :] + 1  # 1-based rank among others
    nn_y = np.argsort(dy, axis=1, kind="stable")[:, :k]
    in_x = np.zeros((n, n), dtype=bool)
    in_x[rows, order_x[:, :k]] = True
    penalty = 0
    for i in range(n):
        for j in nn_y[i]:
            if not in_x[i, j]:
                penalty += rank_x[i, j] - k
    if penalty == 0:
        return 1.0
    return 1.0 - 2.0 / (n * k * (2.0 * n - 3.0 * k - 1.0)) * penalty
