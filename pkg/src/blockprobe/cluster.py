"""Density clustering (HDBSCAN: core distances, mutual reachability, MST,
condensed tree, excess-of-mass selection) and partition agreement scores
(adjusted Rand index, adjusted mutual information).

Everything is deterministic: ties in the MST break on vertex index, clusters
are numbered by their smallest member row.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .kernels import pairwise_sqdist, prim_mst
from .matrix import EmbeddingMatrix

NOISE = -1


@dataclass
class HdbscanParams:
    min_cluster_size: int = 50
    min_samples: int = 10
    leaf_size: int = 40  # accepted for CLI fidelity; brute-force search ignores it
    metric: str = "euclidean"

    def __post_init__(self):
        if self.min_cluster_size < 2:
            raise ValueError("min_cluster_size must be >= 2")
        if self.min_samples < 1:
            raise ValueError("min_samples must be >= 1")
        if self.metric != "euclidean":
            raise ValueError(f"unsupported metric {self.metric!r}")


@dataclass
class ClusterLabeling:
    label_of: np.ndarray

    @property
    def n_clusters(self) -> int:
        return int(len(set(self.label_of[self.label_of != NOISE])))

    @property
    def n_noise(self) -> int:
        return int(np.sum(self.label_of == NOISE))


@dataclass
class AgreementScores:
    ari: float
    ami: float

    def to_json(self, params: HdbscanParams | None = None, labeling=None) -> str:
        doc = {"ari": self.ari, "ami": self.ami}
        if params is not None:
            doc["params"] = {
                "min_cluster_size": params.min_cluster_size,
                "min_samples": params.min_samples,
                "leaf_size": params.leaf_size,
                "metric": params.metric,
            }
        if labeling is not None:
            doc["n_clusters"] = labeling.n_clusters
            doc["n_noise"] = labeling.n_noise
        return json.dumps(doc, indent=2)


def _as_points(points) -> np.ndarray:
    if isinstance(points, EmbeddingMatrix):
        points = points.vectors
    return np.asarray(points, dtype=np.float64)


def core_distances(points, min_samples: int) -> np.ndarray:
    """Distance from each point to its min_samples-th nearest other point."""
    x = _as_points(points)
    n = x.shape[0]
    if n <= min_samples:
        raise ValueError(f"need more than min_samples={min_samples} points, got {n}")
    d = np.sqrt(pairwise_sqdist(x, x))
    np.fill_diagonal(d, np.inf)
    d.sort(axis=1)
    return d[:, min_samples - 1]


def mutual_reachability(d_ab: float, core_a: float, core_b: float) -> float:
    return max(d_ab, core_a, core_b)


def mutual_reachability_matrix(dist: np.ndarray, cores: np.ndarray) -> np.ndarray:
    m = np.maximum(dist, cores[:, None])
    np.maximum(m, cores[None, :], out=m)
    np.fill_diagonal(m, 0.0)
    return m


def minimum_spanning_tree(n: int, weight) -> np.ndarray:
    """MST over n points with ``weight(i, j)`` callable or a dense matrix.

    Returns (n-1, 3) rows of (u, v, w).
    """
    if n < 2:
        raise ValueError("MST needs at least 2 points")
    if callable(weight):
        w = np.zeros((n, n))
        for i in range(n):
            for j in range(i + 1, n):
                w[i, j] = w[j, i] = float(weight(i, j))
    else:
        w = np.asarray(weight, dtype=np.float64)
    return prim_mst(w)


class _UnionFind:
    def __init__(self, n):
        self.parent = list(range(n))

    def find(self, x):
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)


@dataclass
class _Cluster:
    birth: float
    parent: int
    children: list[int] = field(default_factory=list)
    fallout: list[tuple[int, float]] = field(default_factory=list)  # (group, lam)
    split_lambda: float = 0.0
    split_size: int = 0
    size: int = 0


@dataclass
class CondensedTree:
    """Pruned cluster hierarchy over zero-distance point groups."""

    clusters: list[_Cluster]
    groups: list[list[int]]  # group -> member point rows
    n_points: int
    min_cluster_size: int


def condense_tree(mst_edges: np.ndarray, min_cluster_size: int) -> CondensedTree:
    """Build the condensed hierarchy from MST edges.

    Zero-weight edges are contracted first (those points merge at infinite
    density and act as one unit). Splits whose smaller side holds fewer than
    ``min_cluster_size`` points shed those points as fall-outs; splits with
    two large sides create two child clusters.
    """
    edges = np.asarray(mst_edges, dtype=np.float64)
    n = edges.shape[0] + 1
    order = np.lexsort((edges[:, 1], edges[:, 0], edges[:, 2]))
    edges = edges[order]

    uf0 = _UnionFind(n)
    for u, v, w in edges:
        if w == 0.0:
            uf0.union(int(u), int(v))
    root_of = [uf0.find(i) for i in range(n)]
    roots = sorted(set(root_of))
    group_id = {r: g for g, r in enumerate(roots)}
    groups: list[list[int]] = [[] for _ in roots]
    for i in range(n):
        groups[group_id[root_of[i]]].append(i)
    n_groups = len(groups)

    # Single-linkage dendrogram over groups: nodes 0..n_groups-1 are leaves,
    # internal nodes append (left, right, dist, point_count).
    node_left: list[int] = []
    node_right: list[int] = []
    node_dist: list[float] = []
    node_size = [len(g) for g in groups]
    uf = _UnionFind(n_groups)
    current_node = list(range(n_groups))
    next_id = n_groups
    for u, v, w in edges:
        if w == 0.0:
            continue
        gu = uf.find(group_id[root_of[int(u)]])
        gv = uf.find(group_id[root_of[int(v)]])
        if gu == gv:
            continue
        node_left.append(current_node[gu])
        node_right.append(current_node[gv])
        node_dist.append(float(w))
        node_size.append(node_size[current_node[gu]] + node_size[current_node[gv]])
        uf.union(gu, gv)
        current_node[uf.find(gu)] = next_id
        next_id += 1

    def leaf_groups(node: int) -> list[int]:
        out, stack = [], [node]
        while stack:
            v = stack.pop()
            if v < n_groups:
                out.append(v)
            else:
                stack.append(node_left[v - n_groups])
                stack.append(node_right[v - n_groups])
        return out

    clusters = [_Cluster(birth=0.0, parent=-1, size=n)]
    root_node = next_id - 1 if next_id > n_groups else 0
    stack = [(root_node, 0)]
    while stack:
        node, cid = stack.pop()
        if node < n_groups:
            # Pure duplicate group persisting as a cluster: never splits.
            clusters[cid].fallout.append((node, np.inf))
            continue
        k = node - n_groups
        lam = 1.0 / node_dist[k]
        kids = (node_left[k], node_right[k])
        big = [c for c in kids if node_size[c] >= min_cluster_size]
        if len(big) == 2:
            clusters[cid].split_lambda = lam
            clusters[cid].split_size = node_size[kids[0]] + node_size[kids[1]]
            for child in kids:
                new_id = len(clusters)
                clusters.append(
                    _Cluster(birth=lam, parent=cid, size=node_size[child])
                )
                clusters[cid].children.append(new_id)
                stack.append((child, new_id))
        elif len(big) == 1:
            small = kids[0] if node_size[kids[0]] < min_cluster_size else kids[1]
            for g in leaf_groups(small):
                clusters[cid].fallout.append((g, lam))
            stack.append((big[0], cid))
        else:
            for child in kids:
                for g in leaf_groups(child):
                    clusters[cid].fallout.append((g, lam))
    return CondensedTree(
        clusters=clusters, groups=groups, n_points=n, min_cluster_size=min_cluster_size
    )


def cluster_stability(tree: CondensedTree, cid: int) -> float:
    """Sum over member points of (lambda at departure - lambda at birth)."""
    c = tree.clusters[cid]
    total = 0.0
    for g, lam in c.fallout:
        total += len(tree.groups[g]) * (lam - c.birth)
    if c.children:
        total += c.split_size * (c.split_lambda - c.birth)
    return total


def extract_clusters_eom(tree: CondensedTree) -> ClusterLabeling:
    """Excess-of-mass selection: pick the antichain of clusters maximizing
    total stability; everything outside selected subtrees is noise."""
    clusters = tree.clusters
    labels = np.full(tree.n_points, NOISE, dtype=np.int64)
    candidate = [c.size >= tree.min_cluster_size for c in clusters]
    if not clusters or not candidate[0]:
        # Root too small to be a cluster; nothing can be selected.
        return ClusterLabeling(label_of=labels)
    stability = [cluster_stability(tree, cid) for cid in range(len(clusters))]
    score = [0.0] * len(clusters)
    selected = [False] * len(clusters)
    for cid in range(len(clusters) - 1, -1, -1):
        c = clusters[cid]
        child_sum = sum(score[k] for k in c.children)
        if c.children and child_sum > stability[cid]:
            score[cid] = child_sum
        else:
            score[cid] = stability[cid]
            selected[cid] = True
            # Deselect descendants.
            stack = list(c.children)
            while stack:
                k = stack.pop()
                selected[k] = False
                stack.extend(clusters[k].children)

    def subtree_points(cid: int) -> list[int]:
        pts, stack = [], [cid]
        while stack:
            k = stack.pop()
            for g, _ in clusters[k].fallout:
                pts.extend(tree.groups[g])
            stack.extend(clusters[k].children)
        return pts

    chosen = [cid for cid in range(len(clusters)) if selected[cid]]
    members = {cid: subtree_points(cid) for cid in chosen}
    chosen.sort(key=lambda cid: min(members[cid]) if members[cid] else tree.n_points)
    for label, cid in enumerate(chosen):
        for p in members[cid]:
            labels[p] = label
    return ClusterLabeling(label_of=labels)


def hdbscan(points, params: HdbscanParams = HdbscanParams()) -> ClusterLabeling:
    """Full pipeline over an EmbeddingMatrix or raw (n, d) array."""
    x = _as_points(points)
    n = x.shape[0]
    cores = core_distances(x, params.min_samples)
    dist = np.sqrt(pairwise_sqdist(x, x))
    mreach = mutual_reachability_matrix(dist, cores)
    edges = minimum_spanning_tree(n, mreach)
    tree = condense_tree(edges, params.min_cluster_size)
    return extract_clusters_eom(tree)


def _contingency(a, b):
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError(f"labeling length mismatch: {a.shape} vs {b.shape}")
    _, ai = np.unique(a, return_inverse=True)
    _, bi = np.unique(b, return_inverse=True)
    r, c = ai.max() + 1, bi.max() + 1
    table = np.zeros((r, c), dtype=np.int64)
    np.add.at(table, (ai, bi), 1)
    return table


def adjusted_rand_index(a, b) -> float:
    """Hubert-Arabie chance-corrected pair-counting agreement.

    Noise labels (-1) participate as one ordinary cluster.
    """
    table = _contingency(a, b)
    n = int(table.sum())
    if n < 2:
        raise ValueError("ARI needs at least 2 points")
    sum_ij = sum(math.comb(int(v), 2) for v in table.flat)
    sum_a = sum(math.comb(int(v), 2) for v in table.sum(axis=1))
    sum_b = sum(math.comb(int(v), 2) for v in table.sum(axis=0))
    expected = sum_a * sum_b / math.comb(n, 2)
    max_index = (sum_a + sum_b) / 2.0
    if max_index == expected:
        # Both partitions trivial (all-singletons or one cluster): identical.
        return 1.0
    return (sum_ij - expected) / (max_index - expected)


def expected_mutual_information(row_sums, col_sums, n: int) -> float:
    """Exact E[MI] under the hypergeometric model of random contingency
    tables with fixed margins."""
    lgf = np.zeros(n + 1)
    lgf[1:] = np.cumsum(np.log(np.arange(1, n + 1, dtype=np.float64)))
    logn = math.log(n)
    emi = 0.0
    for a in row_sums:
        a = int(a)
        for b in col_sums:
            b = int(b)
            lo = max(1, a + b - n)
            hi = min(a, b)
            if hi < lo:
                continue
            nij = np.arange(lo, hi + 1, dtype=np.float64)
            log_term = (
                lgf[a]
                + lgf[b]
                + lgf[n - a]
                + lgf[n - b]
                - lgf[n]
                - lgf[lo : hi + 1]
                - lgf[a - np.arange(lo, hi + 1)]
                - lgf[b - np.arange(lo, hi + 1)]
                - lgf[n - a - b + np.arange(lo, hi + 1)]
            )
            mi_term = (nij / n) * (np.log(nij) + logn - math.log(a) - math.log(b))
            emi += float(np.sum(mi_term * np.exp(log_term)))
    return emi


def _entropy(counts, n: int) -> float:
    counts = counts[counts > 0].astype(np.float64)
    p = counts / n
    return float(-np.sum(p * np.log(p)))


def adjusted_mutual_info(a, b) -> float:
    """Mutual information chance-corrected by the hypergeometric E[MI],
    normalized by the mean of the two entropies."""
    table = _contingency(a, b)
    n = int(table.sum())
    row_sums = table.sum(axis=1)
    col_sums = table.sum(axis=0)
    h_a = _entropy(row_sums, n)
    h_b = _entropy(col_sums, n)
    if h_a == 0.0 and h_b == 0.0:
        # Two one-cluster partitions agree perfectly.
        return 1.0
    nz = table > 0
    nij = table[nz].astype(np.float64)
    outer = np.outer(row_sums, col_sums)[nz].astype(np.float64)
    mi = float(np.sum((nij / n) * np.log(n * nij / outer)))
    emi = expected_mutual_information(row_sums, col_sums, n)
    denom = (h_a + h_b) / 2.0 - emi
    if denom == 0.0:
        return 1.0
    return (mi - emi) / denom
