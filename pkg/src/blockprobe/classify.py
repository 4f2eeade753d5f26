"""Trainless kNN attribute classification with stratified cross-validation.

All randomness is confined to one seeded shuffle per class; fold assignment
follows a canonical sort by image id, so reports are invariant to the row
order of the input matrix.
"""

import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from .kernels import pairwise_sqdist
from .matrix import EmbeddingMatrix


@dataclass
class KnnConfig:
    k: int = 5
    metric: str = "euclidean"

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.metric != "euclidean":
            raise ValueError(f"unsupported metric {self.metric!r}")


@dataclass
class FoldAssignment:
    n_folds: int
    fold_of: np.ndarray
    seed: int


@dataclass
class CVReport:
    per_fold_accuracy: list[float]
    mean_accuracy: float
    block_index: int
    k: int
    seed: int

    def to_json(self) -> str:
        return json.dumps(
            {
                "per_fold_accuracy": self.per_fold_accuracy,
                "mean_accuracy": self.mean_accuracy,
                "block_index": self.block_index,
                "k": self.k,
                "seed": self.seed,
            },
            indent=2,
        )


def _vote(labels: list[str], dists: np.ndarray) -> str:
    """Majority label; ties go to the smallest summed distance, then the
    lexicographically smallest label."""
    counts: dict[str, int] = {}
    sums: dict[str, float] = {}
    for lab, d in zip(labels, dists):
        counts[lab] = counts.get(lab, 0) + 1
        sums[lab] = sums.get(lab, 0.0) + float(d)
    best = max(counts.values())
    tied = [lab for lab, c in counts.items() if c == best]
    if len(tied) == 1:
        return tied[0]
    return min(tied, key=lambda lab: (sums[lab], lab))


def _neighbor_order(dists: np.ndarray, id_rank: np.ndarray) -> np.ndarray:
    """Sort by (distance, image-id rank): reproducible under distance ties."""
    return np.lexsort((id_rank, dists))


def knn_predict(train: EmbeddingMatrix, query, cfg: KnnConfig = KnnConfig()) -> str:
    """Label of ``query`` as the representative class of its k nearest rows."""
    if train.n == 0:
        raise ValueError("training matrix is empty")
    query = np.asarray(query, dtype=np.float64).reshape(1, -1)
    if query.shape[1] != train.dim:
        raise ValueError(f"query dim {query.shape[1]} != train dim {train.dim}")
    dists = np.sqrt(pairwise_sqdist(query, train.vectors)[0])
    id_rank = np.argsort(train.canonical_order(), kind="stable")
    order = _neighbor_order(dists, id_rank)[: cfg.k]
    return _vote([train.labels[i] for i in order], dists[order])


def stratified_folds(labels: list[str], n_folds: int, seed: int) -> FoldAssignment:
    """Per class: seeded shuffle, then round-robin over folds (sizes differ by
    at most one within each class). Classes are visited in sorted order so the
    single RNG stream is reproducible."""
    if n_folds < 2:
        raise ValueError("n_folds must be >= 2")
    labels = list(labels)
    rng = np.random.default_rng(seed)
    fold_of = np.empty(len(labels), dtype=np.int64)
    by_class: dict[str, list[int]] = {}
    for i, lab in enumerate(labels):
        by_class.setdefault(lab, []).append(i)
    for lab in sorted(by_class):
        idx = np.array(by_class[lab], dtype=np.int64)
        if len(idx) < n_folds:
            warnings.warn(
                f"class {lab!r} has {len(idx)} members for {n_folds} folds",
                stacklevel=2,
            )
        rng.shuffle(idx)
        for pos, row in enumerate(idx):
            fold_of[row] = pos % n_folds
    return FoldAssignment(n_folds=n_folds, fold_of=fold_of, seed=seed)


def cross_validate(
    matrix: EmbeddingMatrix,
    cfg: KnnConfig = KnnConfig(),
    n_folds: int = 5,
    seed: int = 0,
) -> CVReport:
    """Stratified k-fold accuracy of the kNN classifier over ``matrix``."""
    if matrix.n < n_folds:
        raise ValueError(f"{matrix.n} rows cannot fill {n_folds} folds")
    m = matrix.take(matrix.canonical_order())
    assignment = stratified_folds(m.labels, n_folds, seed)
    vectors = np.asarray(m.vectors, dtype=np.float64)
    per_fold = []
    for f in range(n_folds):
        test_mask = assignment.fold_of == f
        test_idx = np.flatnonzero(test_mask)
        train_idx = np.flatnonzero(~test_mask)
        dmat = np.sqrt(pairwise_sqdist(vectors[test_idx], vectors[train_idx]))
        # Train rows are already in canonical id order, so a stable sort on
        # distance alone realizes the (distance, image_id) tie rule.
        correct = 0
        for r, row in enumerate(test_idx):
            order = np.argsort(dmat[r], kind="stable")[: cfg.k]
            pred = _vote([m.labels[train_idx[i]] for i in order], dmat[r][order])
            if pred == m.labels[row]:
                correct += 1
        per_fold.append(correct / len(test_idx))
    return CVReport(
        per_fold_accuracy=per_fold,
        mean_accuracy=float(np.mean(per_fold)),
        block_index=matrix.block_index,
        k=cfg.k,
        seed=seed,
    )
