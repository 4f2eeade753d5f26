"""Labeled embedding matrices, the currency passed between pipeline stages."""

from dataclasses import dataclass, field

import numpy as np

from .errors import StoreValueError


@dataclass
class EmbeddingMatrix:
    """N pooled feature vectors with image ids and labels, from one block.

    Rows keep the order they were built in; ``canonical_order`` gives the
    permutation that sorts rows by image id, which seeded operations use so
    their results do not depend on row order.
    """

    block_index: int
    ids: list[str] = field(default_factory=list)
    labels: list[str] = field(default_factory=list)
    vectors: np.ndarray = field(default_factory=lambda: np.zeros((0, 0), np.float32))

    def __post_init__(self):
        self.vectors = np.asarray(self.vectors, dtype=np.float32)
        if self.vectors.ndim != 2:
            raise StoreValueError("vectors must be a 2-D array")
        n = self.vectors.shape[0]
        if len(self.ids) != n or len(self.labels) != n:
            raise StoreValueError(
                f"row count mismatch: {len(self.ids)} ids, {len(self.labels)} labels, "
                f"{n} vectors"
            )
        if len(set(self.ids)) != n:
            raise StoreValueError("image ids must be unique")
        if n and not np.isfinite(self.vectors).all():
            raise StoreValueError("vectors contain NaN or Inf")

    @property
    def n(self) -> int:
        return self.vectors.shape[0]

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def canonical_order(self) -> np.ndarray:
        return np.argsort(np.asarray(self.ids, dtype=object), kind="stable")

    def take(self, indices) -> "EmbeddingMatrix":
        indices = np.asarray(indices)
        return EmbeddingMatrix(
            block_index=self.block_index,
            ids=[self.ids[i] for i in indices],
            labels=[self.labels[i] for i in indices],
            vectors=self.vectors[indices],
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, EmbeddingMatrix):
            return NotImplemented
        return (
            self.block_index == other.block_index
            and self.ids == other.ids
            and self.labels == other.labels
            and self.vectors.shape == other.vectors.shape
            and bool(np.array_equal(self.vectors, other.vectors))
        )
