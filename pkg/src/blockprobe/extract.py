"""Dataset feature extraction: decode, preprocess, run the graph, pool.

One forward pass serves all five taps, so multi-block extraction costs the
same as a single block. Pooling accumulates per channel in float64 before
narrowing to float32, keeping stored vectors independent of internal tiling.
Undecodable images are skipped with a reason; manifest order is preserved.
"""

import csv
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ImageDecodeError, ManifestError
from .images import PreprocSpec, load_image, preprocess
from .matrix import EmbeddingMatrix
from .runtime import GraphExecutor

log = logging.getLogger(__name__)

BLOCK_NAMES = tuple(f"block{i}" for i in range(1, 6))


@dataclass
class ManifestEntry:
    image_id: str
    path: Path
    label: str


def read_manifest(path) -> list[ManifestEntry]:
    """Parse the image manifest CSV; relative paths resolve against the
    manifest's directory."""
    path = Path(path)
    base = path.parent
    entries = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["image_id", "path", "label"]:
            raise ManifestError(f"{path}: expected header image_id,path,label")
        for lineno, row in enumerate(reader, start=2):
            if len(row) != 3:
                raise ManifestError(f"{path}:{lineno}: expected 3 fields")
            image_id, rel, label = row
            entries.append(ManifestEntry(image_id, base / rel, label))
    if not entries:
        raise ManifestError(f"{path}: no images listed")
    seen = set()
    for e in entries:
        if e.image_id in seen:
            raise ManifestError(f"{path}: duplicate image_id {e.image_id!r}")
        seen.add(e.image_id)
    return entries


def global_average_pool(feature_map: np.ndarray) -> np.ndarray:
    """Spatial mean per channel of a (C, H, W) map -> (C,) float32."""
    feature_map = np.asarray(feature_map)
    if feature_map.ndim != 2 and feature_map.ndim != 3:
        raise ValueError(f"expected (C, H, W) map, got shape {feature_map.shape}")
    if feature_map.ndim == 2:  # tolerate a single-channel (H, W) map
        feature_map = feature_map[None]
    return (
        feature_map.mean(axis=(1, 2), dtype=np.float64).astype(np.float32)
    )


def extract_blocks(executor: GraphExecutor, tensor: np.ndarray) -> dict[str, np.ndarray]:
    """Five feature maps for one preprocessed (3, H, W) tensor."""
    outputs = executor.run(tensor[None])
    missing = [n for n in BLOCK_NAMES if n not in outputs]
    if missing:
        raise ManifestError(f"graph lacks outputs {missing}")
    return {name: outputs[name][0] for name in BLOCK_NAMES}


@dataclass
class ExtractionResult:
    matrices: dict[int, EmbeddingMatrix]  # block index -> matrix
    skipped: list[tuple[str, str]]  # (image_id, reason)


def extract_dataset_blocks(
    executor: GraphExecutor,
    entries: list[ManifestEntry],
    blocks: tuple[int, ...],
    spec: PreprocSpec,
    batch_size: int = 8,
) -> ExtractionResult:
    """Pooled embedding matrices for the requested blocks in one pass."""
    if not entries:
        raise ManifestError("empty manifest")
    ids = [e.image_id for e in entries]
    if len(set(ids)) != len(ids):
        raise ManifestError("duplicate image ids in manifest")
    for b in blocks:
        if not 1 <= b <= 5:
            raise ValueError(f"block index {b} out of range 1..5")
    wanted = [f"block{b}" for b in blocks]
    kept: list[ManifestEntry] = []
    skipped: list[tuple[str, str]] = []
    tensors: list[np.ndarray] = []
    pooled: dict[str, list[np.ndarray]] = {name: [] for name in wanted}

    def flush():
        if not tensors:
            return
        outputs = executor.run(np.stack(tensors))
        for name in wanted:
            maps = outputs[name]
            pooled[name].append(
                maps.mean(axis=(2, 3), dtype=np.float64).astype(np.float32)
            )
        tensors.clear()

    for entry in entries:
        try:
            tensor = preprocess(load_image(entry.path), spec)
        except ImageDecodeError as exc:
            log.warning("skipping %s: %s", entry.image_id, exc)
            skipped.append((entry.image_id, str(exc)))
            continue
        kept.append(entry)
        tensors.append(tensor)
        if len(tensors) == batch_size:
            flush()
    flush()
    if not kept:
        raise ManifestError("all images failed to decode")
    matrices = {}
    for b, name in zip(blocks, wanted):
        matrices[b] = EmbeddingMatrix(
            block_index=b,
            ids=[e.image_id for e in kept],
            labels=[e.label for e in kept],
            vectors=np.concatenate(pooled[name], axis=0),
        )
    return ExtractionResult(matrices=matrices, skipped=skipped)


def extract_dataset(
    executor: GraphExecutor,
    entries: list[ManifestEntry],
    block: int,
    spec: PreprocSpec,
    batch_size: int = 8,
) -> EmbeddingMatrix:
    """Single-block convenience wrapper around extract_dataset_blocks."""
    return extract_dataset_blocks(
        executor, entries, (block,), spec, batch_size
    ).matrices[block]
