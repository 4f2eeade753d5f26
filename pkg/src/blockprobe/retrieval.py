"""Combined color+texture retrieval over two feature stores.

Distances per attribute are min-max normalized per query across the corpus
(so spaces of different dimensionality and scale are commensurable), then
convexly weighted. Lower combined score = better match.
"""

import base64
import html
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import RetrievalError
from .kernels import pairwise_sqdist
from .matrix import EmbeddingMatrix

_MODES = ("color", "texture", "both")


@dataclass
class RetrievalQuery:
    query_image_id: str
    mode: str = "both"
    weight_color: float = 0.5
    weight_texture: float = 0.5
    top_k: int = 20

    def __post_init__(self):
        if self.mode not in _MODES:
            raise ValueError(f"mode must be one of {_MODES}")
        if self.top_k < 1:
            raise ValueError("top_k must be >= 1")
        if self.mode == "both":
            if not (
                0.0 <= self.weight_color <= 1.0 and 0.0 <= self.weight_texture <= 1.0
            ):
                raise ValueError("weights must lie in [0, 1]")
            if abs(self.weight_color + self.weight_texture - 1.0) > 1e-9:
                raise ValueError("weights must sum to 1 in mode=both")

    def effective_weights(self) -> tuple[float, float]:
        if self.mode == "color":
            return 1.0, 0.0
        if self.mode == "texture":
            return 0.0, 1.0
        return self.weight_color, self.weight_texture


@dataclass
class RetrievalResult:
    query_image_id: str
    mode: str
    records: list[dict]  # image_id, color_score, texture_score, combined_score

    def to_json(self) -> str:
        return json.dumps(
            {
                "query_image_id": self.query_image_id,
                "mode": self.mode,
                "results": self.records,
            },
            indent=2,
        )


def pairwise_distances(query_vector, corpus: EmbeddingMatrix) -> np.ndarray:
    """Euclidean distance from one vector to every corpus row."""
    q = np.asarray(query_vector, dtype=np.float64).reshape(1, -1)
    if q.shape[1] != corpus.dim:
        raise ValueError(f"query dim {q.shape[1]} != corpus dim {corpus.dim}")
    return np.sqrt(pairwise_sqdist(q, corpus.vectors)[0])


def normalize_scores(distances) -> np.ndarray:
    """Min-max map to [0, 1]; a constant vector maps to all zeros."""
    d = np.asarray(distances, dtype=np.float64)
    if d.size == 0:
        raise ValueError("empty distance list")
    lo, hi = float(d.min()), float(d.max())
    if hi == lo:
        return np.zeros_like(d)
    return (d - lo) / (hi - lo)


def combined_rank(
    query: RetrievalQuery,
    color_store: EmbeddingMatrix,
    texture_store: EmbeddingMatrix,
) -> RetrievalResult:
    """Rank the corpus (query excluded) by weighted normalized distance."""
    if set(color_store.ids) != set(texture_store.ids):
        raise RetrievalError("color and texture stores cover different image ids")
    for store, name in ((color_store, "color"), (texture_store, "texture")):
        if query.query_image_id not in store.ids:
            raise RetrievalError(
                f"query id {query.query_image_id!r} missing from {name} store"
            )
    # Align texture rows to color store order.
    tex_row = {img_id: i for i, img_id in enumerate(texture_store.ids)}
    align = [tex_row[img_id] for img_id in color_store.ids]
    q_color = color_store.vectors[color_store.ids.index(query.query_image_id)]
    q_texture = texture_store.vectors[tex_row[query.query_image_id]]
    keep = [i for i, img_id in enumerate(color_store.ids) if img_id != query.query_image_id]
    ids = [color_store.ids[i] for i in keep]
    d_color = pairwise_distances(q_color, color_store)[keep]
    d_texture = pairwise_distances(q_texture, texture_store)[[align[i] for i in keep]]
    s_color = normalize_scores(d_color)
    s_texture = normalize_scores(d_texture)
    wc, wt = query.effective_weights()
    combined = wc * s_color + wt * s_texture
    order = sorted(range(len(ids)), key=lambda i: (combined[i], ids[i]))
    order = order[: query.top_k]
    records = [
        {
            "image_id": ids[i],
            "color_score": float(s_color[i]),
            "texture_score": float(s_texture[i]),
            "combined_score": float(combined[i]),
        }
        for i in order
    ]
    return RetrievalResult(
        query_image_id=query.query_image_id, mode=query.mode, records=records
    )


_PLACEHOLDER_SVG = (
    "<svg xmlns='http://www.w3.org/2000/svg' width='160' height='160'>"
    "<rect width='160' height='160' fill='#ccc'/>"
    "<text x='80' y='84' text-anchor='middle' font-size='14'>missing</text></svg>"
)


def _tile_src(image_id: str, image_paths: dict) -> str:
    path = image_paths.get(image_id)
    if path is not None and Path(path).is_file():
        raw = Path(path).read_bytes()
        suffix = Path(path).suffix.lstrip(".").lower() or "png"
        mime = "image/jpeg" if suffix in ("jpg", "jpeg") else f"image/{suffix}"
        return f"data:{mime};base64,{base64.b64encode(raw).decode('ascii')}"
    return "data:image/svg+xml;base64," + base64.b64encode(
        _PLACEHOLDER_SVG.encode("ascii")
    ).decode("ascii")


def emit_gallery(result: RetrievalResult, image_paths: dict, out) -> None:
    """Self-contained static HTML: query first, then ranked tiles row-major
    with score captions. Byte-identical for identical inputs."""
    parts = [
        "<!DOCTYPE html><html><head><meta charset='utf-8'>",
        f"<title>retrieval: {html.escape(result.query_image_id)}</title>",
        "<style>body{font-family:sans-serif}figure{display:inline-block;"
        "margin:6px;text-align:center}img{width:160px;height:160px;"
        "object-fit:contain;border:1px solid #999}figcaption{font-size:11px}"
        ".query img{border:3px solid #d33}</style></head><body>",
        f"<h1>Query: {html.escape(result.query_image_id)} "
        f"(mode={html.escape(result.mode)})</h1>",
        f"<figure class='query'><img src='{_tile_src(result.query_image_id, image_paths)}'>"
        f"<figcaption>query</figcaption></figure>",
        "<hr>",
    ]
    for rank, rec in enumerate(result.records, start=1):
        parts.append(
            f"<figure><img src='{_tile_src(rec['image_id'], image_paths)}'>"
            f"<figcaption>#{rank} {html.escape(rec['image_id'])}<br>"
            f"combined {rec['combined_score']:.4f} "
            f"(c {rec['color_score']:.4f} / t {rec['texture_score']:.4f})"
            f"</figcaption></figure>"
        )
    parts.append("</body></html>")
    Path(out).write_text("".join(parts), encoding="utf-8")
