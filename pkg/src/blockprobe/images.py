"""Image decoding and model-input preprocessing.

The preprocessing recipe travels in a JSON sidecar written at model-export
time (mean/std, input size, resize filter), so this side never hardcodes it.
Bilinear resize uses half-pixel-center sampling without antialiasing; the
convention is part of the sidecar contract (see FORMATS.md).
"""

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import ImageDecodeError


@dataclass
class PreprocSpec:
    input_height: int = 224
    input_width: int = 224
    channel_order: str = "RGB"
    mean: tuple[float, float, float] = (0.485, 0.456, 0.406)
    std: tuple[float, float, float] = (0.229, 0.224, 0.225)
    resize_filter: str = "bilinear"

    def __post_init__(self):
        if self.input_height != self.input_width:
            raise ValueError("input must be square")
        if self.channel_order != "RGB":
            raise ValueError("only RGB channel order is supported")
        if self.resize_filter != "bilinear":
            raise ValueError("only bilinear resize is supported")
        if any(s <= 0 for s in self.std):
            raise ValueError("std components must be > 0")


def read_sidecar(path) -> PreprocSpec:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    size = doc["input_size"]
    return PreprocSpec(
        input_height=int(size[0]),
        input_width=int(size[1]),
        channel_order=doc["channel_order"],
        mean=tuple(float(x) for x in doc["mean"]),
        std=tuple(float(x) for x in doc["std"]),
        resize_filter=doc["resize_filter"],
    )


def load_image(path) -> np.ndarray:
    """Decode to an (H, W, 3) float32 RGB array in [0, 1].

    Grayscale is promoted to three equal channels; alpha is composited over
    white. Undecodable files raise ImageDecodeError.
    """
    try:
        with Image.open(path) as img:
            img.load()
            if img.mode in ("RGBA", "LA", "PA") or (
                img.mode == "P" and "transparency" in img.info
            ):
                rgba = img.convert("RGBA")
                background = Image.new("RGBA", rgba.size, (255, 255, 255, 255))
                img = Image.alpha_composite(background, rgba).convert("RGB")
            else:
                img = img.convert("RGB")
            arr = np.asarray(img, dtype=np.float32) / 255.0
    except (UnidentifiedImageError, OSError, SyntaxError, ValueError) as exc:
        raise ImageDecodeError(f"{path}: {exc}") from exc
    return arr


def resize_bilinear(img: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Half-pixel-center bilinear sampling (no antialias), float32."""
    h, w = img.shape[:2]
    if (h, w) == (out_h, out_w):
        return img.astype(np.float32)
    ys = (np.arange(out_h, dtype=np.float64) + 0.5) * (h / out_h) - 0.5
    xs = (np.arange(out_w, dtype=np.float64) + 0.5) * (w / out_w) - 0.5
    y0 = np.clip(np.floor(ys), 0, h - 1).astype(np.int64)
    x0 = np.clip(np.floor(xs), 0, w - 1).astype(np.int64)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    wy = np.clip(ys - y0, 0.0, 1.0).astype(np.float32)[:, None, None]
    wx = np.clip(xs - x0, 0.0, 1.0).astype(np.float32)[None, :, None]
    top = img[y0][:, x0] * (1 - wx) + img[y0][:, x1] * wx
    bot = img[y1][:, x0] * (1 - wx) + img[y1][:, x1] * wx
    return (top * (1 - wy) + bot * wy).astype(np.float32)


def preprocess(img: np.ndarray, spec: PreprocSpec) -> np.ndarray:
    """Resize + per-channel normalize; returns (3, H, W) float32."""
    img = np.asarray(img, dtype=np.float32)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError(f"expected (H, W, 3) image, got {img.shape}")
    img = resize_bilinear(img, spec.input_height, spec.input_width)
    mean = np.asarray(spec.mean, dtype=np.float32)
    std = np.asarray(spec.std, dtype=np.float32)
    return ((img - mean) / std).transpose(2, 0, 1)
