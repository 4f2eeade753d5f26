"""Synthetic garment-like image generators.

Two families: color sets (10 paper colors; each image a jittered silhouette
filled with one class-constrained color, so only color predicts the class)
and texture sets (6 procedural patterns rendered in randomized class-
independent colors, so only the pattern predicts the class).

Generation is deterministic: each image draws from its own RNG stream keyed
by (seed, kind, class, index), so datasets are byte-identical for one spec
regardless of generation order.
"""

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

# HSV class ranges (hue degrees, may wrap past 360; saturation and value in
# [0, 1]). Documented in FORMATS.md; tests assert foreground pixels stay in
# range.
COLOR_HSV_RANGES = {
    "red": {"hue": (348.0, 372.0), "sat": (0.65, 1.0), "val": (0.50, 0.90)},
    "orange": {"hue": (18.0, 40.0), "sat": (0.70, 1.0), "val": (0.60, 0.95)},
    "brown": {"hue": (16.0, 38.0), "sat": (0.50, 0.90), "val": (0.22, 0.45)},
    "yellow": {"hue": (48.0, 64.0), "sat": (0.65, 1.0), "val": (0.70, 1.0)},
    "green": {"hue": (95.0, 145.0), "sat": (0.45, 0.95), "val": (0.30, 0.80)},
    "blue": {"hue": (200.0, 240.0), "sat": (0.50, 0.95), "val": (0.35, 0.80)},
    "purple": {"hue": (262.0, 292.0), "sat": (0.40, 0.85), "val": (0.30, 0.70)},
    "pink": {"hue": (318.0, 345.0), "sat": (0.30, 0.70), "val": (0.75, 1.0)},
    "black": {"hue": (0.0, 360.0), "sat": (0.0, 0.30), "val": (0.02, 0.13)},
    "gray": {"hue": (0.0, 360.0), "sat": (0.0, 0.08), "val": (0.35, 0.75)},
}

COLOR_CLASSES = tuple(sorted(COLOR_HSV_RANGES))
TEXTURE_CLASSES = ("argyle", "basic", "leopard", "polka", "squared", "striped")

_KIND_CODE = {"color": 0, "texture": 1}


@dataclass
class SynthSpec:
    kind: str
    classes: tuple[str, ...] = ()
    images_per_class: int = 100
    image_size: int = 256
    seed: int = 0

    def __post_init__(self):
        if self.kind not in _KIND_CODE:
            raise ValueError("kind must be 'color' or 'texture'")
        if not self.classes:
            self.classes = COLOR_CLASSES if self.kind == "color" else TEXTURE_CLASSES
        if self.kind == "color" and any(c not in COLOR_HSV_RANGES for c in self.classes):
            raise ValueError("unknown color class")
        if self.kind == "texture" and any(c not in TEXTURE_CLASSES for c in self.classes):
            raise ValueError("unknown texture class")


def _hsv_to_rgb(h, s, v):
    """Vectorized HSV (all in [0,1]) to RGB planes."""
    h6 = (h % 1.0) * 6.0
    i = np.floor(h6).astype(np.int64) % 6
    f = h6 - np.floor(h6)
    p = v * (1.0 - s)
    q = v * (1.0 - s * f)
    t = v * (1.0 - s * (1.0 - f))
    r = np.choose(i, [v, q, p, p, t, v])
    g = np.choose(i, [t, v, v, q, p, p])
    b = np.choose(i, [p, p, t, v, v, q])
    return r, g, b


def _rot_coords(size, cx, cy, theta):
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    dx, dy = xx - cx, yy - cy
    c, s = np.cos(theta), np.sin(theta)
    return dx * c + dy * s, -dx * s + dy * c


def _silhouette(rng, size):
    """Random garment-ish mask: strong jitter in kind, scale, pose."""
    kind = rng.choice(["tee", "dress", "skirt", "pants", "ellipse"])
    cx = size * (0.5 + rng.uniform(-0.07, 0.07))
    cy = size * (0.5 + rng.uniform(-0.07, 0.07))
    h = size * rng.uniform(0.45, 0.80)
    theta = rng.uniform(-0.22, 0.22)
    u, v = _rot_coords(size, cx, cy, theta)
    if kind == "tee":
        w = h * rng.uniform(0.55, 0.8)
        sleeve = w * rng.uniform(0.25, 0.45)
        torso = (np.abs(u) < w / 2) & (np.abs(v) < h / 2)
        arms = (np.abs(u) < w / 2 + sleeve) & (v > -h / 2) & (v < -h / 2 + 0.3 * h)
        return torso | arms
    if kind in ("dress", "skirt"):
        if kind == "skirt":
            h *= rng.uniform(0.55, 0.75)
        wt = h * rng.uniform(0.3, 0.5)
        wb = h * rng.uniform(0.65, 1.0)
        t = np.clip((v + h / 2) / h, 0.0, 1.0)
        half = (wt + (wb - wt) * t) / 2
        return (np.abs(u) < half) & (np.abs(v) < h / 2)
    if kind == "pants":
        legw = h * rng.uniform(0.14, 0.22)
        gap = h * rng.uniform(0.05, 0.12)
        hip = (np.abs(u) < legw + gap / 2) & (v > -h / 2) & (v < -h / 2 + 0.3 * h)
        legs = (
            (np.abs(u) > gap / 2)
            & (np.abs(u) < gap / 2 + legw)
            & (v >= -h / 2 + 0.3 * h)
            & (v < h / 2)
        )
        return hip | legs
    a = h * rng.uniform(0.35, 0.55)
    b = h / 2
    return (u / a) ** 2 + (v / b) ** 2 <= 1.0


def _sample_range(rng, lo_hi):
    return rng.uniform(lo_hi[0], lo_hi[1])


def _pattern_mask(rng, name, size):
    """Binary foreground mask of the texture pattern, plus an optional
    (mask, kind) overlay for patterns needing a third tone."""
    theta = rng.uniform(0.0, np.pi)
    cx = cy = size / 2
    overlay = None
    if name == "striped":
        period = rng.uniform(14.0, 40.0)
        duty = rng.uniform(0.42, 0.58)
        u, _ = _rot_coords(size, cx, cy, theta)
        fg = (u / period) % 1.0 < duty
    elif name == "squared":
        cell = rng.uniform(14.0, 36.0)
        u, v = _rot_coords(size, cx, cy, rng.uniform(-0.25, 0.25))
        fg = (np.floor(u / cell) + np.floor(v / cell)) % 2 == 0
    elif name == "polka":
        spacing = rng.uniform(22.0, 44.0)
        radius = spacing * rng.uniform(0.22, 0.32)
        u, v = _rot_coords(size, cx, cy, rng.uniform(-0.3, 0.3))
        row = np.floor(v / spacing)
        uu = u + (row % 2) * spacing / 2
        du = uu - (np.floor(uu / spacing) + 0.5) * spacing
        dv = v - (row + 0.5) * spacing
        fg = du**2 + dv**2 < radius**2
    elif name == "argyle":
        cell = rng.uniform(22.0, 44.0)
        u, v = _rot_coords(size, cx, cy, np.pi / 4 + rng.uniform(-0.12, 0.12))
        fg = (np.floor(u / cell) + np.floor(v / cell)) % 2 == 0
        lw = cell * rng.uniform(0.05, 0.09)
        lines = (np.abs((u / cell) % 1.0 - 0.5) * cell < lw) | (
            np.abs((v / cell) % 1.0 - 0.5) * cell < lw
        )
        overlay = lines
    elif name == "leopard":
        fg = np.zeros((size, size), dtype=bool)
        core = np.zeros((size, size), dtype=bool)
        yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
        n_spots = rng.integers(50, 90)
        for _ in range(n_spots):
            px, py = rng.uniform(0, size, 2)
            r = rng.uniform(7.0, 15.0)
            ecc = rng.uniform(0.7, 1.3)
            ang = rng.uniform(0, np.pi)
            ca, sa = np.cos(ang), np.sin(ang)
            du = ((xx - px) * ca + (yy - py) * sa) / ecc
            dv = (-(xx - px) * sa + (yy - py) * ca) * ecc
            phase = rng.uniform(0, 2 * np.pi)
            wobble = 1.0 + 0.25 * np.sin(3.0 * np.arctan2(dv, du) + phase)
            d = np.sqrt(du**2 + dv**2) / (r * wobble)
            fg |= (d > 0.55) & (d < 1.0)
            core |= d <= 0.45
        overlay = core
    elif name == "basic":
        fg = np.zeros((size, size), dtype=bool)
    else:
        raise ValueError(f"unknown texture class {name!r}")
    return fg, overlay


def _value_noise(rng, size, base, amp):
    return np.clip(base * (1.0 + rng.uniform(-amp, amp, (size, size))), 0.0, 1.0)


def _render_color(rng, cls, size):
    ranges = COLOR_HSV_RANGES[cls]
    hue = (_sample_range(rng, ranges["hue"]) % 360.0) / 360.0
    sat = _sample_range(rng, ranges["sat"])
    val = _sample_range(rng, ranges["val"])
    mask = _silhouette(rng, size)
    h_plane = np.full((size, size), hue)
    s_plane = np.where(mask, sat, 0.0)
    # Keep the +-8% speckle inside the class value range so every foreground
    # pixel stays classifiable.
    v_noisy = np.clip(_value_noise(rng, size, val, 0.08), *ranges["val"])
    v_plane = np.where(mask, v_noisy, 1.0)
    return _hsv_to_rgb(h_plane, s_plane, v_plane)


def _random_garment_colors(rng):
    """Light base + dark pattern tones (order shuffled), hues unconstrained:
    the same distribution for every texture class."""
    h1, h2, h3 = rng.uniform(0.0, 1.0, 3)
    s1, s2, s3 = rng.uniform(0.35, 0.9, 3)
    v_light = rng.uniform(0.6, 0.95)
    v_dark = rng.uniform(0.08, 0.35)
    v_mid = rng.uniform(0.4, 0.55)
    pair = [(h1, s1, v_light), (h2, s2, v_dark)]
    if rng.random() < 0.5:
        pair.reverse()
    return pair[0], pair[1], (h3, s3, v_mid)


def _render_texture(rng, cls, size):
    base_hsv, pat_hsv, third_hsv = _random_garment_colors(rng)
    mask = _silhouette(rng, size)
    fg, overlay = _pattern_mask(rng, cls, size)
    h_plane = np.full((size, size), base_hsv[0])
    s_plane = np.full((size, size), base_hsv[1])
    v_base = _value_noise(rng, size, base_hsv[2], 0.05)
    v_pat = _value_noise(rng, size, pat_hsv[2], 0.05)
    v_plane = v_base.copy()
    pat = mask & fg
    h_plane[pat] = pat_hsv[0]
    s_plane[pat] = pat_hsv[1]
    v_plane[pat] = v_pat[pat]
    if overlay is not None:
        ov = mask & overlay
        h_plane[ov] = third_hsv[0]
        s_plane[ov] = third_hsv[1]
        v_plane[ov] = third_hsv[2]
    s_plane = np.where(mask, s_plane, 0.0)
    v_plane = np.where(mask, v_plane, 1.0)
    return _hsv_to_rgb(h_plane, s_plane, v_plane)


def _write_dataset(spec: SynthSpec, out_dir, render) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    kind_code = _KIND_CODE[spec.kind]
    for ci, cls in enumerate(spec.classes):
        cls_dir = out_dir / cls
        cls_dir.mkdir(exist_ok=True)
        for ii in range(spec.images_per_class):
            rng = np.random.default_rng([spec.seed, kind_code, ci, ii])
            r, g, b = render(rng, cls, spec.image_size)
            rgb = np.stack([r, g, b], axis=-1)
            pixels = np.clip(np.rint(rgb * 255.0), 0, 255).astype(np.uint8)
            rel = f"{cls}/{ii:03d}.png"
            Image.fromarray(pixels, mode="RGB").save(cls_dir / f"{ii:03d}.png")
            rows.append((f"{cls}_{ii:03d}", rel, cls))
    manifest = out_dir / "manifest.csv"
    with open(manifest, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["image_id", "path", "label"])
        writer.writerows(rows)
    return manifest


def synth_color_dataset(spec: SynthSpec, out_dir) -> Path:
    """Write PNGs plus manifest.csv; returns the manifest path."""
    if spec.kind != "color":
        raise ValueError("spec.kind must be 'color'")
    return _write_dataset(spec, out_dir, _render_color)


def synth_texture_dataset(spec: SynthSpec, out_dir) -> Path:
    if spec.kind != "texture":
        raise ValueError("spec.kind must be 'texture'")
    return _write_dataset(spec, out_dir, _render_texture)
