"""Deterministic synthetic photo sets for demos, benchmarks and end-to-end runs."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from PIL import Image

from .core import Dataset, DatasetManifest, FaceMask, RasterImage, load_dataset

_SKIN = np.array([224, 172, 138], dtype=np.float64)


def _gradient(h: int, w: int, c0: np.ndarray, c1: np.ndarray, axis: int) -> np.ndarray:
    t = np.linspace(0.0, 1.0, h if axis == 0 else w)
    ramp = t[:, None] if axis == 0 else t[None, :]
    grad = c0 * (1.0 - ramp[..., None]) + c1 * ramp[..., None]
    return np.broadcast_to(grad, (h, w, 3)).copy()


def _ellipse_mask(h: int, w: int, cy: float, cx: float, ry: float, rx: float) -> np.ndarray:
    ys = np.arange(h)[:, None]
    xs = np.arange(w)[None, :]
    return ((ys - cy) / ry) ** 2 + ((xs - cx) / rx) ** 2 <= 1.0


def _paint_face(img: np.ndarray, rng: np.random.Generator) -> tuple[int, int, int, int]:
    h, w = img.shape[:2]
    fw = int(rng.integers(w // 6, w // 4))
    fh = int(fw * 1.3)
    x = int(rng.integers(fw, w - 2 * fw))
    y = int(rng.integers(fh, h - 2 * fh))
    cy, cx = y + fh / 2, x + fw / 2
    face = _ellipse_mask(h, w, cy, cx, fh / 2, fw / 2)
    img[face] = _SKIN * rng.uniform(0.85, 1.1)
    for ex in (cx - fw / 5, cx + fw / 5):
        eye = _ellipse_mask(h, w, cy - fh / 8, ex, fh / 12, fw / 10)
        img[eye] = (40, 30, 30)
    mouth = _ellipse_mask(h, w, cy + fh / 4, cx, fh / 16, fw / 4)
    img[mouth] = (150, 60, 60)
    return (x, y, fw, fh)


def _toy_image(rng: np.random.Generator, h: int, w: int, with_face: bool):
    c0 = rng.uniform(30, 220, 3)
    c1 = rng.uniform(30, 220, 3)
    img = _gradient(h, w, c0, c1, axis=int(rng.integers(2)))
    # a few colored blobs as salient content
    for _ in range(int(rng.integers(2, 5))):
        ry = float(rng.uniform(h / 12, h / 5))
        rx = float(rng.uniform(w / 12, w / 5))
        cy = float(rng.uniform(ry, h - ry))
        cx = float(rng.uniform(rx, w - rx))
        blob = _ellipse_mask(h, w, cy, cx, ry, rx)
        img[blob] = rng.uniform(0, 255, 3)
    # a textured band
    y0 = int(rng.integers(0, h // 2))
    band = rng.normal(0.0, 28.0, (h // 6, w, 3))
    img[y0 : y0 + h // 6] = np.clip(img[y0 : y0 + h // 6] + band, 0, 255)
    faces = []
    if with_face:
        faces.append(_paint_face(img, rng))
    return np.clip(img, 0, 255).astype(np.uint8), faces


_TOY_SIZES = (
    (192, 256), (256, 192), (192, 192), (256, 256), (160, 288), (288, 160), (224, 224),
    (192, 256), (256, 192), (208, 240), (240, 208), (192, 224), (224, 192), (256, 224),
)


def generate_toy_dataset(
    out_dir: str | Path, seed: int = 2024, n_images: int = 14, name: str = "toyset"
) -> Path:
    """Write a procedural photo set plus manifest; returns the manifest path."""
    out = Path(out_dir)
    (out / "images").mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    entries = []
    for i in range(n_images):
        h, w = _TOY_SIZES[i % len(_TOY_SIZES)]
        pixels, faces = _toy_image(rng, h, w, with_face=(i % 4 == 1))
        rel = f"images/img{i:02d}.png"
        Image.fromarray(pixels).save(out / rel)
        entry = {"path": rel}
        if faces:
            entry["faces"] = [list(b) for b in faces]
        entries.append(entry)
    manifest = {"v": 1, "name": name, "images": entries}
    path = out / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2), encoding="utf-8")
    return path


def synthetic_dataset(n_images: int, seed: int = 0, size: tuple[int, int] = (128, 160)) -> Dataset:
    """In-memory random-content dataset (already at working resolution)."""
    rng = np.random.default_rng(seed)
    images = []
    faces = []
    h, w = size
    for i in range(n_images):
        img, boxes = _toy_image(rng, h, w, with_face=(i % 5 == 2))
        images.append(RasterImage(id=i, pixels=img))
        if boxes:
            mask = np.zeros((h, w), dtype=np.uint8)
            for (x, y, bw, bh) in boxes:
                mask[y : y + bh, x : x + bw] = 1
            faces.append(FaceMask(mask))
        else:
            faces.append(None)
    return Dataset(name=f"synthetic-{n_images}-{seed}", images=tuple(images), faces=tuple(faces))


def load_manifest_dataset(manifest_path: str | Path) -> Dataset:
    return load_dataset(DatasetManifest.load(manifest_path))
