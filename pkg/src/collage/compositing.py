"""Geometric engine: placement, layered visibility, neighbor graph, rendering."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _geometry as geo
from .core import Canvas, CollageConfiguration, ImageState, RasterImage


@dataclass(frozen=True)
class PlacedRaster:
    """A source raster transformed into canvas space."""

    source_id: int
    coverage: np.ndarray  # (ch, cw) uint8
    values: np.ndarray  # (ch, cw) float64 for maps/masks, (ch, cw, 3) uint8 for images


@dataclass(frozen=True)
class VisibilityComposite:
    labels: np.ndarray  # (ch, cw) int16, image id of the topmost cover, -1 empty

    def visible_mask(self, image_id: int) -> np.ndarray:
        return self.labels == image_id

    @property
    def covered(self) -> np.ndarray:
        return self.labels >= 0


def transform(
    source: RasterImage | np.ndarray, state: ImageState, canvas: Canvas, kind: str = "auto"
) -> PlacedRaster:
    """Roto-translate a source raster onto the canvas.

    kind: "image" (bilinear RGB), "map" (mass-conserving scatter of a scalar
    grid) or "auto" (inferred from the input).
    """
    if isinstance(source, RasterImage):
        arr = source.pixels
        source_id = source.id
        kind = "image"
    else:
        arr = np.asarray(source)
        source_id = -1
        if kind == "auto":
            kind = "image" if arr.ndim == 3 else "map"
    h, w = arr.shape[:2]
    theta = state.theta
    cover = geo.rotate_cover(w, h, theta)
    hp, wp = cover.shape
    cw, ch = canvas.width, canvas.height
    coverage = np.zeros((ch, cw), dtype=np.uint8)
    win = geo.paste_window(state.tx, state.ty, wp, hp, cw, ch)
    if kind == "image":
        values = np.zeros((ch, cw, 3), dtype=np.uint8)
        rotated = geo.rotate_bilinear_rgb(arr, theta, cover)
    else:
        values = np.zeros((ch, cw), dtype=np.float64)
        rotated = geo.rotate_scatter(arr.astype(np.float64), theta)
    if win is not None:
        cy, cx, sy, sx = win
        coverage[cy, cx] = cover[sy, sx]
        values[cy, cx] = rotated[sy, sx]
        if kind == "image":
            values[cy, cx][coverage[cy, cx] == 0] = 0
        else:
            values[cy, cx] *= coverage[cy, cx]
    return PlacedRaster(source_id=source_id, coverage=coverage, values=values)


def composite(placed: list[PlacedRaster], layers: list[int]) -> VisibilityComposite:
    """Label each covered canvas cell with the image of the smallest layer value."""
    if sorted(layers) != list(range(len(placed))):
        raise ValueError("layers must be a permutation of 0..N-1")
    ch, cw = placed[0].coverage.shape
    labels = np.full((ch, cw), -1, dtype=np.int16)
    order = sorted(range(len(placed)), key=lambda i: layers[i], reverse=True)
    for i in order:  # paint bottom layer first; later paints overwrite
        labels[placed[i].coverage > 0] = i
    return VisibilityComposite(labels=labels)


def neighbor_graph(comp: VisibilityComposite) -> list[set[int]]:
    """8-adjacency of visible regions; symmetric, irreflexive."""
    labels = comp.labels
    n = int(labels.max()) + 1 if labels.size and labels.max() >= 0 else 0
    n = max(n, 0)
    counts = adjacency_counts(labels, n) if n else np.zeros((0, 0))
    return [set(np.nonzero(counts[i] > 0)[0].tolist()) for i in range(n)]


def adjacency_counts(labels: np.ndarray, n: int) -> np.ndarray:
    """Counts of 8-adjacent cell pairs per unordered image pair (n x n symmetric)."""
    counts = np.zeros((n, n), dtype=np.int64)
    shifts = (
        (labels[:, :-1], labels[:, 1:]),
        (labels[:-1, :], labels[1:, :]),
        (labels[:-1, :-1], labels[1:, 1:]),
        (labels[:-1, 1:], labels[1:, :-1]),
    )
    for a, b in shifts:
        valid = (a >= 0) & (b >= 0) & (a != b)
        if not valid.any():
            continue
        av = a[valid].astype(np.int64)
        bv = b[valid].astype(np.int64)
        lo = np.minimum(av, bv)
        hi = np.maximum(av, bv)
        pair, cnt = np.unique(lo * n + hi, return_counts=True)
        counts[pair // n, pair % n] += cnt
    return counts + counts.T


def convex_hull_area(mask: np.ndarray) -> int:
    """Cell count of the discrete convex hull of the mask's cell centers."""
    mask = np.asarray(mask).astype(bool)
    if not mask.any():
        raise ValueError("convex hull of an empty mask is undefined")
    rowmin, rowmax = geo.extents_from_mask(mask)
    return geo.hull_cell_count(rowmin, rowmax)


def render(config: CollageConfiguration, images: list[RasterImage]) -> RasterImage:
    """Paint the collage bottom-to-top at canvas x render-scale resolution."""
    canvas = config.canvas
    s = canvas.render_scale
    ch, cw = canvas.height * s, canvas.width * s
    out = np.full((ch, cw, 3), 255, dtype=np.uint8)
    order = sorted(range(len(images)), key=lambda i: config.states[i].layer, reverse=True)
    for i in order:
        _paint_scaled(out, images[i].pixels, config.states[i], s)
    return RasterImage(id=-1, pixels=out)


def _paint_scaled(out: np.ndarray, pixels: np.ndarray, state: ImageState, s: int) -> None:
    import math

    h, w = pixels.shape[:2]
    theta = state.theta
    wp, hp = geo.rotated_bbox(w, h, theta)
    ch, cw = out.shape[:2]
    win = geo.paste_window(state.tx * s, state.ty * s, wp * s, hp * s, cw, ch)
    if win is None:
        return
    cy, cx, _, _ = win
    ys = (np.arange(cy.start, cy.stop, dtype=np.float64) + 0.5) / s - state.ty
    xs = (np.arange(cx.start, cx.stop, dtype=np.float64) + 0.5) / s - state.tx
    u, v = np.meshgrid(xs - wp / 2.0, ys - hp / 2.0)
    c, sn = math.cos(theta), math.sin(theta)
    sx = c * u + sn * v + w / 2.0
    sy = -sn * u + c * v + h / 2.0
    inside = (sx >= 0.0) & (sx < w) & (sy >= 0.0) & (sy < h)
    if not inside.any():
        return
    fx = np.clip(sx - 0.5, 0.0, w - 1.0)
    fy = np.clip(sy - 0.5, 0.0, h - 1.0)
    x0 = np.floor(fx).astype(np.int64)
    y0 = np.floor(fy).astype(np.int64)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    ax = (fx - x0)[..., None]
    ay = (fy - y0)[..., None]
    p = pixels.astype(np.float64)
    val = (
        p[y0, x0] * (1 - ax) * (1 - ay)
        + p[y0, x1] * ax * (1 - ay)
        + p[y1, x0] * (1 - ax) * ay
        + p[y1, x1] * ax * ay
    )
    region = out[cy, cx]
    region[inside] = np.clip(np.rint(val[inside]), 0, 255).astype(np.uint8)
    out[cy, cx] = region
