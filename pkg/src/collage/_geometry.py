"""Roto-translation primitives shared by compositing, criteria and the optimizer.

Conventions:
  - a source raster of shape (h, w) is rotated about its own center;
  - the rotated result lives in a tight integer bounding box, so placing it on
    the canvas is an integer paste at the state's (tx, ty);
  - coverage uses inverse nearest sampling of cell centers;
  - scalar maps (importance, face bits) are transported by forward scatter of
    per-pixel mass, which conserves the 2-D integral exactly while on-canvas;
  - image pixels use inverse bilinear sampling.
"""

from __future__ import annotations

import math

import numpy as np


def rotated_bbox(w: int, h: int, theta: float) -> tuple[int, int]:
    """(W', H') of the tight bbox of a w x h rectangle rotated by theta."""
    c, s = abs(math.cos(theta)), abs(math.sin(theta))
    wp = int(math.ceil(w * c + h * s - 1e-9))
    hp = int(math.ceil(h * c + w * s - 1e-9))
    return max(wp, 1), max(hp, 1)


def _inverse_coords(w: int, h: int, theta: float) -> tuple[np.ndarray, np.ndarray]:
    """Source coordinates of every bbox cell center (sx, sy arrays of shape (H', W'))."""
    wp, hp = rotated_bbox(w, h, theta)
    c, s = math.cos(theta), math.sin(theta)
    xs = np.arange(wp, dtype=np.float64) + 0.5 - wp / 2.0
    ys = np.arange(hp, dtype=np.float64) + 0.5 - hp / 2.0
    u, v = np.meshgrid(xs, ys)
    sx = c * u + s * v + w / 2.0
    sy = -s * u + c * v + h / 2.0
    return sx, sy


def rotate_cover(w: int, h: int, theta: float) -> np.ndarray:
    """Binary coverage of the rotated rectangle inside its bbox, uint8 (H', W')."""
    sx, sy = _inverse_coords(w, h, theta)
    inside = (sx >= 0.0) & (sx < w) & (sy >= 0.0) & (sy < h)
    return inside.astype(np.uint8)


def rotate_scatter(values: np.ndarray, theta: float) -> np.ndarray:
    """Mass-conserving rotation of a scalar map into its bbox grid (float64).

    Each source pixel's value lands in exactly one bbox cell, so the total is
    preserved; occlusion/clipping bookkeeping stays an exact inequality chain.
    """
    h, w = values.shape
    wp, hp = rotated_bbox(w, h, theta)
    c, s = math.cos(theta), math.sin(theta)
    xs = np.arange(w, dtype=np.float64) + 0.5 - w / 2.0
    ys = np.arange(h, dtype=np.float64) + 0.5 - h / 2.0
    u, v = np.meshgrid(xs, ys)
    tx = c * u - s * v + wp / 2.0
    ty = s * u + c * v + hp / 2.0
    cx = np.clip(np.floor(tx).astype(np.int64), 0, wp - 1)
    cy = np.clip(np.floor(ty).astype(np.int64), 0, hp - 1)
    out = np.zeros(hp * wp, dtype=np.float64)
    np.add.at(out, cy.ravel() * wp + cx.ravel(), values.ravel().astype(np.float64))
    return out.reshape(hp, wp)


def rotate_bilinear_rgb(pixels: np.ndarray, theta: float, cover: np.ndarray | None = None) -> np.ndarray:
    """Rotated RGB raster in the bbox grid via inverse bilinear sampling (uint8)."""
    h, w = pixels.shape[:2]
    sx, sy = _inverse_coords(w, h, theta)
    if cover is None:
        cover = (sx >= 0.0) & (sx < w) & (sy >= 0.0) & (sy < h)
    else:
        cover = cover.astype(bool)
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
    out = np.clip(np.rint(val), 0, 255).astype(np.uint8)
    out[~cover] = 0
    return out


def rgb_bins(rgb: np.ndarray) -> np.ndarray:
    """8x8x8 RGB histogram bin index per cell, int16."""
    r = rgb[..., 0] >> 5
    g = rgb[..., 1] >> 5
    b = rgb[..., 2] >> 5
    return (r.astype(np.int16) << 6) | (g.astype(np.int16) << 3) | b.astype(np.int16)


def paste_window(
    tx: int, ty: int, w: int, h: int, cw: int, ch: int
) -> tuple[slice, slice, slice, slice] | None:
    """Canvas and source slices for pasting an (h, w) raster at (tx, ty); None if disjoint."""
    x0, y0 = max(tx, 0), max(ty, 0)
    x1, y1 = min(tx + w, cw), min(ty + h, ch)
    if x0 >= x1 or y0 >= y1:
        return None
    return (
        slice(y0, y1),
        slice(x0, x1),
        slice(y0 - ty, y1 - ty),
        slice(x0 - tx, x1 - tx),
    )


def extents_from_mask(mask: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-row min/max column of a binary mask; -1 marks empty rows."""
    h, w = mask.shape
    any_row = mask.any(axis=1)
    rowmin = np.full(h, -1, dtype=np.int64)
    rowmax = np.full(h, -1, dtype=np.int64)
    rowmin[any_row] = mask.argmax(axis=1)[any_row]
    rowmax[any_row] = w - 1 - mask[:, ::-1].argmax(axis=1)[any_row]
    return rowmin, rowmax


def _cross(o, a, b) -> int:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def _lower_chain(points: list[tuple[int, int]]) -> list[tuple[int, int]]:
    chain: list[tuple[int, int]] = []
    for p in points:
        while len(chain) >= 2 and _cross(chain[-2], chain[-1], p) <= 0:
            chain.pop()
        chain.append(p)
    return chain


def _chain_values_at_rows(chain: list[tuple[int, int]], y0: int, y1: int) -> tuple[np.ndarray, np.ndarray]:
    """Exact rational boundary values x(y) for y in [y0, y1] as (num, den) arrays."""
    n = y1 - y0 + 1
    num = np.zeros(n, dtype=np.int64)
    den = np.ones(n, dtype=np.int64)
    seg = 0
    for i, y in enumerate(range(y0, y1 + 1)):
        while seg + 1 < len(chain) - 1 and chain[seg + 1][0] <= y:
            seg += 1
        (ya, xa) = chain[seg]
        if len(chain) == 1:
            num[i], den[i] = xa, 1
            continue
        (yb, xb) = chain[seg + 1]
        if yb == ya:
            num[i], den[i] = xa, 1
        else:
            num[i] = xa * (yb - ya) + (xb - xa) * (y - ya)
            den[i] = yb - ya
    return num, den


def hull_cell_count(rowmin: np.ndarray, rowmax: np.ndarray) -> int:
    """Number of cells whose centers lie in the convex hull of the mask's cell centers.

    Row extents fully determine the hull; boundary intersections are evaluated
    with integer arithmetic so the count is exact.
    """
    rows = np.nonzero(rowmin >= 0)[0]
    if rows.size == 0:
        return 0
    y0, y1 = int(rows[0]), int(rows[-1])
    left_pts = [(int(y), int(rowmin[y])) for y in rows]
    right_pts = [(int(y), int(-rowmax[y])) for y in rows]
    left = _lower_chain(left_pts)  # convex minorant of xmin
    right = _lower_chain(right_pts)  # concave majorant of xmax, negated
    lnum, lden = _chain_values_at_rows(left, y0, y1)
    rnum, rden = _chain_values_at_rows(right, y0, y1)
    # ceil(lnum/lden) and floor(-rnum/rden) with positive denominators
    xlo = -((-lnum) // lden)
    xhi = (-rnum) // rden
    widths = xhi - xlo + 1
    return int(widths[widths > 0].sum())
