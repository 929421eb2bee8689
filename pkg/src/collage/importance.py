"""Per-image importance maps: saliency, color harmony, quality, and their blend.

The harmony and quality providers are desk-scale surrogates: harmony scores
hue-template fit over multi-size windows, quality scores regularity of local
contrast-normalized luminance statistics. Both honor the same contract as the
saliency provider (a [0,1] field matching the image size) and can be overridden
by precomputed maps from the dataset manifest.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import gaussian_filter, uniform_filter
from skimage.color import rgb2luv

from .core import Dataset, ImportanceMap, MAP_KINDS, RasterImage


@dataclass(frozen=True)
class MapProviderConfig:
    saliency_tile: int = 8
    saliency_radii: tuple[int, int, int] = (1, 2, 3)
    harmony_windows: tuple[int, ...] = (9, 17, 33)
    quality_windows: tuple[int, ...] = (9, 17, 33)

    def __post_init__(self):
        if self.saliency_tile < 1:
            raise ValueError("tile size must be >= 1")
        if list(self.saliency_radii) != sorted(set(self.saliency_radii)) or min(self.saliency_radii) < 1:
            raise ValueError("radii must be strictly increasing positive integers")
        for w in (*self.harmony_windows, *self.quality_windows):
            if w < 1 or w % 2 == 0:
                raise ValueError("window sizes must be odd and >= 1")


def _normalize(values: np.ndarray) -> np.ndarray:
    """Min-max normalize to [0,1]; constant maps become all-ones (all-zeros if 0)."""
    lo = float(values.min())
    hi = float(values.max())
    if hi - lo < 1e-12:
        return np.ones_like(values) if hi > 1e-12 else np.zeros_like(values)
    return (values - lo) / (hi - lo)


# --------------------------------------------------------------------------- saliency

def _tile_means_luv(image: RasterImage, tile: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Mean LUV color per tile plus the tile row/col pixel boundaries."""
    luv = rgb2luv(image.pixels)
    h, w = luv.shape[:2]
    ty = np.arange(0, h, tile)
    tx = np.arange(0, w, tile)
    means = np.zeros((len(ty), len(tx), 3))
    for r, y0 in enumerate(ty):
        for c, x0 in enumerate(tx):
            means[r, c] = luv[y0 : y0 + tile, x0 : x0 + tile].reshape(-1, 3).mean(axis=0)
    return means, ty, tx


def _tile_contrast(means: np.ndarray, radius: int) -> np.ndarray:
    """Per-tile sum of LUV distances to all neighbor tiles within the radius."""
    th, tw = means.shape[:2]
    scores = np.zeros((th, tw))
    for dy in range(-radius, radius + 1):
        for dx in range(-radius, radius + 1):
            if dy == 0 and dx == 0:
                continue
            sy0, sy1 = max(0, -dy), min(th, th - dy)
            sx0, sx1 = max(0, -dx), min(tw, tw - dx)
            if sy0 >= sy1 or sx0 >= sx1:
                continue
            a = means[sy0:sy1, sx0:sx1]
            b = means[sy0 + dy : sy1 + dy, sx0 + dx : sx1 + dx]
            scores[sy0:sy1, sx0:sx1] += np.sqrt(((a - b) ** 2).sum(axis=2))
    return scores


def _box3(tiles: np.ndarray) -> np.ndarray:
    return uniform_filter(tiles, size=3, mode="nearest")


def saliency_map(image: RasterImage, cfg: MapProviderConfig | None = None) -> ImportanceMap:
    """Multi-scale tile contrast in LUV, box-filtered, summed, min-max normalized."""
    cfg = cfg or MapProviderConfig()
    tile = cfg.saliency_tile
    if tile > min(image.height, image.width):
        raise ValueError("tile size exceeds image dimensions")
    means, ty, tx = _tile_means_luv(image, tile)
    combined = np.zeros(means.shape[:2])
    for radius in cfg.saliency_radii:
        combined += _box3(_tile_contrast(means, radius))
    combined = _normalize(combined)
    out = np.zeros((image.height, image.width))
    for r, y0 in enumerate(ty):
        for c, x0 in enumerate(tx):
            out[y0 : y0 + tile, x0 : x0 + tile] = combined[r, c]
    return ImportanceMap(out, "sal")


# --------------------------------------------------------------------------- harmony

# Harmonic hue templates: sector half-widths (radians) at relative offsets.
# Derived from the classic i/V/I/T/Y/X sector scheme on the hue wheel.
_TEMPLATES = (
    ((0.0, math.radians(9.0)),),  # i
    ((0.0, math.radians(46.8)),),  # V
    ((0.0, math.radians(9.0)), (math.pi, math.radians(9.0))),  # I
    ((0.0, math.radians(90.0)),),  # T
    ((0.0, math.radians(46.8)), (math.pi, math.radians(9.0))),  # Y
    ((0.0, math.radians(46.8)), (math.pi, math.radians(46.8))),  # X
)
_N_ORIENTATIONS = 24


def _hue_saturation(pixels: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    rgb = pixels.astype(np.float64) / 255.0
    mx = rgb.max(axis=2)
    mn = rgb.min(axis=2)
    delta = mx - mn
    sat = np.where(mx > 0, delta / np.maximum(mx, 1e-12), 0.0)
    hue = np.zeros_like(mx)
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    d = np.maximum(delta, 1e-12)
    hue = np.where(mx == r, ((g - b) / d) % 6.0, hue)
    hue = np.where((mx == g) & (mx != r), (b - r) / d + 2.0, hue)
    hue = np.where((mx == b) & (mx != r) & (mx != g), (r - g) / d + 4.0, hue)
    hue = (hue * (math.pi / 3.0)) % (2 * math.pi)
    hue[delta < 1e-12] = 0.0
    return hue, sat


def _template_deviation(hue: np.ndarray, template, orientation: float) -> np.ndarray:
    """Angular distance of each hue to the nearest sector of the oriented template."""
    dev = np.full(hue.shape, np.pi)
    for offset, half_width in template:
        center = orientation + offset
        d = np.abs((hue - center + math.pi) % (2 * math.pi) - math.pi)
        dev = np.minimum(dev, np.maximum(d - half_width, 0.0))
    return dev


def harmony_map(image: RasterImage, cfg: MapProviderConfig | None = None) -> ImportanceMap:
    """Hue-template harmony over multiple window sizes, summed and normalized.

    Windows with no saturation score 1 (monochrome is maximally harmonious).
    """
    cfg = cfg or MapProviderConfig()
    hue, sat = _hue_saturation(image.pixels)
    shape = hue.shape
    total = np.zeros(shape)
    sat_sums = {w: uniform_filter(sat, size=w, mode="nearest") for w in cfg.harmony_windows}
    best = {w: np.full(shape, np.pi) for w in cfg.harmony_windows}
    for template in _TEMPLATES:
        for k in range(_N_ORIENTATIONS):
            orientation = 2 * math.pi * k / _N_ORIENTATIONS
            dev = _template_deviation(hue, template, orientation)
            wdev = sat * dev
            for w in cfg.harmony_windows:
                mean_dev = uniform_filter(wdev, size=w, mode="nearest") / np.maximum(
                    sat_sums[w], 1e-12
                )
                best[w] = np.minimum(best[w], mean_dev)
    for w in cfg.harmony_windows:
        score = 1.0 - np.clip(best[w], 0.0, math.pi) / math.pi
        score[sat_sums[w] < 1e-9] = 1.0  # achromatic window
        total += score
    return ImportanceMap(_normalize(total), "har")


# --------------------------------------------------------------------------- quality

def quality_map(image: RasterImage, cfg: MapProviderConfig | None = None) -> ImportanceMap:
    """Natural-scene-statistics regularity proxy over multiple window sizes.

    MSCN coefficients are computed once; per window the local MSCN variance is
    compared to its image-global median, scores summed and normalized.
    """
    cfg = cfg or MapProviderConfig()
    gray = image.pixels.astype(np.float64) @ np.array([0.299, 0.587, 0.114])
    mu = gaussian_filter(gray, sigma=7.0 / 6.0, truncate=3.0, mode="nearest")
    sigma = np.sqrt(np.abs(gaussian_filter(gray * gray, sigma=7.0 / 6.0, truncate=3.0, mode="nearest") - mu * mu))
    mscn = (gray - mu) / (sigma + 1.0)
    msq = mscn * mscn
    eps = 1e-6
    total = np.zeros(gray.shape)
    global_var = float(msq.mean())
    for w in cfg.quality_windows:
        local_var = uniform_filter(msq, size=w, mode="nearest")
        med = float(np.median(local_var))
        total += 1.0 / (1.0 + np.abs(local_var - med) / (med + eps))
    med_all = float(np.median(msq))
    total += 1.0 / (1.0 + abs(global_var - med_all) / (med_all + eps))  # whole-image index
    return ImportanceMap(_normalize(total), "qua")


# --------------------------------------------------------------------------- blending

def combine_maps(
    maps: dict[str, ImportanceMap], alphas: tuple[float, float, float]
) -> ImportanceMap:
    """Convex pixelwise blend of the three per-kind maps (order: sal, qua, har)."""
    if any(a < -1e-12 for a in alphas) or abs(sum(alphas) - 1.0) > 1e-9:
        raise ValueError("alphas must be non-negative and sum to 1")
    shapes = {maps[k].values.shape for k in MAP_KINDS}
    if len(shapes) != 1:
        raise ValueError("maps must share dimensions")
    blended = sum(a * maps[k].values for a, k in zip(alphas, MAP_KINDS))
    return ImportanceMap(np.clip(blended, 0.0, 1.0), "combined")


_PROVIDERS = {"sal": saliency_map, "qua": quality_map, "har": harmony_map}


def compute_maps(
    image: RasterImage, cfg: MapProviderConfig | None = None, overrides: dict | None = None
) -> dict[str, ImportanceMap]:
    """All three maps for one image; manifest-provided maps skip computation."""
    overrides = overrides or {}
    out = {}
    for kind in MAP_KINDS:
        out[kind] = overrides.get(kind) or _PROVIDERS[kind](image, cfg)
    return out


def dataset_maps(dataset: Dataset, cfg: MapProviderConfig | None = None) -> list[dict[str, ImportanceMap]]:
    over = dataset.map_overrides or tuple({} for _ in dataset.images)
    return [compute_maps(img, cfg, ov) for img, ov in zip(dataset.images, over)]
