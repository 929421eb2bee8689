"""Shared domain types: images, maps, states, configurations, weights, datasets."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

THETA_MAX = math.pi / 3.0
THETA_STEP = math.pi / 18.0
N_ANGLES = 13
ANGLES = tuple(-THETA_MAX + k * THETA_STEP for k in range(N_ANGLES))
ZERO_ANGLE_INDEX = 6  # ANGLES[6] == 0.0

MIN_SIDE = 128
MAP_KINDS = ("sal", "qua", "har")


class DatasetError(ValueError):
    """Raised for unloadable or invalid dataset entries."""


def quantize_orientation(theta_raw: float) -> float:
    """Snap an angle to the allowed 13-step set, ties rounding toward zero."""
    return ANGLES[quantize_orientation_index(theta_raw)]


def quantize_orientation_index(theta_raw: float) -> int:
    if not math.isfinite(theta_raw):
        raise ValueError("orientation must be finite")
    t = min(max(theta_raw, -THETA_MAX), THETA_MAX)
    best = 0
    best_d = float("inf")
    for k, a in enumerate(ANGLES):
        d = abs(t - a)
        if d < best_d - 1e-12 or (abs(d - best_d) <= 1e-12 and abs(a) < abs(ANGLES[best])):
            best = k
            best_d = d
    return best


@dataclass(frozen=True)
class RasterImage:
    id: int
    pixels: np.ndarray  # (H, W, 3) uint8

    def __post_init__(self):
        p = self.pixels
        if p.ndim != 3 or p.shape[2] != 3 or p.dtype != np.uint8:
            raise ValueError("pixels must be (H, W, 3) uint8")
        if p.shape[0] < 1 or p.shape[1] < 1:
            raise ValueError("image must be at least 1x1")

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]


@dataclass(frozen=True)
class ImportanceMap:
    values: np.ndarray  # (H, W) float64 in [0, 1]
    kind: str  # sal | qua | har | combined

    def __post_init__(self):
        v = self.values
        if v.ndim != 2:
            raise ValueError("map values must be 2-D")
        if v.size and (float(v.min()) < -1e-12 or float(v.max()) > 1.0 + 1e-12):
            raise ValueError("map values must lie in [0, 1]")

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    def sum2(self) -> float:
        return float(self.values.sum())


@dataclass(frozen=True)
class FaceMask:
    values: np.ndarray  # (H, W) uint8, 1 = face region

    def __post_init__(self):
        v = self.values
        if v.ndim != 2 or v.dtype != np.uint8:
            raise ValueError("face mask must be (H, W) uint8")
        if v.size and int(v.max()) > 1:
            raise ValueError("face mask must be binary")

    def sum2(self) -> float:
        return float(self.values.sum())


@dataclass(frozen=True)
class ImageState:
    """Placement of one image: grid translation, quantized angle, layer (0 = top)."""

    tx: int
    ty: int
    theta_index: int
    layer: int

    def __post_init__(self):
        if not 0 <= self.theta_index < N_ANGLES:
            raise ValueError(f"theta_index {self.theta_index} out of range")
        if self.layer < 0:
            raise ValueError("layer must be non-negative")

    @property
    def theta(self) -> float:
        return ANGLES[self.theta_index]


@dataclass(frozen=True)
class Canvas:
    width: int = 400
    height: int = 400
    render_scale: int = 4

    def __post_init__(self):
        if self.width < 1 or self.height < 1 or self.render_scale < 1:
            raise ValueError("canvas dimensions and render scale must be positive")

    @property
    def area(self) -> int:
        return self.width * self.height

    @property
    def half_diagonal(self) -> float:
        return 0.5 * math.hypot(self.width, self.height)

    @property
    def centroid(self) -> tuple[float, float]:
        return (self.width / 2.0, self.height / 2.0)


@dataclass(frozen=True)
class CollageConfiguration:
    canvas: Canvas
    states: tuple[ImageState, ...]

    def __post_init__(self):
        layers = sorted(s.layer for s in self.states)
        if layers != list(range(len(self.states))):
            raise ValueError("layers must form a permutation of 0..N-1")

    @property
    def n_images(self) -> int:
        return len(self.states)

    def replace_state(self, index: int, state: ImageState) -> "CollageConfiguration":
        states = list(self.states)
        states[index] = state
        return CollageConfiguration(self.canvas, tuple(states))

    def to_json(self) -> dict:
        return {
            "v": 1,
            "canvas": {"w": self.canvas.width, "h": self.canvas.height},
            "states": [
                {"tx": s.tx, "ty": s.ty, "theta_index": s.theta_index, "layer": s.layer}
                for s in self.states
            ],
        }

    @staticmethod
    def from_json(data: dict, render_scale: int = 4) -> "CollageConfiguration":
        canvas = Canvas(data["canvas"]["w"], data["canvas"]["h"], render_scale)
        states = tuple(
            ImageState(s["tx"], s["ty"], s["theta_index"], s["layer"])
            for s in data["states"]
        )
        return CollageConfiguration(canvas, states)


LAMBDA_BOUND = 10.0


@dataclass(frozen=True)
class WeightSet:
    """Ten signed criterion weights plus the simplex-constrained map coefficients."""

    lambdas: tuple[float, ...]
    alphas: tuple[float, float, float]  # (sal, qua, har)

    def __post_init__(self):
        if len(self.lambdas) != 10:
            raise ValueError("exactly 10 lambda weights required")
        if any(not math.isfinite(v) or abs(v) > LAMBDA_BOUND + 1e-9 for v in self.lambdas):
            raise ValueError(f"lambdas must be finite with |lambda| <= {LAMBDA_BOUND}")
        if len(self.alphas) != 3:
            raise ValueError("exactly 3 alpha weights required")
        if any(a < -1e-12 for a in self.alphas):
            raise ValueError("alphas must be non-negative")
        if abs(sum(self.alphas) - 1.0) > 1e-9:
            raise ValueError("alphas must sum to 1")

    @staticmethod
    def basic(map_kind: str = "sal") -> "WeightSet":
        """Unit weights on the three basic criteria with a one-hot map choice."""
        alphas = tuple(1.0 if k == map_kind else 0.0 for k in MAP_KINDS)
        if sum(alphas) != 1.0:
            raise ValueError(f"unknown map kind {map_kind!r}")
        return WeightSet((1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0), alphas)

    def to_json(self) -> dict:
        return {"v": 1, "lambdas": list(self.lambdas), "alphas": list(self.alphas)}

    @staticmethod
    def from_json(data: dict) -> "WeightSet":
        return WeightSet(tuple(data["lambdas"]), tuple(data["alphas"]))


@dataclass(frozen=True)
class ManifestEntry:
    path: Path
    faces: tuple[tuple[int, int, int, int], ...] = ()
    maps: dict = field(default_factory=dict)  # kind -> Path


@dataclass(frozen=True)
class DatasetManifest:
    name: str
    entries: tuple[ManifestEntry, ...]
    base_dir: Path

    def __post_init__(self):
        if len(self.entries) < 2:
            raise DatasetError("a dataset needs at least 2 images")

    @staticmethod
    def load(path: str | Path) -> "DatasetManifest":
        path = Path(path)
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
        base = path.parent
        entries = []
        for raw in data.get("images", []):
            maps = {
                k: base / v
                for k, v in (raw.get("maps") or {}).items()
                if k in ("saliency", "quality", "harmony")
            }
            # map long names to internal kind codes
            maps = {{"saliency": "sal", "quality": "qua", "harmony": "har"}[k]: v for k, v in maps.items()}
            entries.append(
                ManifestEntry(
                    path=base / raw["path"],
                    faces=tuple(tuple(int(x) for x in box) for box in raw.get("faces") or ()),
                    maps=maps,
                )
            )
        return DatasetManifest(name=data.get("name", path.stem), entries=tuple(entries), base_dir=base)


@dataclass(frozen=True)
class Dataset:
    """Loaded, normalized dataset: images at min-side 128 plus optional face masks."""

    name: str
    images: tuple[RasterImage, ...]
    faces: tuple[FaceMask | None, ...]
    map_overrides: tuple[dict, ...] = ()  # per image: kind -> ImportanceMap

    @property
    def n_images(self) -> int:
        return len(self.images)


def _round_half_away(x: float) -> int:
    return int(math.floor(x + 0.5)) if x >= 0 else -int(math.floor(-x + 0.5))


def _resize_min_side(pixels: np.ndarray, target: int = MIN_SIDE) -> tuple[np.ndarray, float]:
    h, w = pixels.shape[:2]
    if min(h, w) == target:
        return pixels, 1.0
    scale = target / min(h, w)
    nw = max(_round_half_away(w * scale), 1)
    nh = max(_round_half_away(h * scale), 1)
    if min(nh, nw) != target:  # rounding guard: the short side must hit target exactly
        if h <= w:
            nh = target
        else:
            nw = target
    img = Image.fromarray(pixels).resize((nw, nh), Image.BILINEAR)
    return np.asarray(img, dtype=np.uint8), scale


def _rasterize_faces(
    boxes, scale: float, shape: tuple[int, int], orig_shape: tuple[int, int], entry: ManifestEntry
) -> FaceMask | None:
    if not boxes:
        return None
    mask = np.zeros(shape, dtype=np.uint8)
    oh, ow = orig_shape
    for (x, y, w, h) in boxes:
        if w <= 0 or h <= 0 or x < 0 or y < 0 or x + w > ow or y + h > oh:
            raise DatasetError(f"face box {(x, y, w, h)} outside image bounds in {entry.path}")
        x0 = _round_half_away(x * scale)
        y0 = _round_half_away(y * scale)
        x1 = _round_half_away((x + w) * scale)
        y1 = _round_half_away((y + h) * scale)
        mask[y0 : min(y1, shape[0]), x0 : min(x1, shape[1])] = 1
    return FaceMask(mask)


def _load_map_png(path: Path, shape: tuple[int, int], kind: str) -> ImportanceMap:
    try:
        img = Image.open(path).convert("L")
    except Exception as exc:
        raise DatasetError(f"cannot load precomputed map {path}: {exc}") from exc
    arr = np.asarray(img, dtype=np.float64) / 255.0
    if arr.shape != shape:
        if (img.width, img.height) != (shape[1], shape[0]):
            img = img.resize((shape[1], shape[0]), Image.BILINEAR)
            arr = np.asarray(img, dtype=np.float64) / 255.0
    return ImportanceMap(arr, kind)


def load_dataset(manifest: DatasetManifest) -> Dataset:
    """Load and normalize all images: min(width, height) == 128, aspect preserved.

    Face boxes are rescaled by the same factor and rasterized to binary masks.
    """
    images: list[RasterImage] = []
    faces: list[FaceMask | None] = []
    overrides: list[dict] = []
    for idx, entry in enumerate(manifest.entries):
        try:
            with Image.open(entry.path) as img:
                pixels = np.asarray(img.convert("RGB"), dtype=np.uint8)
        except Exception as exc:
            raise DatasetError(f"cannot load image {entry.path}: {exc}") from exc
        orig_shape = pixels.shape[:2]
        pixels, scale = _resize_min_side(pixels)
        images.append(RasterImage(id=idx, pixels=pixels))
        faces.append(_rasterize_faces(entry.faces, scale, pixels.shape[:2], orig_shape, entry))
        overrides.append(
            {kind: _load_map_png(p, pixels.shape[:2], kind) for kind, p in entry.maps.items()}
        )
    return Dataset(
        name=manifest.name,
        images=tuple(images),
        faces=tuple(faces),
        map_overrides=tuple(overrides),
    )
