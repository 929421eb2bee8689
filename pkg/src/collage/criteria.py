"""The ten collage criteria and the weighted fitness.

A Scene bundles dataset + importance maps + canvas + alpha blend and caches
the rotated rasters every evaluation needs. An EvaluationContext is the full
set of per-image aggregates for one configuration; criteria are cheap reads
off the context.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _geometry as geo
from .compositing import adjacency_counts
from .core import (
    Canvas,
    CollageConfiguration,
    Dataset,
    ImportanceMap,
    MAP_KINDS,
    THETA_MAX,
    WeightSet,
)
from .importance import MapProviderConfig, combine_maps, dataset_maps

N_CRITERIA = 10
HIST_BINS = 512
CHI2_EPS = 1e-10


@dataclass(frozen=True)
class CriterionVector:
    values: np.ndarray  # (10,) float64, C'_1..C'_10

    def __post_init__(self):
        if self.values.shape != (N_CRITERIA,):
            raise ValueError("criterion vector must have 10 entries")

    def __getitem__(self, index: int) -> float:
        """1-based access matching the C'_i numbering."""
        return float(self.values[index - 1])


def fitness(vector: CriterionVector | np.ndarray, weights: WeightSet) -> float:
    values = vector.values if isinstance(vector, CriterionVector) else np.asarray(vector)
    return float(np.dot(np.asarray(weights.lambdas), values))


@dataclass(frozen=True)
class Needs:
    face: bool = True
    hist: bool = True
    adj: bool = True
    hull: bool = True

    @staticmethod
    def all() -> "Needs":
        return Needs()

    @staticmethod
    def from_weights(weights: WeightSet) -> "Needs":
        lam = weights.lambdas
        return Needs(
            face=lam[3] != 0.0,
            hist=lam[7] != 0.0,
            adj=any(lam[k] != 0.0 for k in (7, 8, 9)),
            hull=lam[6] != 0.0,
        )


@dataclass
class RotatedRasters:
    cover: np.ndarray  # uint8 (hp, wp)
    mass: np.ndarray  # float64 scatter of the combined map
    face: np.ndarray | None  # float64 scatter of the face mask
    bins: np.ndarray | None = None  # int16 RGB bin per covered cell
    kind_mass: dict | None = None  # per-kind scatters (learning features)


class Scene:
    """Dataset + maps + canvas + alpha blend with rotated-raster caching."""

    def __init__(
        self,
        dataset: Dataset,
        maps: list[dict[str, ImportanceMap]],
        canvas: Canvas,
        alphas: tuple[float, float, float],
    ):
        self.dataset = dataset
        self.maps = maps
        self.canvas = canvas
        self.alphas = tuple(alphas)
        self.combined = [combine_maps(m, self.alphas) for m in maps]
        self.msum = np.array([m.sum2() for m in self.combined])
        if np.any(self.msum <= 0.0):
            bad = int(np.argmin(self.msum))
            raise ValueError(f"image {bad} has a zero-integral combined importance map")
        self.fsum = np.array(
            [f.sum2() if f is not None else 0.0 for f in dataset.faces]
        )
        self.face_total = float(self.fsum.sum())
        self._cache: dict[tuple[int, int], RotatedRasters] = {}

    @staticmethod
    def build(
        dataset: Dataset,
        canvas: Canvas | None = None,
        alphas: tuple[float, float, float] = (1.0, 0.0, 0.0),
        map_cfg: MapProviderConfig | None = None,
        maps: list[dict[str, ImportanceMap]] | None = None,
    ) -> "Scene":
        return Scene(
            dataset,
            maps if maps is not None else dataset_maps(dataset, map_cfg),
            canvas or Canvas(),
            alphas,
        )

    @property
    def n_images(self) -> int:
        return self.dataset.n_images

    def rotated(self, image: int, angle_index: int) -> RotatedRasters:
        key = (image, angle_index)
        entry = self._cache.get(key)
        if entry is None:
            from .core import ANGLES

            theta = ANGLES[angle_index]
            img = self.dataset.images[image]
            cover = geo.rotate_cover(img.width, img.height, theta)
            mass = geo.rotate_scatter(self.combined[image].values, theta)
            face_mask = self.dataset.faces[image]
            face = (
                geo.rotate_scatter(face_mask.values.astype(np.float64), theta)
                if face_mask is not None
                else None
            )
            entry = RotatedRasters(cover=cover, mass=mass, face=face)
            self._cache[key] = entry
        return entry

    def rotated_bins(self, image: int, angle_index: int) -> np.ndarray:
        entry = self.rotated(image, angle_index)
        if entry.bins is None:
            from .core import ANGLES

            rgb = geo.rotate_bilinear_rgb(
                self.dataset.images[image].pixels, ANGLES[angle_index], entry.cover
            )
            entry.bins = geo.rgb_bins(rgb)
        return entry.bins

    def rotated_kind_mass(self, image: int, angle_index: int) -> dict:
        entry = self.rotated(image, angle_index)
        if entry.kind_mass is None:
            from .core import ANGLES

            theta = ANGLES[angle_index]
            entry.kind_mass = {
                k: geo.rotate_scatter(self.maps[image][k].values, theta) for k in MAP_KINDS
            }
        return entry.kind_mass

    # ------------------------------------------------------------- evaluation

    def context(self, config: CollageConfiguration, needs: Needs | None = None) -> "EvaluationContext":
        needs = needs or Needs.all()
        n = self.n_images
        if config.n_images != n:
            raise ValueError("configuration size must match the dataset")
        cw, ch = self.canvas.width, self.canvas.height
        labels = np.full((ch, cw), -1, dtype=np.int16)
        windows = []
        order = sorted(range(n), key=lambda i: config.states[i].layer, reverse=True)
        for i in range(n):
            s = config.states[i]
            rot = self.rotated(i, s.theta_index)
            hp, wp = rot.cover.shape
            windows.append(geo.paste_window(s.tx, s.ty, wp, hp, cw, ch))
        for i in order:  # bottom first
            win = windows[i]
            if win is None:
                continue
            cy, cx, sy, sx = win
            rot = self.rotated(i, config.states[i].theta_index)
            region = labels[cy, cx]
            region[rot.cover[sy, sx] > 0] = i
            labels[cy, cx] = region

        vis_count = np.zeros(n, dtype=np.int64)
        vis_mass = np.zeros(n)
        vis_face = np.zeros(n)
        hists = np.zeros((n, HIST_BINS), dtype=np.int64) if needs.hist else None
        hulls = np.full(n, -1.0)
        top = next(i for i in range(n) if config.states[i].layer == 0)
        centroid = (0.0, 0.0)
        for i in range(n):
            win = windows[i]
            if win is None:
                continue
            cy, cx, sy, sx = win
            s = config.states[i]
            rot = self.rotated(i, s.theta_index)
            vis = labels[cy, cx] == i
            vis_count[i] = int(vis.sum())
            if vis_count[i] == 0:
                continue
            vis_mass[i] = float(rot.mass[sy, sx][vis].sum())
            if needs.face and rot.face is not None:
                vis_face[i] = float(rot.face[sy, sx][vis].sum())
            if needs.hist:
                bins = self.rotated_bins(i, s.theta_index)
                hists[i] = np.bincount(bins[sy, sx][vis].ravel(), minlength=HIST_BINS)
            if needs.hull:
                rowmin, rowmax = geo.extents_from_mask(vis)
                hulls[i] = float(geo.hull_cell_count(rowmin, rowmax))
            if i == top:
                ys, xs = np.nonzero(vis)
                centroid = (
                    float(xs.mean()) + cx.start + 0.5,
                    float(ys.mean()) + cy.start + 0.5,
                )
        adjacency = adjacency_counts(labels, n) if needs.adj else None
        return EvaluationContext(
            scene=self,
            config=config,
            labels=labels,
            vis_count=vis_count,
            vis_mass=vis_mass,
            vis_face=vis_face,
            hists=hists,
            hull_areas=hulls,
            adjacency=adjacency,
            top_image=top,
            top_centroid=centroid,
            needs=needs,
        )

    def evaluate(self, config: CollageConfiguration, needs: Needs | None = None) -> CriterionVector:
        return evaluate_context(self.context(config, needs))

    def fitness_of(self, config: CollageConfiguration, weights: WeightSet) -> float:
        needs = Needs.from_weights(weights)
        return fitness(evaluate_context(self.context(config, needs)), weights)


@dataclass
class EvaluationContext:
    scene: Scene
    config: CollageConfiguration
    labels: np.ndarray
    vis_count: np.ndarray
    vis_mass: np.ndarray
    vis_face: np.ndarray
    hists: np.ndarray | None
    hull_areas: np.ndarray
    adjacency: np.ndarray | None
    top_image: int
    top_centroid: tuple[float, float]
    needs: Needs

    @property
    def n(self) -> int:
        return len(self.vis_count)

    @property
    def thetas(self) -> np.ndarray:
        return np.array([s.theta for s in self.config.states])

    def neighbors(self, i: int) -> list[int]:
        return np.nonzero(self.adjacency[i] > 0)[0].tolist()


# ------------------------------------------------------------------ criteria

def c1_visibility(ctx: EvaluationContext) -> float:
    return float(np.mean(ctx.vis_mass / ctx.scene.msum))


def c2_coverage(ctx: EvaluationContext) -> float:
    return float(ctx.vis_count.sum()) / ctx.scene.canvas.area


def c3_ratio_balance(ctx: EvaluationContext) -> float:
    ratios = ctx.vis_mass / ctx.scene.msum
    return 1.0 - float(np.std(ratios))


def c4_face_ratio(ctx: EvaluationContext) -> float:
    if ctx.scene.face_total <= 0.0:
        return 1.0
    return float(ctx.vis_face.sum()) / ctx.scene.face_total


def c5_axis_alignment(ctx: EvaluationContext) -> float:
    return sum(1 for s in ctx.config.states if s.theta_index == 6) / ctx.n


def c6_centrality(ctx: EvaluationContext) -> float:
    if ctx.vis_count[ctx.top_image] == 0:
        return 0.0
    cx, cy = ctx.scene.canvas.centroid
    tx, ty = ctx.top_centroid
    return 1.0 - math.hypot(tx - cx, ty - cy) / ctx.scene.canvas.half_diagonal


def c7_convexity(ctx: EvaluationContext) -> float:
    ratios = [
        ctx.vis_count[i] / ctx.hull_areas[i]
        for i in range(ctx.n)
        if ctx.vis_count[i] > 0 and ctx.hull_areas[i] > 0
    ]
    return float(min(ratios)) if ratios else 0.0


def chi2_distance(h: np.ndarray, g: np.ndarray) -> float:
    diff = h - g
    return 0.5 * float((diff * diff / (h + g + CHI2_EPS)).sum())


def c8_color_similarity(ctx: EvaluationContext) -> float:
    total = 0.0
    norm = ctx.hists / np.maximum(ctx.vis_count[:, None], 1)
    for i in range(ctx.n):
        neigh = ctx.neighbors(i)
        if not neigh:
            continue
        d = sum(chi2_distance(norm[i], norm[j]) for j in neigh)
        total += d / len(neigh)
    return total / ctx.n


def c9_orientation_diversity(ctx: EvaluationContext) -> float:
    thetas = ctx.thetas / THETA_MAX
    total = 0.0
    for i in range(ctx.n):
        group = ctx.neighbors(i) + [i]
        if len(group) > 1:
            total += float(np.std(thetas[group]))
    return total / ctx.n


def c10_min_orientation_difference(ctx: EvaluationContext) -> float:
    thetas = ctx.thetas
    total = 0.0
    for i in range(ctx.n):
        neigh = ctx.neighbors(i)
        if neigh:
            total += min(abs(thetas[i] - thetas[j]) for j in neigh) / THETA_MAX
    return total / ctx.n


def evaluate_context(ctx: EvaluationContext) -> CriterionVector:
    values = np.zeros(N_CRITERIA)
    values[0] = c1_visibility(ctx)
    values[1] = c2_coverage(ctx)
    values[2] = c3_ratio_balance(ctx)
    values[3] = c4_face_ratio(ctx) if ctx.needs.face or ctx.scene.face_total == 0 else 0.0
    values[4] = c5_axis_alignment(ctx)
    values[5] = c6_centrality(ctx)
    if ctx.needs.hull:
        values[6] = c7_convexity(ctx)
    if ctx.needs.adj:
        if ctx.needs.hist:
            values[7] = c8_color_similarity(ctx)
        values[8] = c9_orientation_diversity(ctx)
        values[9] = c10_min_orientation_difference(ctx)
    return CriterionVector(values)


def evaluate_all(config: CollageConfiguration, scene: Scene) -> CriterionVector:
    """All ten criteria for one configuration (single context build)."""
    return scene.evaluate(config, Needs.all())
