"""Discrete best-improvement search over image placements."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from ._sweep import SweepEngine
from .core import (
    Canvas,
    CollageConfiguration,
    Dataset,
    ImageState,
    ImportanceMap,
    N_ANGLES,
    WeightSet,
)
from .criteria import Needs, Scene, evaluate_context, fitness


@dataclass(frozen=True)
class SearchSpec:
    """Search-space and budget parameters for the placement search.

    Positions default to the regular grid from -2g to the canvas side on each
    axis; angles default to the full quantized set. Both can be overridden
    explicitly for reduced-space experiments.
    """

    grid: int = 50
    max_iters: int = 50
    seed: int = 0
    restarts: int = 1
    positions: tuple[tuple[int, int], ...] | None = None
    angle_indices: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.grid < 1:
            raise ValueError("grid step must be >= 1")
        if self.max_iters < 1:
            raise ValueError("max iterations must be >= 1")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")

    def resolved_positions(self, canvas: Canvas) -> tuple[tuple[int, int], ...]:
        if self.positions is not None:
            return tuple((int(x), int(y)) for x, y in self.positions)
        g = self.grid
        xs = range(-2 * g, canvas.width + 1, g)
        ys = range(-2 * g, canvas.height + 1, g)
        return tuple((x, y) for y in ys for x in xs)

    def resolved_angles(self) -> tuple[int, ...]:
        if self.angle_indices is not None:
            return tuple(int(a) for a in self.angle_indices)
        return tuple(range(N_ANGLES))


@dataclass
class SearchTrace:
    best_fitness: list[float] = field(default_factory=list)
    moves: list[dict] = field(default_factory=list)
    wall_time: float = 0.0
    n_sweeps: int = 0

    def to_json(self) -> dict:
        return {
            "v": 1,
            "best_fitness": self.best_fitness,
            "moves": self.moves,
            "wall_time": self.wall_time,
            "n_sweeps": self.n_sweeps,
        }


def assign_layers(maps: list[ImportanceMap]) -> tuple[int, ...]:
    """Layer per image: 0 (top) for the largest map integral, ties by index."""
    order = sorted(range(len(maps)), key=lambda i: (-maps[i].sum2(), i))
    layers = [0] * len(maps)
    for rank, i in enumerate(order):
        layers[i] = rank
    return tuple(layers)


def random_init(scene: Scene, spec: SearchSpec, seed: int | None = None) -> CollageConfiguration:
    """Uniform random grid position and angle per image; layers from map integrals."""
    rng = np.random.default_rng(spec.seed if seed is None else seed)
    positions = spec.resolved_positions(scene.canvas)
    angles = spec.resolved_angles()
    layers = assign_layers(scene.combined)
    states = []
    for i in range(scene.n_images):
        tx, ty = positions[int(rng.integers(len(positions)))]
        ai = angles[int(rng.integers(len(angles)))]
        states.append(ImageState(tx, ty, ai, layers[i]))
    return CollageConfiguration(scene.canvas, tuple(states))


def _resolve_scene(source, weights: WeightSet, canvas: Canvas | None) -> Scene:
    if isinstance(source, Scene):
        if any(abs(a - b) > 1e-9 for a, b in zip(source.alphas, weights.alphas)):
            raise ValueError("scene alpha blend does not match the weight set")
        return source
    if isinstance(source, Dataset):
        return Scene.build(source, canvas, weights.alphas)
    raise TypeError("expected a Scene or Dataset")


def optimize(
    source: Scene | Dataset,
    weights: WeightSet,
    spec: SearchSpec,
    init: CollageConfiguration | None = None,
    canvas: Canvas | None = None,
) -> tuple[CollageConfiguration, SearchTrace]:
    """Best-improvement coordinate search over placements, layers held fixed.

    Each sweep visits images top layer first; for each image every candidate
    (position, angle) is scored with all other states held at the current
    best, and the best strictly-improving candidate is adopted. Terminates
    after a sweep with no improvement or at the iteration budget. With
    restarts > 1 the whole search is repeated from fresh seeded inits and the
    best run is returned.
    """
    scene = _resolve_scene(source, weights, canvas)
    best: tuple[CollageConfiguration, SearchTrace] | None = None
    for r in range(spec.restarts):
        start = init if (init is not None and r == 0) else random_init(
            scene, spec, spec.seed + r
        )
        config, trace = _single_run(scene, weights, spec, start)
        if best is None or trace.best_fitness[-1] > best[1].best_fitness[-1]:
            best = (config, trace)
    return best


def _single_run(
    scene: Scene, weights: WeightSet, spec: SearchSpec, config: CollageConfiguration
) -> tuple[CollageConfiguration, SearchTrace]:
    t0 = time.perf_counter()
    needs = Needs.from_weights(weights)
    engine = SweepEngine(
        scene, weights, spec.resolved_positions(scene.canvas), spec.resolved_angles()
    )
    cur_f = fitness(evaluate_context(scene.context(config, needs)), weights)
    trace = SearchTrace(best_fitness=[cur_f])
    sweep_order = sorted(range(scene.n_images), key=lambda i: config.states[i].layer)
    for sweep in range(spec.max_iters):
        improved = False
        for i in sweep_order:
            est_f, tx, ty, ai = engine.best_candidate(config, i)
            if est_f <= cur_f:
                continue
            cand = config.replace_state(
                i, ImageState(tx, ty, ai, config.states[i].layer)
            )
            cand_f = fitness(evaluate_context(scene.context(cand, needs)), weights)
            if cand_f > cur_f:
                config = cand
                cur_f = cand_f
                improved = True
                trace.moves.append(
                    {"sweep": sweep, "image": i, "tx": tx, "ty": ty, "theta_index": ai, "fitness": cand_f}
                )
        trace.best_fitness.append(cur_f)
        trace.n_sweeps = sweep + 1
        if not improved:
            break
    trace.wall_time = time.perf_counter() - t0
    return config, trace
