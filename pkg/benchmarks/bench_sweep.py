"""Benchmark: accelerated sweep kernel vs the pure-numpy fallback.

Two comparisons:
  1. in-process: time SweepEngine's kernel path against its reference path
     on identical candidate sweeps (same scene, same states);
  2. end-to-end: run the same small optimization in two subprocesses, one
     with COLLAGE_NO_NUMBA=1, and compare wall time and final fitness.

Run with:  python3 benchmarks/bench_sweep.py
"""

import os
import subprocess
import sys
import time

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from collage._accel import NUMBA_ENABLED  # noqa: E402
from collage._sweep import SweepEngine  # noqa: E402
from collage.core import (  # noqa: E402
    Canvas,
    CollageConfiguration,
    Dataset,
    ImageState,
    ImportanceMap,
    RasterImage,
    WeightSet,
)
from collage.criteria import Scene  # noqa: E402


def build_scene(n_images=6, canvas_side=300, seed=0):
    rng = np.random.default_rng(seed)
    images, faces, maps = [], [], []
    for i in range(n_images):
        h, w = int(rng.integers(60, 120)), int(rng.integers(60, 120))
        images.append(RasterImage(i, rng.integers(0, 256, (h, w, 3), dtype=np.uint8)))
        faces.append(None)
        maps.append(
            {k: ImportanceMap(rng.uniform(0.05, 1.0, (h, w)), k) for k in ("sal", "qua", "har")}
        )
    dataset = Dataset(name="bench", images=tuple(images), faces=tuple(faces))
    return Scene(dataset, maps, Canvas(canvas_side, canvas_side), (1.0, 0.0, 0.0))


def random_config(scene, seed):
    rng = np.random.default_rng(seed)
    side = scene.canvas.width
    states = tuple(
        ImageState(
            int(rng.integers(-100, side)), int(rng.integers(-100, side)),
            int(rng.integers(13)), i,
        )
        for i in range(scene.n_images)
    )
    return CollageConfiguration(scene.canvas, states)


def bench_in_process(repeats=3):
    scene = build_scene()
    weights = WeightSet.basic("sal")
    positions = tuple(
        (x, y) for y in range(-100, scene.canvas.height + 1, 50)
        for x in range(-100, scene.canvas.width + 1, 50)
    )
    engine = SweepEngine(scene, weights, positions, tuple(range(13)))
    config = random_config(scene, 1)

    # warm up compilation and caches
    engine._best_candidate_kernel(config, 0)
    engine._best_candidate_reference(config, 0)

    def sweep(fn):
        t0 = time.perf_counter()
        out = [fn(config, i) for i in range(scene.n_images)]
        return time.perf_counter() - t0, out

    t_kernel = min(sweep(engine._best_candidate_kernel)[0] for _ in range(repeats))
    t_ref = min(sweep(engine._best_candidate_reference)[0] for _ in range(repeats))
    _, out_k = sweep(engine._best_candidate_kernel)
    _, out_r = sweep(engine._best_candidate_reference)
    worst = max(abs(a[0] - b[0]) for a, b in zip(out_k, out_r))

    print(f"in-process single full sweep ({scene.n_images} images, "
          f"{len(positions)} positions x 13 angles):")
    print(f"  kernel    : {t_kernel * 1000:8.1f} ms")
    print(f"  reference : {t_ref * 1000:8.1f} ms")
    print(f"  speedup   : {t_ref / t_kernel:8.1f}x")
    print(f"  max |fitness delta| across images: {worst:.3e}")


END_TO_END = r"""
import time
from bench_sweep import build_scene
from collage.core import WeightSet
from collage.optimizer import SearchSpec, optimize

scene = build_scene()
t0 = time.perf_counter()
cfg, trace = optimize(scene, WeightSet.basic("sal"), SearchSpec(grid=50, max_iters=5, seed=7))
print(f"{time.perf_counter() - t0:.3f} {trace.best_fitness[-1]!r}")
"""


def bench_end_to_end():
    here = os.path.abspath(__file__)
    script = END_TO_END
    print("\nend-to-end optimize (6 images, 300x300, 5 sweeps):")
    results = {}
    for label, flag in (("kernel", "0"), ("fallback", "1")):
        env = dict(os.environ, COLLAGE_NO_NUMBA=flag, PYTHONPATH=os.path.dirname(here))
        out = subprocess.run(
            [sys.executable, "-c", script], env=env, capture_output=True, text=True, check=True
        )
        wall, fit = out.stdout.split()
        results[label] = (float(wall), float(fit))
        print(f"  {label:9s}: {float(wall):7.2f} s  final fitness {float(fit):.12f}")
    speedup = results["fallback"][0] / results["kernel"][0]
    delta = abs(results["fallback"][1] - results["kernel"][1])
    print(f"  speedup   : {speedup:7.2f}x   |fitness delta| = {delta:.3e}")


if __name__ == "__main__":
    print(f"numba acceleration enabled in this process: {NUMBA_ENABLED}")
    bench_in_process()
    bench_end_to_end()
