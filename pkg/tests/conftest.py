"""Shared fixtures and toy-scene builders for the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from collage.core import (
    Canvas,
    CollageConfiguration,
    FaceMask,
    ImageState,
    ImportanceMap,
    MAP_KINDS,
    Dataset,
    RasterImage,
)
from collage.criteria import Scene


def solid_image(idx: int, h: int, w: int, color=(128, 128, 128)) -> RasterImage:
    pixels = np.zeros((h, w, 3), dtype=np.uint8)
    pixels[:] = color
    return RasterImage(id=idx, pixels=pixels)


def uniform_maps(shape) -> dict[str, ImportanceMap]:
    return {k: ImportanceMap(np.ones(shape), k) for k in MAP_KINDS}


def random_maps(rng: np.random.Generator, shape) -> dict[str, ImportanceMap]:
    return {k: ImportanceMap(rng.uniform(0.01, 1.0, shape), k) for k in MAP_KINDS}


def make_scene(
    sizes,
    canvas: Canvas,
    colors=None,
    faces=None,
    maps=None,
    alphas=(1.0, 0.0, 0.0),
    rng: np.random.Generator | None = None,
    noisy: bool = False,
) -> Scene:
    """Scene over synthetic images with explicit (cheap) importance maps.

    sizes: list of (h, w); colors: list of RGB or None (gray); faces: list of
    FaceMask-compatible uint8 arrays or None; maps: per-image dicts, defaults
    to uniform (or seeded random when `rng` and `noisy` are given).
    """
    n = len(sizes)
    images = []
    for i, (h, w) in enumerate(sizes):
        if noisy and rng is not None:
            pixels = rng.integers(0, 256, (h, w, 3), dtype=np.uint8)
            images.append(RasterImage(id=i, pixels=np.ascontiguousarray(pixels)))
        else:
            color = colors[i] if colors else (128, 128, 128)
            images.append(solid_image(i, h, w, color))
    face_masks = []
    for i in range(n):
        arr = faces[i] if faces else None
        face_masks.append(FaceMask(np.asarray(arr, dtype=np.uint8)) if arr is not None else None)
    dataset = Dataset(name="toy", images=tuple(images), faces=tuple(face_masks))
    if maps is None:
        if rng is not None:
            maps = [random_maps(rng, s) for s in sizes]
        else:
            maps = [uniform_maps(s) for s in sizes]
    return Scene(dataset, maps, canvas, alphas)


def states_config(canvas: Canvas, specs) -> CollageConfiguration:
    """specs: list of (tx, ty, theta_index, layer)."""
    return CollageConfiguration(canvas, tuple(ImageState(*s) for s in specs))


@pytest.fixture()
def rng():
    return np.random.default_rng(7)


_ACCEPTANCE_RESULTS: list[tuple[str, str]] = []


def pytest_runtest_logreport(report):
    if report.when == "call" and "test_acceptance" in report.nodeid:
        _ACCEPTANCE_RESULTS.append((report.nodeid.split("::")[-1], report.outcome.upper()))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _ACCEPTANCE_RESULTS:
        terminalreporter.write_sep("=", "acceptance criteria")
        for name, outcome in _ACCEPTANCE_RESULTS:
            terminalreporter.write_line(f"{name}: {outcome}")
