"""Shared orchestration between the CLI and the HTTP service."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from PIL import Image

from .core import Canvas, CollageConfiguration, DatasetManifest, MAP_KINDS, WeightSet, load_dataset
from .criteria import Scene, evaluate_all
from .importance import MapProviderConfig, dataset_maps
from .learning import (
    CandidateFeatures,
    LearnSpec,
    TrainingDataset,
    build_tally,
    candidate_features,
    f1_score,
    learn_weights,
    split_circular,
)
from .optimizer import SearchSpec, optimize
from .workspace import Workspace, content_id, file_digest

KIND_NAMES = {"saliency": "sal", "quality": "qua", "harmony": "har"}
LONG_NAMES = {v: k for k, v in KIND_NAMES.items()}


def resolve_kind(name: str) -> str:
    key = name.lower()
    if key in KIND_NAMES:
        return KIND_NAMES[key]
    if key in LONG_NAMES:
        return key
    raise ValueError(f"unknown map kind {name!r} (expected saliency, quality or harmony)")


class SceneCache:
    """Scenes keyed by (manifest digest, alpha blend); maps computed once."""

    def __init__(self):
        self._datasets: dict[str, tuple] = {}
        self._scenes: dict[tuple, Scene] = {}

    def dataset(self, manifest_path: str | Path):
        digest = file_digest(manifest_path)
        if digest not in self._datasets:
            manifest = DatasetManifest.load(manifest_path)
            dataset = load_dataset(manifest)
            self._datasets[digest] = (manifest, dataset, None)
        return digest, self._datasets[digest]

    def scene(self, manifest_path: str | Path, alphas, canvas: Canvas) -> tuple[str, Scene]:
        digest, (manifest, dataset, maps) = self.dataset(manifest_path)
        if maps is None:
            maps = dataset_maps(dataset, MapProviderConfig())
            self._datasets[digest] = (manifest, dataset, maps)
        key = (digest, tuple(round(a, 12) for a in alphas), canvas.width, canvas.height)
        if key not in self._scenes:
            self._scenes[key] = Scene(dataset, maps, canvas, tuple(alphas))
        return digest, self._scenes[key]


_CACHE = SceneCache()


def store_maps(ws: Workspace, manifest_path: str | Path) -> dict:
    """Compute (or load) all maps for a manifest and persist them as PNGs."""
    digest, (manifest, dataset, _) = _CACHE.dataset(manifest_path)
    _, scene = _CACHE.scene(manifest_path, (1.0, 0.0, 0.0), Canvas())
    out = {"v": 1, "dataset": dataset.name, "images": []}
    for i in range(dataset.n_images):
        entry = {"image": str(manifest.entries[i].path), "maps": {}}
        for kind in MAP_KINDS:
            art_id = content_id("map", digest, i, kind)
            path = ws.path_for("maps", art_id, ".png")
            if not ws.has(art_id):
                values = scene.maps[i][kind].values
                Image.fromarray(np.clip(values * 255.0, 0, 255).astype(np.uint8)).save(path)
                ws.register("maps", art_id, path, {"dataset": dataset.name, "image": i, "kind": kind})
            entry["maps"][LONG_NAMES[kind]] = art_id
        out["images"].append(entry)
    idx_id = content_id("mapindex", digest)
    ws.write_json("maps", idx_id, out, {"dataset": dataset.name})
    out["index_id"] = idx_id
    return out


def generate_collage(
    ws: Workspace,
    manifest_path: str | Path,
    weights: WeightSet,
    spec: SearchSpec,
    canvas: Canvas,
    weights_tag: str = "",
) -> dict:
    """Run the placement search and persist config, trace and render."""
    digest, scene = _CACHE.scene(manifest_path, weights.alphas, canvas)
    key = content_id(
        "generate",
        digest,
        weights.to_json(),
        {"grid": spec.grid, "iters": spec.max_iters, "seed": spec.seed, "restarts": spec.restarts},
        {"w": canvas.width, "h": canvas.height, "scale": canvas.render_scale},
    )
    config_id = f"cfg-{key}"
    render_id = f"png-{key}"
    trace_id = f"trc-{key}"
    if ws.has(config_id) and ws.has(render_id):
        payload = ws.read_json(config_id)
        return {
            "config_id": config_id,
            "render_id": render_id,
            "trace_id": trace_id,
            "fitness": payload["fitness"],
            "cached": True,
        }
    config, trace = optimize(scene, weights, spec)
    payload = config.to_json()
    payload["fitness"] = trace.best_fitness[-1]
    payload["weights"] = weights.to_json()
    payload["dataset"] = scene.dataset.name
    payload["manifest_digest"] = digest
    ws.write_json("configs", config_id, payload, {"dataset": scene.dataset.name, "tag": weights_tag})
    ws.write_json("traces", trace_id, trace.to_json())
    from .compositing import render

    art = render(config, list(scene.dataset.images))
    rpath = ws.path_for("renders", render_id, ".png")
    Image.fromarray(art.pixels).save(rpath)
    ws.register("renders", render_id, rpath, {"config": config_id})
    return {
        "config_id": config_id,
        "render_id": render_id,
        "trace_id": trace_id,
        "fitness": trace.best_fitness[-1],
        "cached": False,
    }


def load_config(path_or_payload) -> CollageConfiguration:
    if isinstance(path_or_payload, dict):
        return CollageConfiguration.from_json(path_or_payload)
    data = json.loads(Path(path_or_payload).read_text(encoding="utf-8"))
    return CollageConfiguration.from_json(data)


def criteria_report(manifest_path: str | Path, config: CollageConfiguration, alphas) -> dict:
    _, scene = _CACHE.scene(manifest_path, alphas, config.canvas)
    vec = evaluate_all(config, scene)
    return {"v": 1, "criteria": [float(v) for v in vec.values]}


def config_features(
    candidate_id: str, manifest_path: str | Path, config: CollageConfiguration, alphas
) -> CandidateFeatures:
    _, scene = _CACHE.scene(manifest_path, alphas, config.canvas)
    return candidate_features(candidate_id, config, scene)


def learn_from_workspace(
    ws: Workspace, records, candidates_by_dataset: dict, spec: LearnSpec
) -> dict:
    """Tally records per dataset, fit weights, persist the weights artifact.

    candidates_by_dataset: name -> list of (candidate_id, manifest_path, config).
    """
    records, flagged = split_circular(records)
    if not records:
        raise ValueError("no preferences")
    training = []
    for name, candidates in candidates_by_dataset.items():
        ds_records = [r for r in records if r.dataset == name]
        if not ds_records:
            continue
        ids = [cid for cid, _, _ in candidates]
        tally = build_tally(ds_records, ids)
        scores = f1_score(tally)
        feats = tuple(
            config_features(cid, mpath, cfg, (1.0, 0.0, 0.0))
            for cid, mpath, cfg in candidates
        )
        training.append(TrainingDataset(name, feats, scores))
    if not training:
        raise ValueError("no preferences")
    result = learn_weights(training, spec)
    weights_id = f"wts-{content_id('learn', [r.to_json() for r in records], spec.seed)}"
    payload = result.to_json()
    payload["flagged_subjects"] = flagged
    ws.write_json("weights", weights_id, payload)
    return {"weights_id": weights_id, "result": result, "flagged_subjects": flagged}


def load_weights(path_or_payload) -> WeightSet:
    if isinstance(path_or_payload, dict):
        return WeightSet.from_json(path_or_payload)
    return WeightSet.from_json(json.loads(Path(path_or_payload).read_text(encoding="utf-8")))
