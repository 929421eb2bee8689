"""HTTP service backing the interactive ranking loop."""

from __future__ import annotations

import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, HTTPException
from fastapi.responses import FileResponse
from pydantic import BaseModel

from .core import Canvas, DatasetManifest, WeightSet
from .learning import LearnSpec, PreferenceRecord, _has_cycle, write_records
from .optimizer import SearchSpec
from .pipeline import (
    generate_collage,
    learn_from_workspace,
    load_config,
    resolve_kind,
)
from .workspace import Workspace, content_id

_BASIC_CYCLE = ("saliency", "harmony", "quality")


@dataclass
class Round:
    id: str
    dataset: str
    manifest_path: str
    n_candidates: int
    weights_id: str | None
    status: str = "pending"  # pending | open | closed | failed
    candidates: list = field(default_factory=list)
    records: list = field(default_factory=list)
    error: str | None = None
    created: float = field(default_factory=time.time)


@dataclass
class Job:
    id: str
    status: str = "pending"
    result: dict | None = None
    error: str | None = None


class RoundRequest(BaseModel):
    dataset: str
    n_candidates: int = 3
    weights_id: str | None = None
    seed: int = 0
    grid: int = 50
    iters: int = 50
    restarts: int = 1
    canvas_w: int = 400
    canvas_h: int = 400
    render_scale: int = 4


class PreferenceBody(BaseModel):
    subject: str
    ranking: list[str] | None = None
    pair: list[str] | None = None


class LearnRequest(BaseModel):
    rounds: list[str]
    seed: int = 0
    eta: float = 1.0
    restarts: int = 8
    max_evals: int = 4000


class GenerateRequest(BaseModel):
    dataset: str
    weights_id: str | None = None
    seed: int = 0
    grid: int = 50
    iters: int = 50
    restarts: int = 1
    canvas_w: int = 400
    canvas_h: int = 400
    render_scale: int = 4


def _discover_datasets(ws: Workspace) -> dict[str, Path]:
    found = {}
    for manifest in sorted((ws.root / "datasets").glob("*/manifest.json")):
        try:
            m = DatasetManifest.load(manifest)
        except Exception:
            continue
        found[m.name] = manifest
    return found


def create_app(ws: Workspace) -> FastAPI:
    app = FastAPI(title="collage ranking service")
    state_lock = threading.Lock()
    rounds: dict[str, Round] = {}
    jobs: dict[str, Job] = {}
    counter = {"round": 0, "job": 0}
    executor = ThreadPoolExecutor(max_workers=1)

    def datasets() -> dict[str, Path]:
        return _discover_datasets(ws)

    def resolve_weights(weights_id: str | None, k: int) -> tuple[WeightSet, str]:
        if weights_id is None:
            kind = _BASIC_CYCLE[k % 3]
            return WeightSet.basic(resolve_kind(kind)), f"basic-{kind}"
        entry = ws.lookup(weights_id)
        if entry is None:
            raise HTTPException(404, detail=f"unknown weights {weights_id}")
        return WeightSet.from_json(ws.read_json(weights_id)), weights_id

    def run_generation(req, manifest_path: str, k: int) -> dict:
        weights, tag = resolve_weights(req.weights_id, k)
        spec = SearchSpec(
            grid=req.grid, max_iters=req.iters, seed=req.seed + k, restarts=req.restarts
        )
        canvas = Canvas(req.canvas_w, req.canvas_h, req.render_scale)
        result = generate_collage(ws, manifest_path, weights, spec, canvas, tag)
        result["weights_tag"] = tag
        return result

    # ------------------------------------------------------------- datasets

    @app.get("/api/datasets")
    def list_datasets():
        out = []
        for name, manifest in datasets().items():
            m = DatasetManifest.load(manifest)
            out.append({"name": name, "images": len(m.entries)})
        return {"v": 1, "datasets": out}

    # --------------------------------------------------------------- rounds

    def _fill_round(rid: str, req: RoundRequest, manifest_path: str):
        try:
            cands = []
            for k in range(req.n_candidates):
                result = run_generation(req, manifest_path, k)
                cands.append(
                    {
                        "id": f"c{k}-{result['config_id'][4:]}",
                        "config_id": result["config_id"],
                        "render_id": result["render_id"],
                        "render_url": f"/api/renders/{result['render_id']}.png",
                        "fitness": result["fitness"],
                        "weights_tag": result["weights_tag"],
                    }
                )
            with state_lock:
                rounds[rid].candidates = cands
                rounds[rid].status = "open"
        except Exception as exc:  # surfaced via round status
            with state_lock:
                rounds[rid].status = "failed"
                rounds[rid].error = str(exc)

    @app.post("/api/rounds", status_code=201)
    def open_round(req: RoundRequest):
        manifest_path = datasets().get(req.dataset)
        if manifest_path is None:
            raise HTTPException(404, detail=f"unknown dataset {req.dataset}")
        if req.n_candidates < 2:
            raise HTTPException(422, detail="a round needs at least 2 candidates")
        if req.weights_id is not None and ws.lookup(req.weights_id) is None:
            raise HTTPException(404, detail=f"unknown weights {req.weights_id}")
        with state_lock:
            counter["round"] += 1
            rid = f"rnd-{content_id('round', req.dataset, req.weights_id, req.seed, counter['round'])}"
            rounds[rid] = Round(
                id=rid,
                dataset=req.dataset,
                manifest_path=str(manifest_path),
                n_candidates=req.n_candidates,
                weights_id=req.weights_id,
            )
        executor.submit(_fill_round, rid, req, str(manifest_path))
        return {"v": 1, "id": rid, "status": "pending"}

    def _round_payload(rnd: Round) -> dict:
        return {
            "v": 1,
            "id": rnd.id,
            "dataset": rnd.dataset,
            "status": rnd.status,
            "weights_id": rnd.weights_id,
            "candidates": rnd.candidates,
            "n_preferences": len(rnd.records),
            "error": rnd.error,
        }

    @app.get("/api/rounds/{rid}")
    def get_round(rid: str):
        rnd = rounds.get(rid)
        if rnd is None:
            raise HTTPException(404, detail="unknown round")
        return _round_payload(rnd)

    # ---------------------------------------------------------- preferences

    @app.post("/api/rounds/{rid}/preferences", status_code=201)
    def submit_preference(rid: str, body: PreferenceBody):
        rnd = rounds.get(rid)
        if rnd is None:
            raise HTTPException(404, detail="unknown round")
        if rnd.status != "open":
            raise HTTPException(409, detail=f"round is {rnd.status}, not open")
        ids = tuple(c["id"] for c in rnd.candidates)
        if (body.ranking is None) == (body.pair is None):
            raise HTTPException(422, detail="submit exactly one of ranking / pair")
        if body.ranking is not None:
            if sorted(body.ranking) != sorted(ids):
                raise HTTPException(422, detail="ranking must be a total order over the candidates")
            record = PreferenceRecord(
                dataset=rnd.dataset, subject=body.subject, candidate_ids=ids,
                ranking=tuple(body.ranking),
            )
        else:
            if len(body.pair) != 2 or len(set(body.pair)) != 2 or set(body.pair) - set(ids):
                raise HTTPException(422, detail="pair must name two distinct candidates")
            edges = {
                r.pair for r in rnd.records if r.pair is not None and r.subject == body.subject
            }
            edges.add((body.pair[0], body.pair[1]))
            if _has_cycle(edges):
                raise HTTPException(422, detail={"reason": "circular", "subject": body.subject})
            record = PreferenceRecord(
                dataset=rnd.dataset, subject=body.subject, candidate_ids=ids,
                pair=(body.pair[0], body.pair[1]),
            )
        with state_lock:
            rnd.records.append(record)
        write_records(ws.prefs_path, [record], append=True)
        return {"v": 1, "round": rid, "accepted": True}

    # ---------------------------------------------------------------- learn

    @app.post("/api/learn")
    def learn(req: LearnRequest):
        selected = []
        for rid in req.rounds:
            rnd = rounds.get(rid)
            if rnd is None:
                raise HTTPException(404, detail=f"unknown round {rid}")
            selected.append(rnd)
        records = [r for rnd in selected for r in rnd.records]
        if not records:
            raise HTTPException(422, detail="no preferences recorded in those rounds")
        candidates: dict[str, list] = {}
        for rnd in selected:
            lst = candidates.setdefault(rnd.dataset, [])
            for c in rnd.candidates:
                cfg = load_config(ws.read_json(c["config_id"]))
                lst.append((c["id"], rnd.manifest_path, cfg))
        spec = LearnSpec(eta=req.eta, seed=req.seed, restarts=req.restarts, max_evals=req.max_evals)
        try:
            out = learn_from_workspace(ws, records, candidates, spec)
        except ValueError as exc:
            raise HTTPException(422, detail=str(exc))
        with state_lock:
            for rnd in selected:
                rnd.status = "closed"
        res = out["result"]
        return {
            "v": 1,
            "weights_id": out["weights_id"],
            "objective": res.objective,
            "tau_sum": res.tau_sum,
            "ratio_penalty": res.ratio_penalty,
            "flagged_subjects": out["flagged_subjects"],
            "closed_rounds": [rnd.id for rnd in selected],
        }

    # ------------------------------------------------------------- generate

    def _run_job(jid: str, req: GenerateRequest, manifest_path: str):
        try:
            result = run_generation(req, manifest_path, 0)
            with state_lock:
                jobs[jid].status = "done"
                jobs[jid].result = {
                    "config_id": result["config_id"],
                    "render_id": result["render_id"],
                    "render_url": f"/api/renders/{result['render_id']}.png",
                    "fitness": result["fitness"],
                }
        except Exception as exc:
            with state_lock:
                jobs[jid].status = "failed"
                jobs[jid].error = str(exc)

    @app.post("/api/generate", status_code=202)
    def generate(req: GenerateRequest):
        manifest_path = datasets().get(req.dataset)
        if manifest_path is None:
            raise HTTPException(404, detail=f"unknown dataset {req.dataset}")
        if req.weights_id is not None and ws.lookup(req.weights_id) is None:
            raise HTTPException(404, detail=f"unknown weights {req.weights_id}")
        with state_lock:
            counter["job"] += 1
            jid = f"job-{content_id('job', req.dataset, req.weights_id, req.seed, counter['job'])}"
            jobs[jid] = Job(id=jid)
        executor.submit(_run_job, jid, req, str(manifest_path))
        return {"v": 1, "id": jid, "status": "pending"}

    @app.get("/api/jobs/{jid}")
    def get_job(jid: str):
        job = jobs.get(jid)
        if job is None:
            raise HTTPException(404, detail="unknown job")
        return {"v": 1, "id": jid, "status": job.status, "result": job.result, "error": job.error}

    # -------------------------------------------------------------- renders

    @app.get("/api/renders/{rid}.png")
    def get_render(rid: str):
        entry = ws.lookup(rid)
        if entry is None or entry["kind"] != "renders":
            raise HTTPException(404, detail="unknown render")
        return FileResponse(entry["abs_path"], media_type="image/png")

    return app
