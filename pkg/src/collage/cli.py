"""Command-line entry points."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .core import Canvas, DatasetError, WeightSet
from .learning import LearnSpec, read_records
from .optimizer import SearchSpec
from .workspace import Workspace


def _canvas(spec: str, render_scale: int = 4) -> Canvas:
    try:
        w, h = (int(v) for v in spec.lower().split("x"))
    except ValueError:
        raise click.BadParameter("canvas must look like 400x400")
    return Canvas(w, h, render_scale)


@click.group()
@click.option("--workspace", envvar="COLLAGE_WORKSPACE", default=".collage", show_default=True)
@click.pass_context
def main(ctx, workspace):
    """Photo collage generation and preference learning."""
    ctx.obj = Workspace(workspace)


@main.command()
@click.option("--out", required=True, type=click.Path())
@click.option("--seed", default=2024, show_default=True)
@click.option("--images", "n_images", default=14, show_default=True)
@click.option("--name", default="toyset", show_default=True)
@click.pass_obj
def toyset(ws: Workspace, out, seed, n_images, name):
    """Generate a synthetic photo set with a manifest."""
    from .datasets import generate_toy_dataset

    path = generate_toy_dataset(out, seed=seed, n_images=n_images, name=name)
    ws.journal("toyset", {"out": str(out), "seed": seed, "images": n_images})
    click.echo(str(path))


@main.command()
@click.option("--manifest", required=True, type=click.Path(exists=True))
@click.pass_obj
def maps(ws: Workspace, manifest):
    """Compute (or load) the three importance maps per image."""
    from .pipeline import store_maps

    try:
        out = store_maps(ws, manifest)
    except (DatasetError, OSError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    ws.journal("maps", {"manifest": str(manifest)})
    click.echo(json.dumps({"v": 1, "index_id": out["index_id"]}))


@main.command()
@click.option("--manifest", required=True, type=click.Path(exists=True))
@click.option("--weights", "weights_path", type=click.Path(exists=True))
@click.option("--basic", "basic_map", type=str, default=None,
              help="Use unit weights on the three basic criteria with this map.")
@click.option("--seed", default=0, show_default=True)
@click.option("--iters", default=50, show_default=True)
@click.option("--grid", default=50, show_default=True)
@click.option("--restarts", default=1, show_default=True)
@click.option("--canvas", "canvas_spec", default="400x400", show_default=True)
@click.option("--render-scale", default=4, show_default=True)
@click.option("--out", type=click.Path(), help="Also copy config JSON here.")
@click.pass_obj
def generate(ws: Workspace, manifest, weights_path, basic_map, seed, iters, grid,
             restarts, canvas_spec, render_scale, out):
    """Optimize a collage and write config, trace and render artifacts."""
    from .pipeline import generate_collage, load_weights, resolve_kind

    if (weights_path is None) == (basic_map is None):
        click.echo("error: pass exactly one of --weights / --basic", err=True)
        sys.exit(2)
    if basic_map is not None:
        try:
            weights = WeightSet.basic(resolve_kind(basic_map))
        except ValueError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(2)
        tag = f"basic-{basic_map}"
    else:
        weights = load_weights(weights_path)
        tag = "learned"
    spec = SearchSpec(grid=grid, max_iters=iters, seed=seed, restarts=restarts)
    try:
        result = generate_collage(ws, manifest, weights, spec, _canvas(canvas_spec, render_scale), tag)
    except (DatasetError, ValueError, OSError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    ws.journal("generate", {
        "manifest": str(manifest), "weights": str(weights_path or f"basic:{basic_map}"),
        "seed": seed, "iters": iters, "grid": grid, "canvas": canvas_spec,
    })
    if out:
        entry = ws.lookup(result["config_id"])
        Path(out).write_text(entry["abs_path"].read_text(encoding="utf-8"), encoding="utf-8")
    click.echo(json.dumps({k: result[k] for k in ("config_id", "render_id", "trace_id", "fitness", "cached")}))


@main.command()
@click.option("--manifest", required=True, type=click.Path(exists=True))
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--weights", "weights_path", type=click.Path(exists=True),
              help="Weights providing the map blend; defaults to pure saliency.")
@click.pass_obj
def criteria(ws: Workspace, manifest, config_path, weights_path):
    """Print the ten criterion values of a stored configuration."""
    from .pipeline import criteria_report, load_config, load_weights

    alphas = (1.0, 0.0, 0.0)
    if weights_path:
        alphas = load_weights(weights_path).alphas
    report = criteria_report(manifest, load_config(config_path), alphas)
    click.echo(json.dumps(report))


@main.command()
@click.option("--prefs", "prefs_path", required=True, type=click.Path(exists=True))
@click.option("--candidates", "candidates_path", required=True, type=click.Path(exists=True),
              help="JSON: {datasets:[{name, manifest, candidates:[{id, config}]}]}")
@click.option("--out", type=click.Path(), help="Also copy weights JSON here.")
@click.option("--seed", default=0, show_default=True)
@click.option("--eta", default=1.0, show_default=True)
@click.option("--restarts", default=8, show_default=True)
@click.option("--max-evals", default=4000, show_default=True)
@click.pass_obj
def learn(ws: Workspace, prefs_path, candidates_path, out, seed, eta, restarts, max_evals):
    """Fit criterion weights from logged preferences."""
    from .pipeline import learn_from_workspace, load_config

    records = read_records(prefs_path)
    spec_file = json.loads(Path(candidates_path).read_text(encoding="utf-8"))
    candidates = {}
    for ds in spec_file["datasets"]:
        base = Path(candidates_path).parent
        candidates[ds["name"]] = [
            (c["id"], str((base / ds["manifest"]).resolve()), load_config(base / c["config"]))
            for c in ds["candidates"]
        ]
    spec = LearnSpec(eta=eta, seed=seed, restarts=restarts, max_evals=max_evals)
    try:
        result = learn_from_workspace(ws, records, candidates, spec)
    except ValueError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    ws.journal("learn", {"prefs": str(prefs_path), "candidates": str(candidates_path), "seed": seed})
    if out:
        entry = ws.lookup(result["weights_id"])
        Path(out).write_text(entry["abs_path"].read_text(encoding="utf-8"), encoding="utf-8")
    res = result["result"]
    click.echo(json.dumps({
        "weights_id": result["weights_id"],
        "objective": res.objective,
        "tau_sum": res.tau_sum,
        "ratio_penalty": res.ratio_penalty,
        "flagged_subjects": result["flagged_subjects"],
    }))


@main.command()
@click.option("--manifest", required=True, type=click.Path(exists=True))
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path())
@click.option("--render-scale", default=4, show_default=True)
@click.pass_obj
def render(ws: Workspace, manifest, config_path, out, render_scale):
    """Render a stored configuration to a PNG."""
    from PIL import Image

    from .compositing import render as render_config
    from .core import Canvas, DatasetManifest, load_dataset
    from .pipeline import load_config

    config = load_config(config_path)
    config = type(config)(
        Canvas(config.canvas.width, config.canvas.height, render_scale), config.states
    )
    dataset = load_dataset(DatasetManifest.load(manifest))
    art = render_config(config, list(dataset.images))
    Image.fromarray(art.pixels).save(out)
    ws.journal("render", {"manifest": str(manifest), "config": str(config_path), "out": str(out)})
    click.echo(str(out))


@main.command()
@click.option("--port", default=8000, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.pass_obj
def serve(ws: Workspace, port, host):
    """Run the ranking HTTP service."""
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(ws), host=host, port=port)


if __name__ == "__main__":
    main()
