"""Command-line surface: generate, unfold, addtext, datagen, eval, serve."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import numpy as np

from . import datagen, metrics, pipeline
from .design_doc import (export_preview, from_png_bytes, save_bundle)
from .errors import RelayerError
from .experts import load_gateway
from .plan_codec import parse_plan, plan_from_design, serialize_plan

EXPERTS_ENV = "RELAYER_EXPERTS"
PORT_ENV = "RELAYER_PORT"


def _fail(code: str, message: str, exit_code: int = 1):
    click.echo(f"error: {code}: {message}", err=True)
    sys.exit(exit_code)


def _load_image(path):
    try:
        return from_png_bytes(Path(path).read_bytes())
    except Exception as exc:
        _fail("image_decode", f"{path}: {exc}")


def _write_outputs(design, trace, out_dir):
    out_dir = Path(out_dir)
    save_bundle(design, out_dir / "bundle")
    pipeline.save_trace(trace, out_dir / "trace")
    export_preview(design, out_dir / "preview.html")
    plan = plan_from_design(design)
    (out_dir / "plan.json").write_text(serialize_plan(plan))
    click.echo(f"canvas {design.canvas.width}x{design.canvas.height}, "
               f"{len(design.objects)} object layer(s), "
               f"{len(design.texts)} text layer(s)")
    click.echo(f"bundle: {out_dir / 'bundle'}")


@click.group()
@click.option("--experts", default="mock", envvar=EXPERTS_ENV, show_default=True,
              help="Path to experts.toml, or 'mock' for the offline suite.")
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--out", default="out", show_default=True,
              type=click.Path(file_okay=False))
@click.pass_context
def main(ctx, experts, seed, out):
    """Convert raster graphic designs into editable layered designs."""
    ctx.ensure_object(dict)
    ctx.obj.update(experts=experts, seed=seed, out=out)


def _gateway(ctx):
    try:
        return load_gateway(ctx.obj["experts"], seed=ctx.obj["seed"])
    except (OSError, RelayerError) as exc:
        _fail("experts_config", str(exc), exit_code=2)


@main.command()
@click.argument("intention", required=False)
@click.option("--sketch", type=click.Path(exists=False), default=None,
              help="Sketch image; 'xxx' marks text placeholders.")
@click.pass_context
def generate(ctx, intention, sketch):
    """Generate a layered design from a short INTENTION or a --sketch."""
    if intention is None and sketch is None:
        _fail("usage", "provide an intention or --sketch", exit_code=2)
    gateway = _gateway(ctx)
    if sketch is not None:
        request = pipeline.PipelineRequest(
            mode="from_sketch", sketch=_load_image(sketch),
            intention=intention or "a graphic design", seed=ctx.obj["seed"])
    else:
        request = pipeline.PipelineRequest(
            mode="from_intention", intention=intention, seed=ctx.obj["seed"])
    try:
        design, trace = pipeline.run(request, gateway)
    except RelayerError as exc:
        _fail(exc.code, str(exc))
    _write_outputs(design, trace, ctx.obj["out"])


@main.command()
@click.argument("reference", type=click.Path(exists=True))
@click.option("--original", is_flag=True,
              help="Treat the input as an original design (de-render mode).")
@click.option("--description", default=None,
              help="Design description guiding text refinement.")
@click.pass_context
def unfold(ctx, reference, original, description):
    """Unfold a rasterized design REFERENCE into layers."""
    gateway = _gateway(ctx)
    image = _load_image(reference)
    if original:
        request = pipeline.PipelineRequest(mode="derender", reference=image,
                                           seed=ctx.obj["seed"])
    else:
        request = pipeline.PipelineRequest(
            mode="from_reference", reference=image,
            intention=description or "a graphic design", seed=ctx.obj["seed"])
    try:
        design, trace = pipeline.run(request, gateway)
    except RelayerError as exc:
        _fail(exc.code, str(exc))
    _write_outputs(design, trace, ctx.obj["out"])


@main.command()
@click.argument("background", type=click.Path(exists=True))
@click.option("--description", required=False, default=None)
@click.pass_context
def addtext(ctx, background, description):
    """Add text layers over an existing BACKGROUND image."""
    if not description:
        _fail("usage", "--description is required", exit_code=2)
    gateway = _gateway(ctx)
    request = pipeline.PipelineRequest(
        mode="add_text_to_background", reference=_load_image(background),
        intention=description, seed=ctx.obj["seed"])
    try:
        design, trace = pipeline.run(request, gateway)
    except RelayerError as exc:
        _fail(exc.code, str(exc))
    _write_outputs(design, trace, ctx.obj["out"])


@main.command("datagen")
@click.option("--designs", "n_designs", type=int, default=None,
              help="Number of synthetic designs to build.")
@click.option("--input", "input_dir", type=click.Path(exists=True), default=None,
              help="Directory of existing design bundles.")
@click.pass_context
def cmd_datagen(ctx, n_designs, input_dir):
    """Build the 4-samples-per-design training dataset."""
    if n_designs is None and input_dir is None:
        _fail("usage", "provide --designs N or --input DIR", exit_code=2)
    seed = ctx.obj["seed"]
    if input_dir is not None:
        from .design_doc import load_bundle

        records = []
        for path in sorted(Path(input_dir).iterdir()):
            if (path / "manifest.json").exists():
                design = load_bundle(path)
                records.append(datagen.DesignRecord(
                    design=design, plan=plan_from_design(design), title=path.name))
        if not records:
            _fail("usage", f"no bundles under {input_dir}", exit_code=2)
    else:
        records = datagen.make_designs(n_designs, seed=seed)
    rng = np.random.default_rng(seed)
    summary = datagen.build_dataset(records, datagen.NoiseInpainter(), rng,
                                    ctx.obj["out"])
    click.echo(f"{summary['designs']} designs -> {summary['samples']} samples")
    click.echo(summary["manifest"])


@main.command("eval")
@click.option("--pred", "pred_dir", type=click.Path(exists=False), required=True)
@click.option("--gt", "gt_dir", type=click.Path(exists=False), required=True)
@click.pass_context
def cmd_eval(ctx, pred_dir, gt_dir):
    """Evaluate predicted plans (and rasters) against ground truth.

    Both directories hold <name>.json plan files; <name>.png raster pairs
    are scored with PSNR when present on both sides.
    """
    pred_dir, gt_dir = Path(pred_dir), Path(gt_dir)
    if not pred_dir.is_dir() or not gt_dir.is_dir():
        _fail("usage", "--pred and --gt must be directories", exit_code=2)
    names = sorted(p.stem for p in gt_dir.glob("*.json"))
    if not names:
        _fail("usage", f"no plan files under {gt_dir}", exit_code=2)
    pairs = []
    mismatched = []
    psnrs = []
    for name in names:
        pred_path = pred_dir / f"{name}.json"
        if not pred_path.exists():
            mismatched.append(name)
            continue
        pred_plan, _ = parse_plan(pred_path.read_text())
        gt_plan, _ = parse_plan((gt_dir / f"{name}.json").read_text())
        pairs.append((pred_plan, gt_plan))
        p_png, g_png = pred_dir / f"{name}.png", gt_dir / f"{name}.png"
        if p_png.exists() and g_png.exists():
            psnrs.append(metrics.psnr(
                from_png_bytes(p_png.read_bytes()), from_png_bytes(g_png.read_bytes())))
    report = metrics.evaluate_plans(pairs)
    if psnrs:
        report.scalars["psnr_mean"] = sum(psnrs) / len(psnrs)
    if mismatched:
        report.scalars["missing_predictions"] = len(mismatched)
        for name in mismatched:
            report.rows.append({"sample": name, "error": "missing_prediction"})
    out_dir = Path(ctx.obj["out"])
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "eval.json").write_text(json.dumps(
        {"scalars": report.scalars, "rows": report.rows}, indent=2))
    _write_csv(report, out_dir / "eval.csv")
    for key, value in sorted(report.scalars.items()):
        click.echo(f"{key}: {value:.4f}" if isinstance(value, float)
                   else f"{key}: {value}")


def _write_csv(report, path):
    import csv

    keys = sorted({k for row in report.rows for k in row})
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=keys)
        writer.writeheader()
        writer.writerows(report.rows)


@main.command()
@click.option("--bundle", "bundle_dir", type=click.Path(exists=True), required=True)
@click.option("--port", default=8400, envvar=PORT_ENV, show_default=True, type=int)
@click.option("--static", "static_dir", type=click.Path(), default=None,
              help="Editor asset directory to serve at /.")
def serve(bundle_dir, port, static_dir):
    """Serve a bundle plus the editor over HTTP."""
    import uvicorn

    from .serve import build_bundle_app

    if static_dir is None:
        candidate = Path(__file__).resolve().parents[2] / "frontend" / "dist"
        static_dir = candidate if candidate.exists() else None
    app = build_bundle_app(bundle_dir, static_dir)
    uvicorn.run(app, host="127.0.0.1", port=port)


if __name__ == "__main__":
    main()
