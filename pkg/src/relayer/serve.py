"""Bundle-serving HTTP API used by the browser editor.

Read endpoints expose the manifest and layer rasters; the single write
path is PUT /api/bundle/manifest, validated against the engine's
invariants before anything touches disk.  Raster files are never
rewritten by a manifest edit.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException
from fastapi.responses import FileResponse, HTMLResponse, Response
from fastapi.staticfiles import StaticFiles

from .design_doc import (ALIGNMENTS, BUNDLE_FORMAT_VERSION, composite,
                         load_bundle, png_bytes)


def validate_manifest(manifest: dict, bundle_dir: Path) -> list[dict]:
    violations = []

    def bad(code, detail):
        violations.append({"code": code, "detail": detail})

    if manifest.get("format_version") != BUNDLE_FORMAT_VERSION:
        bad("bundle_bad_version", str(manifest.get("format_version")))
    canvas = manifest.get("canvas", {})
    if not (isinstance(canvas.get("width"), int) and canvas.get("width", 0) >= 1
            and isinstance(canvas.get("height"), int) and canvas.get("height", 0) >= 1):
        bad("bad_canvas", str(canvas))
    layers = manifest.get("layers", [])
    if not layers or layers[0].get("kind") != "background":
        bad("background_not_first", "background must be the first layer")
    seen_text = False
    for i, rec in enumerate(layers):
        kind = rec.get("kind")
        where = f"layer {i}"
        if kind == "background" and i != 0:
            bad("multiple_backgrounds", where)
        if kind in ("background", "object"):
            if seen_text:
                bad("text_below_object", where)
            for key in ("file",) + (("mask",) if kind == "object" else ()):
                name = rec.get(key)
                if not name or not (bundle_dir / name).exists():
                    bad("missing_file", f"{where}: {name}")
        elif kind == "text":
            seen_text = True
            box = rec.get("box", [])
            if len(box) != 4 or not (box[0] < box[2] and box[1] < box[3]):
                bad("box_degenerate", f"{where}: {box}")
            color = rec.get("color", [])
            if len(color) != 4 or any(not isinstance(c, int) or not 0 <= c <= 25
                                      for c in color):
                bad("color_bin_range", f"{where}: {color}")
            if not rec.get("content"):
                bad("content_empty", where)
            if rec.get("alignment") not in ALIGNMENTS:
                bad("bad_alignment", f"{where}: {rec.get('alignment')}")
            if not isinstance(rec.get("lines"), int) or rec.get("lines", 0) < 1:
                bad("lines_invalid", f"{where}: {rec.get('lines')}")
            angle = rec.get("angle")
            if not isinstance(angle, int) or not -180 <= angle <= 180:
                bad("angle_range", f"{where}: {angle}")
        else:
            bad("bundle_bad_layer", f"{where}: {kind}")
    return violations


def build_bundle_app(bundle_dir, static_dir=None) -> FastAPI:
    bundle_dir = Path(bundle_dir)
    app = FastAPI(title="relayer bundle server")

    @app.get("/api/bundle/manifest")
    def get_manifest():
        path = bundle_dir / "manifest.json"
        if not path.exists():
            raise HTTPException(status_code=404, detail="no manifest")
        return json.loads(path.read_text())

    @app.get("/api/bundle/layers/{name}")
    def get_layer(name: str):
        if "/" in name or name.startswith("."):
            raise HTTPException(status_code=400, detail="bad layer name")
        path = bundle_dir / name
        if not path.exists():
            raise HTTPException(status_code=404, detail=f"no layer {name}")
        return FileResponse(path, media_type="image/png")

    @app.put("/api/bundle/manifest")
    def put_manifest(manifest: dict):
        violations = validate_manifest(manifest, bundle_dir)
        if violations:
            raise HTTPException(status_code=422, detail={"violations": violations})
        (bundle_dir / "manifest.json").write_text(
            json.dumps(manifest, indent=2, sort_keys=True))
        return {"status": "ok"}

    @app.post("/api/bundle/composite")
    def post_composite():
        design = load_bundle(bundle_dir)
        return Response(content=png_bytes(composite(design)), media_type="image/png")

    if static_dir is not None and Path(static_dir).exists():
        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="editor")
    else:
        @app.get("/", response_class=HTMLResponse)
        def index():
            return "<html><body><p>relayer bundle server; editor assets not built.</p></body></html>"

    return app
