"""Layered-design document model.

A design is a canvas, one opaque background raster, a bottom-to-top list
of object layers (RGBA cutout + mask + box), and a bottom-to-top list of
text layers.  Texts always stack above objects.  Rasters are numpy
``(H, W, 4)`` uint8 arrays, alpha 255 = opaque.
"""

from __future__ import annotations

import base64
import hashlib
import io
import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from PIL import Image

from . import _kernels
from .errors import BundleError, PadRecordError, SizeMismatchError

BUNDLE_FORMAT_VERSION = 1
PAD_GRAY = (128, 128, 128, 255)

ALIGNMENTS = ("left", "center", "right")


@dataclass(frozen=True)
class Canvas:
    width: int
    height: int

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError(f"canvas must be at least 1x1, got {self.width}x{self.height}")

    @property
    def size(self):
        return (self.width, self.height)


DEFAULT_CANVAS = Canvas(512, 512)


@dataclass(frozen=True)
class BoundingBox:
    """Integer pixel box; the coordinate space (plan [0,336] or canvas)
    is determined by context."""

    x1: int
    y1: int
    x2: int
    y2: int

    def __post_init__(self):
        if not (0 <= self.x1 < self.x2 and 0 <= self.y1 < self.y2):
            raise ValueError(f"degenerate box {self.as_tuple()}")

    def as_tuple(self):
        return (self.x1, self.y1, self.x2, self.y2)

    @property
    def width(self):
        return self.x2 - self.x1

    @property
    def height(self):
        return self.y2 - self.y1

    @property
    def center(self):
        return ((self.x1 + self.x2) / 2.0, (self.y1 + self.y2) / 2.0)

    def dilate(self, margin: int, canvas: Canvas) -> "BoundingBox":
        return BoundingBox(
            max(0, self.x1 - margin),
            max(0, self.y1 - margin),
            min(canvas.width, self.x2 + margin),
            min(canvas.height, self.y2 + margin),
        )

    def shift(self, dx: int, dy: int) -> "BoundingBox":
        return BoundingBox(self.x1 + dx, self.y1 + dy, self.x2 + dx, self.y2 + dy)

    def clip(self, canvas: Canvas) -> "BoundingBox | None":
        x1, y1 = max(0, self.x1), max(0, self.y1)
        x2 = min(canvas.width, self.x2)
        y2 = min(canvas.height, self.y2)
        if x1 >= x2 or y1 >= y2:
            return None
        return BoundingBox(x1, y1, x2, y2)


@dataclass(frozen=True)
class QuantColor:
    """RGBA color in the 26-bin quantized space, each channel in [0, 25]."""

    r: int
    g: int
    b: int
    a: int = 25

    def __post_init__(self):
        for name in ("r", "g", "b", "a"):
            v = getattr(self, name)
            if not (0 <= v <= 25):
                raise ValueError(f"color bin {name}={v} outside [0, 25]")

    def as_tuple(self):
        return (self.r, self.g, self.b, self.a)


@dataclass
class ObjectLayer:
    image: np.ndarray  # canvas-sized RGBA cutout, transparent off-mask
    mask: np.ndarray  # canvas-sized uint8, 0 or 255
    box: BoundingBox  # canvas space
    z: int = 0


@dataclass
class TextLayer:
    box: BoundingBox  # canvas space
    content: str
    color: QuantColor
    font: str
    alignment: str = "left"
    line_count: int = 1
    angle: int = 0

    def __post_init__(self):
        if not self.content:
            raise ValueError("text content must be nonempty")
        if self.alignment not in ALIGNMENTS:
            raise ValueError(f"unknown alignment {self.alignment!r}")
        if self.line_count < 1:
            raise ValueError("line_count must be >= 1")
        if not (-180 <= self.angle <= 180):
            raise ValueError("angle outside [-180, 180]")


@dataclass
class LayeredDesign:
    canvas: Canvas
    background: np.ndarray
    objects: list[ObjectLayer] = field(default_factory=list)
    texts: list[TextLayer] = field(default_factory=list)


def new_raster(canvas: Canvas, color=(0, 0, 0, 255)) -> np.ndarray:
    img = np.empty((canvas.height, canvas.width, 4), dtype=np.uint8)
    img[:] = color
    return img


def raster_canvas(image: np.ndarray) -> Canvas:
    h, w = image.shape[:2]
    return Canvas(w, h)


def to_pil(image: np.ndarray) -> Image.Image:
    return Image.fromarray(image, "RGBA")


def from_pil(img: Image.Image) -> np.ndarray:
    return np.asarray(img.convert("RGBA"), dtype=np.uint8).copy()


def png_bytes(image: np.ndarray) -> bytes:
    buf = io.BytesIO()
    to_pil(image).save(buf, format="PNG")
    return buf.getvalue()


def png_base64(image: np.ndarray) -> str:
    return base64.b64encode(png_bytes(image)).decode("ascii")


def from_png_bytes(data: bytes) -> np.ndarray:
    return from_pil(Image.open(io.BytesIO(data)))


def image_sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _check_canvas(image: np.ndarray, canvas: Canvas, what: str):
    if image.shape[:2] != (canvas.height, canvas.width):
        raise SizeMismatchError(
            f"{what} is {image.shape[1]}x{image.shape[0]}, canvas is "
            f"{canvas.width}x{canvas.height}"
        )


def composite(design: LayeredDesign) -> np.ndarray:
    """Alpha-over the stack bottom-to-top: background, objects, texts.

    Output is fully opaque and byte-deterministic for equal inputs.
    """
    from .text_render import FontCatalog, layout_lines, rasterize_text

    _check_canvas(design.background, design.canvas, "background")
    out = design.background.copy()
    out[..., 3] = 255
    for i, obj in enumerate(design.objects):
        _check_canvas(obj.image, design.canvas, f"object {i}")
        _kernels.alpha_over(out, np.ascontiguousarray(obj.image))
    if design.texts:
        catalog = FontCatalog.default()
        for text in design.texts:
            layout = layout_lines(text, catalog)
            raster = rasterize_text(text, layout, design.canvas)
            _kernels.alpha_over(out, raster)
    out[..., 3] = 255
    return out


# ---------------------------------------------------------------------------
# bundle persistence

def _text_layer_record(t: TextLayer) -> dict:
    return {
        "kind": "text",
        "box": list(t.box.as_tuple()),
        "content": t.content,
        "color": list(t.color.as_tuple()),
        "font": t.font,
        "alignment": t.alignment,
        "lines": t.line_count,
        "angle": t.angle,
    }


def text_layer_from_record(rec: dict) -> TextLayer:
    return TextLayer(
        box=BoundingBox(*rec["box"]),
        content=rec["content"],
        color=QuantColor(*rec["color"]),
        font=rec["font"],
        alignment=rec["alignment"],
        line_count=rec["lines"],
        angle=rec["angle"],
    )


def save_bundle(design: LayeredDesign, path) -> None:
    """Write the design as a directory bundle: manifest.json + PNG layers."""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    checksums = {}

    def write_png(name, image):
        data = png_bytes(image)
        (path / name).write_bytes(data)
        checksums[name] = image_sha256(data)

    write_png("background.png", design.background)
    layers = [{"kind": "background", "file": "background.png"}]
    for k, obj in enumerate(design.objects):
        img_name = f"object_{k}.png"
        mask_name = f"object_{k}_mask.png"
        write_png(img_name, obj.image)
        mask_rgba = np.dstack([obj.mask] * 3 + [np.full_like(obj.mask, 255)])
        write_png(mask_name, mask_rgba)
        layers.append({
            "kind": "object",
            "file": img_name,
            "mask": mask_name,
            "box": list(obj.box.as_tuple()),
            "z": obj.z,
        })
    for t in design.texts:
        layers.append(_text_layer_record(t))

    manifest = {
        "format_version": BUNDLE_FORMAT_VERSION,
        "canvas": {"width": design.canvas.width, "height": design.canvas.height},
        "layers": layers,
        "checksums": checksums,
    }
    (path / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))


def load_bundle(path) -> LayeredDesign:
    path = Path(path)
    manifest_path = path / "manifest.json"
    if not manifest_path.exists():
        raise BundleError(f"missing manifest.json in {path}", code="bundle_missing_manifest")
    manifest = json.loads(manifest_path.read_text())
    version = manifest.get("format_version")
    if version != BUNDLE_FORMAT_VERSION:
        raise BundleError(f"unknown bundle format version {version!r}",
                          code="bundle_bad_version")
    canvas = Canvas(manifest["canvas"]["width"], manifest["canvas"]["height"])
    checksums = manifest.get("checksums", {})

    def read_png(name):
        file_path = path / name
        if not file_path.exists():
            raise BundleError(f"missing layer file {name}", code="bundle_missing_file")
        data = file_path.read_bytes()
        expected = checksums.get(name)
        if expected is not None and image_sha256(data) != expected:
            raise BundleError(f"checksum mismatch for {name}", code="bundle_checksum")
        return from_png_bytes(data)

    background = None
    objects = []
    texts = []
    for rec in manifest["layers"]:
        kind = rec["kind"]
        if kind == "background":
            background = read_png(rec["file"])
        elif kind == "object":
            mask = read_png(rec["mask"])[..., 0].copy()
            objects.append(ObjectLayer(
                image=read_png(rec["file"]),
                mask=mask,
                box=BoundingBox(*rec["box"]),
                z=rec.get("z", len(objects)),
            ))
        elif kind == "text":
            texts.append(text_layer_from_record(rec))
        else:
            raise BundleError(f"unknown layer kind {kind!r}", code="bundle_bad_layer")
    if background is None:
        raise BundleError("bundle has no background layer", code="bundle_no_background")
    return LayeredDesign(canvas=canvas, background=background, objects=objects, texts=texts)


def designs_equal(a: LayeredDesign, b: LayeredDesign) -> bool:
    """Structural equality: pixel-exact rasters, field-exact text layers."""
    if a.canvas != b.canvas or len(a.objects) != len(b.objects) or len(a.texts) != len(b.texts):
        return False
    if not np.array_equal(a.background, b.background):
        return False
    for oa, ob in zip(a.objects, b.objects):
        if oa.box != ob.box or oa.z != ob.z:
            return False
        if not (np.array_equal(oa.image, ob.image) and np.array_equal(oa.mask, ob.mask)):
            return False
    return a.texts == b.texts


# ---------------------------------------------------------------------------
# square padding (gray borders)

@dataclass(frozen=True)
class PadRecord:
    orig_width: int
    orig_height: int
    offset_x: int
    offset_y: int
    side: int


def pad_to_square(image: np.ndarray) -> tuple[np.ndarray, PadRecord]:
    """Center the image on a gray square of side max(w, h)."""
    h, w = image.shape[:2]
    side = max(w, h)
    off_x = (side - w) // 2
    off_y = (side - h) // 2
    record = PadRecord(w, h, off_x, off_y, side)
    if w == h:
        return image.copy(), record
    out = np.empty((side, side, 4), dtype=np.uint8)
    out[:] = PAD_GRAY
    out[off_y:off_y + h, off_x:off_x + w] = image
    return out, record


def crop_from_square(target, record: PadRecord):
    """Invert pad_to_square on a raster, or clip a padded LayeredDesign
    back to the original rectangle."""
    if isinstance(target, LayeredDesign):
        return _crop_design(target, record)
    h, w = target.shape[:2]
    if h != record.side or w != record.side:
        raise PadRecordError(
            f"record expects a {record.side}x{record.side} square, got {w}x{h}")
    return target[record.offset_y:record.offset_y + record.orig_height,
                  record.offset_x:record.offset_x + record.orig_width].copy()


def _crop_design(design: LayeredDesign, record: PadRecord) -> LayeredDesign:
    if design.canvas.width != record.side or design.canvas.height != record.side:
        raise PadRecordError(
            f"record expects a {record.side}x{record.side} design, got "
            f"{design.canvas.width}x{design.canvas.height}")
    canvas = Canvas(record.orig_width, record.orig_height)
    dx, dy = -record.offset_x, -record.offset_y

    def shifted_clipped(box):
        # shift may push coordinates negative, so clip on raw tuples
        x1 = max(0, box.x1 + dx)
        y1 = max(0, box.y1 + dy)
        x2 = min(canvas.width, box.x2 + dx)
        y2 = min(canvas.height, box.y2 + dy)
        if x1 >= x2 or y1 >= y2:
            return None
        return BoundingBox(x1, y1, x2, y2)

    objects = []
    for obj in design.objects:
        box = shifted_clipped(obj.box)
        if box is None:
            continue
        objects.append(ObjectLayer(
            image=crop_from_square(obj.image, record),
            mask=crop_from_square(
                np.dstack([obj.mask] * 4), record)[..., 0].copy(),
            box=box,
            z=obj.z,
        ))
    texts = []
    for t in design.texts:
        box = shifted_clipped(t.box)
        if box is None:
            continue
        texts.append(replace(t, box=box))
    return LayeredDesign(
        canvas=canvas,
        background=crop_from_square(design.background, record),
        objects=objects,
        texts=texts,
    )


# ---------------------------------------------------------------------------
# HTML preview

def export_preview(design: LayeredDesign, path, catalog=None) -> None:
    """Write a self-contained HTML preview: rasters inline as base64,
    text layers as absolutely positioned selectable text nodes."""
    from .plan_codec import dequantize_color
    from .text_render import FontCatalog, layout_lines

    if catalog is None:
        catalog = FontCatalog.default()
    w, h = design.canvas.width, design.canvas.height
    parts = [
        "<!DOCTYPE html>",
        "<html><head><meta charset='utf-8'><title>design preview</title></head><body>",
        f"<div class='design' style='position:relative;width:{w}px;height:{h}px;"
        "overflow:hidden'>",
        f"<img class='layer-background' style='position:absolute;left:0;top:0' "
        f"src='data:image/png;base64,{png_base64(design.background)}'>",
    ]
    for obj in design.objects:
        parts.append(
            f"<img class='layer-object' style='position:absolute;left:0;top:0' "
            f"src='data:image/png;base64,{png_base64(obj.image)}'>")
    for t in design.texts:
        layout = layout_lines(t, catalog)
        r, g, b = (dequantize_color(c) for c in (t.color.r, t.color.g, t.color.b))
        alpha = dequantize_color(t.color.a) / 255.0
        style = (
            f"position:absolute;left:{t.box.x1}px;top:{t.box.y1}px;"
            f"width:{t.box.width}px;height:{t.box.height}px;"
            f"color:rgba({r},{g},{b},{alpha:.3f});"
            f"font-size:{layout.font_size}px;line-height:{layout.line_height}px;"
            f"text-align:{t.alignment};white-space:pre-line;"
            f"transform:rotate({-t.angle}deg);transform-origin:center"
        )
        content = "\n".join(line.text for line in layout.lines)
        parts.append(f"<div class='layer-text' style='{style}'>{_escape(content)}</div>")
    parts.append("</div></body></html>")
    Path(path).write_text("\n".join(parts))


def _escape(text: str) -> str:
    return (text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;"))
