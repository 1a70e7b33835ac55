"""Training-data construction over synthetic layered designs.

Each design yields four samples: the original composite, a copy with
corrupted (nonsensical) text, a text-stripped background, and a removal
questionnaire.  The synthesizer stands in for a real design corpus; its
defaults target roughly 1 object and 3 text regions per design.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import questionnaire as qn
from ._kernels import row_blend_fill
from .design_doc import (BoundingBox, Canvas, LayeredDesign, ObjectLayer,
                         QuantColor, TextLayer, composite, new_raster, png_bytes)
from .errors import RelayerError
from .experts.gateway import OcrResult
from .plan_codec import (DesignPlan, box_plan_to_canvas, build_stage2_prompt,
                         plan_from_design, serialize_plan)

STRENGTH_MIN, STRENGTH_MAX = 0.5, 0.7

_WORDS = (
    "SUMMER SALE GRAND OPENING FRESH LOCAL MARKET STUDIO DESIGN FESTIVAL "
    "MUSIC NIGHT COFFEE HOUSE SPECIAL OFFER TODAY ONLY LIMITED EDITION "
    "CREATIVE WORKSHOP ANNUAL REPORT SPRING GARDEN BOLD IDEAS BRIGHT FUTURE"
).split()

_TITLES = (
    "minimal poster with bold typography",
    "vibrant festival flyer",
    "elegant business announcement",
    "modern product label",
    "playful event invitation",
    "clean corporate banner",
)

_FONTS = ("sans", "sans-bold", "sans-oblique", "serif")
_ALIGNMENTS = ("left", "center", "right")


@dataclass(frozen=True)
class SyntheticDesignSpec:
    seed: int
    canvas: Canvas = Canvas(512, 512)
    background_style: str = "vgrad"
    object_count: int | None = None  # None: sampled, 0..4
    text_count: int | None = None  # None: sampled, 1..5


def design_title(spec: SyntheticDesignSpec) -> str:
    return f"A {_TITLES[spec.seed % len(_TITLES)]}."


def _gradient_background(canvas: Canvas, rng) -> np.ndarray:
    top = rng.integers(30, 226, size=3)
    bottom = rng.integers(30, 226, size=3)
    t = np.linspace(0.0, 1.0, canvas.height)[:, None]
    rows = np.floor(top[None, :] * (1 - t) + bottom[None, :] * t + 0.5)
    bg = new_raster(canvas)
    bg[..., :3] = np.repeat(rows[:, None, :], canvas.width, axis=1).astype(np.uint8)
    return bg


# plan-space layout grid: 2 columns x 4 rows of cells, one element per cell
_GRID_COLS, _GRID_ROWS = 2, 4


def _sample_cell_box(rng, cell: int, min_frac=0.45, max_frac=0.85):
    col, row = cell % _GRID_COLS, cell // _GRID_COLS
    cw, ch = 336 // _GRID_COLS, 336 // _GRID_ROWS
    cx1, cy1 = col * cw, row * ch
    w = int(cw * (min_frac + float(rng.random()) * (max_frac - min_frac)))
    h = int(ch * (min_frac + float(rng.random()) * (max_frac - min_frac)))
    x1 = cx1 + int(rng.integers(2, max(3, cw - w - 1)))
    y1 = cy1 + int(rng.integers(2, max(3, ch - h - 1)))
    return (x1, y1, x1 + w, y1 + h)


def synth_design(spec: SyntheticDesignSpec) -> tuple[LayeredDesign, DesignPlan]:
    """Deterministic synthetic design with an exactly known plan.

    All boxes are generated in plan space and converted to canvas space,
    so quantizing the design back yields the identical plan.
    """
    rng = np.random.default_rng(spec.seed)
    canvas = spec.canvas
    background = _gradient_background(canvas, rng)

    n_obj = spec.object_count
    if n_obj is None:
        n_obj = int(rng.choice(5, p=[0.35, 0.40, 0.15, 0.07, 0.03]))
    n_text = spec.text_count
    if n_text is None:
        n_text = 1 + int(rng.choice(5, p=[0.08, 0.22, 0.35, 0.21, 0.14]))
    # one element per grid cell keeps the layout collision-free
    n_cells = _GRID_COLS * _GRID_ROWS
    if n_obj + n_text > n_cells:
        n_text = max(1, n_cells - n_obj)
        n_obj = min(n_obj, n_cells - n_text)

    cells = rng.permutation(n_cells)[: n_obj + n_text]
    objects = []
    for k in range(n_obj):
        plan_box = _sample_cell_box(rng, int(cells[k]))
        box = box_plan_to_canvas(plan_box, canvas)
        color = tuple(int(c) for c in rng.integers(0, 256, size=3))
        image = np.zeros((canvas.height, canvas.width, 4), dtype=np.uint8)
        mask = np.zeros((canvas.height, canvas.width), dtype=np.uint8)
        image[box.y1:box.y2, box.x1:box.x2, :3] = color
        image[box.y1:box.y2, box.x1:box.x2, 3] = 255
        mask[box.y1:box.y2, box.x1:box.x2] = 255
        objects.append(ObjectLayer(image=image, mask=mask, box=box, z=k))

    texts = []
    for k in range(n_text):
        plan_box = _sample_cell_box(rng, int(cells[n_obj + k]), 0.7, 0.95)
        n_words = int(rng.integers(2, 7))
        words = [str(_WORDS[int(i)]) for i in rng.integers(0, len(_WORDS), n_words)]
        texts.append(TextLayer(
            box=box_plan_to_canvas(plan_box, canvas),
            content=" ".join(words),
            color=QuantColor(int(rng.integers(0, 26)), int(rng.integers(0, 26)),
                             int(rng.integers(0, 26)), 25),
            font=str(_FONTS[int(rng.integers(0, len(_FONTS)))]),
            alignment=str(_ALIGNMENTS[int(rng.integers(0, 3))]),
            line_count=min(int(rng.integers(1, 4)), n_words),
            angle=0,
        ))

    design = LayeredDesign(canvas=canvas, background=background,
                           objects=objects, texts=texts)
    return design, plan_from_design(design)


def ocr_items_for_plan(plan: DesignPlan):
    """Ground-truth OCR items (plan-space boxes) for the mock OCR expert."""
    return tuple((e.content, e.box) for e in plan.texts)


def ocr_result_for_plan(plan: DesignPlan, with_text: bool = True) -> OcrResult:
    return OcrResult(items=tuple(
        (e.content if with_text else None, BoundingBox(*e.box)) for e in plan.texts))


# ---------------------------------------------------------------------------
# reference corruption

class NoiseInpainter:
    """Mock inpainter: scrambles text regions with noise whose amplitude
    grows with the inpainting strength."""

    def __call__(self, image: np.ndarray, mask: np.ndarray, strength: float,
                 rng) -> np.ndarray:
        out = image.copy()
        region = mask != 0
        amp = strength * 160.0
        noise = rng.normal(0.0, amp, size=out[..., :3].shape)
        # vertical roll scrambles glyph strokes into nonsense shapes
        shift = max(1, int(strength * 6))
        rolled = np.roll(out[..., :3].astype(np.float64), shift, axis=0)
        mixed = 0.5 * out[..., :3] + 0.5 * rolled + noise
        out[..., :3] = np.where(region[..., None],
                                np.clip(mixed, 0, 255).astype(np.uint8),
                                out[..., :3])
        return out


def text_union_mask(design: LayeredDesign) -> np.ndarray:
    mask = np.zeros((design.canvas.height, design.canvas.width), dtype=np.uint8)
    for t in design.texts:
        mask[t.box.y1:t.box.y2, t.box.x1:t.box.x2] = 255
    return mask


def corrupt_text(design: LayeredDesign, strength: float, inpainter, rng) -> np.ndarray:
    """Composite, then corrupt pixels inside text boxes only."""
    if not (STRENGTH_MIN <= strength <= STRENGTH_MAX):
        raise RelayerError(
            f"inpainting strength {strength} outside [{STRENGTH_MIN}, {STRENGTH_MAX}]",
            code="strength_range")
    reference = composite(design)
    mask = text_union_mask(design)
    out = inpainter(reference, mask, strength, rng)
    out[mask == 0] = reference[mask == 0]  # off-text pixels are inviolable
    return out


def strip_text(design: LayeredDesign) -> np.ndarray:
    """Composite of background + objects only."""
    return composite(LayeredDesign(canvas=design.canvas, background=design.background,
                                   objects=design.objects, texts=[]))


# ---------------------------------------------------------------------------
# dataset assembly

@dataclass
class DesignRecord:
    design: LayeredDesign
    plan: DesignPlan
    title: str


def make_designs(n: int, seed: int = 0, **spec_kwargs) -> list[DesignRecord]:
    records = []
    for i in range(n):
        spec = SyntheticDesignSpec(seed=seed * 1_000_003 + i, **spec_kwargs)
        design, plan = synth_design(spec)
        records.append(DesignRecord(design=design, plan=plan, title=design_title(spec)))
    return records


SAMPLE_KINDS = ("original", "nonsensical", "background", "questionnaire")


def build_dataset(designs, inpainter, rng, out_dir) -> dict:
    """Emit 4 samples per design; returns the manifest summary.

    Layout: ``manifest.jsonl`` plus an ``images/`` directory of PNGs.
    """
    out_dir = Path(out_dir)
    images_dir = out_dir / "images"
    images_dir.mkdir(parents=True, exist_ok=True)
    manifest_path = out_dir / "manifest.jsonl"
    count = 0

    def write_image(name, image):
        (images_dir / name).write_bytes(png_bytes(image))
        return f"images/{name}"

    with manifest_path.open("w") as fh:
        for i, rec in enumerate(designs):
            plan_text = serialize_plan(rec.plan)
            reference = composite(rec.design)

            samples = []
            samples.append({
                "kind": "original",
                "reference_path": write_image(f"{i:05d}_original.png", reference),
                "prompt": build_stage2_prompt(
                    "original", ocr=ocr_result_for_plan(rec.plan, with_text=True)),
                "target": plan_text,
            })

            strength = STRENGTH_MIN + float(rng.random()) * (STRENGTH_MAX - STRENGTH_MIN)
            corrupted = corrupt_text(rec.design, strength, inpainter, rng)
            samples.append({
                "kind": "nonsensical",
                "reference_path": write_image(f"{i:05d}_nonsensical.png", corrupted),
                "prompt": build_stage2_prompt(
                    "genai", description=rec.title,
                    ocr=ocr_result_for_plan(rec.plan, with_text=False)),
                "target": plan_text,
                "strength": round(strength, 4),
            })

            stripped = strip_text(rec.design)
            samples.append({
                "kind": "background",
                "reference_path": write_image(f"{i:05d}_background.png", stripped),
                "prompt": build_stage2_prompt("background", description=rec.title),
                "target": plan_text,  # full plan: the model must re-add text
            })

            mask = text_union_mask(rec.design)
            if not mask.any():
                mask[:8, :8] = 255
            generated = _removal_candidates(reference, mask, rng)
            q, answer = qn.build_training_questionnaire(
                stripped, generated, seed=int(rng.integers(0, 2 ** 31)),
                original=reference, masked=qn.masked_preview(reference, mask))
            samples.append({
                "kind": "questionnaire",
                "reference_path": write_image(f"{i:05d}_questionnaire.png", q.grid),
                "prompt": qn.selection_prompt(),
                "target": answer,
            })

            for sample in samples:
                fh.write(json.dumps(sample, ensure_ascii=False) + "\n")
                count += 1

    summary = {"designs": len(designs), "samples": count,
               "manifest": str(manifest_path)}
    (out_dir / "summary.json").write_text(json.dumps(summary, indent=2))
    return summary


def _removal_candidates(image, mask, rng, n=3):
    filled = image.copy()
    row_blend_fill(filled, (mask != 0).astype(np.uint8))
    out = []
    for k in range(1, n + 1):
        cand = filled.copy()
        noise = rng.integers(-3 * k, 3 * k + 1, size=cand[..., :3].shape)
        rgb = cand[..., :3].astype(np.int16) + np.where((mask != 0)[..., None], noise, 0)
        cand[..., :3] = np.clip(rgb, 0, 255).astype(np.uint8)
        out.append(cand)
    return out
