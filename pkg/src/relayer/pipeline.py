"""Three-stage orchestration: reference creation, design planning, layer
generation.

Stage 3 works top-down: remove all text under one union mask, then peel
objects from top to bottom with segment + remove, keeping the last
intermediate as the background.  Every step is recorded in an
append-only trace for replay and diagnosis.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from .design_doc import (BoundingBox, Canvas, LayeredDesign, ObjectLayer,
                         PadRecord, crop_from_square, from_pil, pad_to_square,
                         png_bytes, raster_canvas, to_pil)
from .errors import PipelineError, RelayerError
from .experts.gateway import DEFAULT_MAX_NEW_TOKENS
from .plan_codec import (ASSETS_DIR, DesignPlan, box_plan_to_canvas,
                         build_stage2_prompt, parse_plan, text_layer_from_element)
from .questionnaire import QuestionnaireSelector

WORKING_CANVAS = Canvas(512, 512)
REFERENCE_CANVAS = Canvas(1024, 1024)
MASK_DILATION = 4

MODES = ("from_intention", "from_sketch", "from_reference",
         "add_text_to_background", "derender")

_MODE_INPUTS = {
    "from_intention": ("intention",),
    "from_sketch": ("sketch", "intention"),
    "from_reference": ("reference", "intention"),
    "add_text_to_background": ("reference", "intention"),
    "derender": ("reference",),
}


@dataclass
class PipelineRequest:
    mode: str
    intention: str | None = None
    sketch: np.ndarray | None = None
    reference: np.ndarray | None = None
    seed: int = 0

    def validate(self):
        if self.mode not in MODES:
            raise RelayerError(f"unknown pipeline mode {self.mode!r}", code="bad_mode")
        for name in _MODE_INPUTS[self.mode]:
            if getattr(self, name) is None:
                raise RelayerError(f"mode {self.mode} requires {name}",
                                   code="missing_input")


@dataclass
class PipelineTrace:
    stages: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)

    def add(self, stage: str, **data):
        self.stages.append({"stage": stage, **data})

    def time(self, stage: str, seconds: float):
        self.timings[stage] = self.timings.get(stage, 0.0) + seconds

    def find(self, stage: str):
        return [s for s in self.stages if s["stage"] == stage]


def save_trace(trace: PipelineTrace, out_dir) -> None:
    """Persist trace.json plus per-step PNGs for raster artifacts."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    serializable = []
    counter = 0
    for entry in trace.stages:
        rec = {}
        for key, value in entry.items():
            if isinstance(value, np.ndarray):
                if value.ndim == 2:
                    value = np.dstack([value] * 3 + [np.full_like(value, 255)])
                name = f"step_{counter:03d}_{entry['stage']}_{key}.png"
                (out_dir / name).write_bytes(png_bytes(value))
                rec[key] = name
                counter += 1
            elif isinstance(value, list) and value and isinstance(value[0], np.ndarray):
                names = []
                for i, arr in enumerate(value):
                    name = f"step_{counter:03d}_{entry['stage']}_{key}_{i}.png"
                    (out_dir / name).write_bytes(png_bytes(arr))
                    names.append(name)
                    counter += 1
                rec[key] = names
            elif isinstance(value, PadRecord):
                rec[key] = value.__dict__
            else:
                rec[key] = value
        serializable.append(rec)
    payload = {"stages": serializable, "timings": trace.timings}
    (out_dir / "trace.json").write_text(json.dumps(payload, indent=2, default=str))


def _blank_vlm_image() -> np.ndarray:
    img = np.full((336, 336, 4), 255, dtype=np.uint8)
    return img


def _strip_fences(text: str) -> str:
    text = text.strip()
    if text.startswith("```"):
        text = text.split("\n", 1)[1] if "\n" in text else ""
    if text.endswith("```"):
        text = text.rsplit("```", 1)[0]
    return text.strip()


def _stage1_template(name: str) -> str:
    return (ASSETS_DIR / "prompts" / "stage1" / f"{name}.txt").read_text().strip()


def expand_intention(intention: str, gateway, trace: PipelineTrace | None = None) -> str:
    """In-context prompt expansion of a short intention."""
    if not intention:
        raise RelayerError("intention must be nonempty", code="missing_input")
    prompt = _stage1_template("intention_expansion").format(intention=intention)
    completion = _strip_fences(gateway.vlm_complete(_blank_vlm_image(), prompt))
    if trace is not None:
        trace.add("expand_intention", prompt=prompt, expanded=completion)
    return completion


def describe_sketch(sketch: np.ndarray, intention: str, gateway,
                    trace: PipelineTrace | None = None) -> str:
    if sketch is None:
        raise RelayerError("sketch image required", code="missing_input")
    if not intention:
        raise RelayerError("intention must be nonempty", code="missing_input")
    prompt = _stage1_template("sketch_description").format(intention=intention)
    completion = _strip_fences(gateway.vlm_complete(sketch, prompt))
    if trace is not None:
        trace.add("describe_sketch", prompt=prompt, description=completion)
    return completion


def create_reference(prompt: str, gateway,
                     trace: PipelineTrace | None = None) -> np.ndarray:
    """T2I at 1024x1024, downscaled to the 512 working canvas."""
    image = gateway.text_to_image(prompt, REFERENCE_CANVAS)
    ref = from_pil(to_pil(image).resize(WORKING_CANVAS.size, Image.BOX))
    if trace is not None:
        trace.add("create_reference", prompt=prompt, reference=ref)
    return ref


def plan_design(reference: np.ndarray, description: str | None, gateway,
                variant: str, trace: PipelineTrace | None = None) -> DesignPlan:
    """OCR -> combined prompt -> VLM -> parsed/validated plan."""
    canvas = raster_canvas(reference)
    pad_record = None
    if canvas.width != canvas.height:
        reference, pad_record = pad_to_square(reference)
    ocr = None
    if variant != "background":
        ocr = gateway.ocr(reference)
    prompt = build_stage2_prompt(variant, description=description, ocr=ocr)
    raw = gateway.vlm_complete(reference, prompt, DEFAULT_MAX_NEW_TOKENS)
    plan, repairs = parse_plan(raw)
    if trace is not None:
        trace.add("plan_design", variant=variant, prompt=prompt,
                  ocr=[(t, b.as_tuple()) for t, b in ocr.items] if ocr else [],
                  raw_plan=raw, repairs=repairs.repairs, pad_record=pad_record)
    return plan


def dilate_mask(mask: np.ndarray, radius: int) -> np.ndarray:
    """Binary dilation with a square structuring element (separable max)."""
    out = mask.copy()
    for axis in (0, 1):
        acc = out.copy()
        for d in range(1, radius + 1):
            shifted = np.roll(out, d, axis=axis)
            if axis == 0:
                shifted[:d] = 0
            else:
                shifted[:, :d] = 0
            acc = np.maximum(acc, shifted)
            shifted = np.roll(out, -d, axis=axis)
            if axis == 0:
                shifted[-d:] = 0
            else:
                shifted[:, -d:] = 0
            acc = np.maximum(acc, shifted)
        out = acc
    return out


def extract_layers(reference: np.ndarray, plan: DesignPlan, gateway,
                   selector=None, trace: PipelineTrace | None = None) -> LayeredDesign:
    """Stage-3 layer generation: text removal, then top-down object
    peeling, assembling the final layered design."""
    if selector is None:
        selector = QuestionnaireSelector(gateway)
    canvas = raster_canvas(reference)
    texts = [text_layer_from_element(e, canvas) for e in plan.texts]

    try:
        current = reference
        if texts:
            text_mask = np.zeros((canvas.height, canvas.width), dtype=np.uint8)
            for t in texts:
                box = t.box.dilate(MASK_DILATION, canvas)
                text_mask[box.y1:box.y2, box.x1:box.x2] = 255
            batch = gateway.remove(reference, text_mask, 4)
            pick = selector.choose(reference, text_mask, batch)
            current = batch.candidates[pick]
            if trace is not None:
                trace.add("text_removal", mask=text_mask,
                          candidates=batch.candidates, selected=pick)

        plan_objects = plan.objects
        peeled = {}
        for rev_index, element in enumerate(reversed(plan_objects)):
            n = len(plan_objects) - 1 - rev_index  # plan (bottom-to-top) index
            box = box_plan_to_canvas(element.box, canvas)
            mask = gateway.segment(current, box)
            cutout = np.zeros_like(current)
            on = mask != 0
            cutout[..., :3][on] = current[..., :3][on]
            cutout[..., 3] = mask
            peeled[n] = ObjectLayer(image=cutout, mask=mask, box=box, z=n)
            removal_mask = dilate_mask(mask, MASK_DILATION)
            batch = gateway.remove(current, removal_mask, 4)
            pick = selector.choose(current, removal_mask, batch)
            if trace is not None:
                trace.add("object_removal", plan_index=n, box=box.as_tuple(),
                          mask=mask, candidates=batch.candidates, selected=pick)
            current = batch.candidates[pick]

        background = current.copy()
        background[..., 3] = 255
        objects = [peeled[n] for n in sorted(peeled)]
        design = LayeredDesign(canvas=canvas, background=background,
                               objects=objects, texts=texts)
        if trace is not None:
            trace.add("assemble", background=background,
                      object_count=len(objects), text_count=len(texts))
        return design
    except RelayerError as exc:
        raise PipelineError(f"layer extraction aborted: {exc}", trace=trace) from exc


def run(request: PipelineRequest, gateway, selector=None) -> tuple[LayeredDesign, PipelineTrace]:
    """Dispatch a full pipeline run by mode; returns design and trace."""
    request.validate()
    trace = PipelineTrace()
    t0 = time.perf_counter()

    if request.mode == "from_intention":
        description = expand_intention(request.intention, gateway, trace)
        reference = create_reference(description, gateway, trace)
        variant = "genai"
    elif request.mode == "from_sketch":
        description = describe_sketch(request.sketch, request.intention, gateway, trace)
        reference = create_reference(description, gateway, trace)
        variant = "genai"
    elif request.mode == "from_reference":
        description = request.intention
        reference = request.reference
        variant = "genai"
    elif request.mode == "derender":
        description = None
        reference = request.reference
        variant = "original"
    else:  # add_text_to_background
        description = request.intention
        reference = request.reference
        variant = "background"
    trace.time("stage1", time.perf_counter() - t0)

    canvas = raster_canvas(reference)
    pad_record = None
    working = reference
    if canvas.width != canvas.height:
        working, pad_record = pad_to_square(reference)
        trace.add("pad", pad_record=pad_record)

    t1 = time.perf_counter()
    plan = plan_design(working, description, gateway, variant, trace)
    trace.time("stage2", time.perf_counter() - t1)

    t2 = time.perf_counter()
    if request.mode == "add_text_to_background":
        wcanvas = raster_canvas(working)
        texts = [text_layer_from_element(e, wcanvas) for e in plan.texts]
        background = working.copy()
        background[..., 3] = 255
        design = LayeredDesign(canvas=wcanvas, background=background,
                               objects=[], texts=texts)
        trace.add("assemble", background=background, object_count=0,
                  text_count=len(texts))
    else:
        design = extract_layers(working, plan, gateway, selector, trace)
    if pad_record is not None:
        design = crop_from_square(design, pad_record)
    trace.time("stage3", time.perf_counter() - t2)
    return design, trace
