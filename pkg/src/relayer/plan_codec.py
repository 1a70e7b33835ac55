"""The design-plan language.

A plan is a bottom-to-top list of element records: one background, then
objects, then texts.  Box coordinates live in the [0, 336] plan space;
colors are quantized to 26 bins per channel.  The canonical wire format
is JSON; ``parse_plan`` additionally repairs common model-output quirks
(code fences, single quotes, trailing commas, tuple parentheses).
"""

from __future__ import annotations

import ast
import json
import re
import warnings
from dataclasses import dataclass, field
from pathlib import Path

from .design_doc import (ALIGNMENTS, BoundingBox, Canvas, QuantColor, TextLayer)
from .errors import PlanSyntaxError, PlanValidationError, RelayerError

PLAN_COORD_MAX = 336
COLOR_BIN_MAX = 25
OUTPUT_TOKEN_BUDGET = 1536

ASSETS_DIR = Path(__file__).parent / "assets"


class OverBudgetWarning(UserWarning):
    """Serialized plan likely exceeds the model's output length cap."""


class EmptyOcrWarning(UserWarning):
    pass


def _round_half_up_ratio(a: int, num: int, den: int) -> int:
    # round_half_up(a * num / den) in exact integer arithmetic
    return (2 * a * num + den) // (2 * den)


def quantize_color(c: int) -> int:
    if not (0 <= c <= 255):
        raise RelayerError(f"color value {c} outside [0, 255]", code="color_range")
    return _round_half_up_ratio(c, COLOR_BIN_MAX, 255)


def dequantize_color(q: int) -> int:
    if not (0 <= q <= COLOR_BIN_MAX):
        raise RelayerError(f"color bin {q} outside [0, 25]", code="color_bin_range")
    return _round_half_up_ratio(q, 255, COLOR_BIN_MAX)


def _square_side(canvas: Canvas) -> int:
    if canvas.width != canvas.height:
        raise RelayerError(
            f"canvas {canvas.width}x{canvas.height} is not square; pad first",
            code="canvas_not_square")
    return canvas.width


def coord_plan_to_canvas(v: int, canvas: Canvas) -> int:
    if not (0 <= v <= PLAN_COORD_MAX):
        raise RelayerError(f"plan coordinate {v} outside [0, 336]", code="coord_range")
    side = _square_side(canvas)
    return min(side, max(0, _round_half_up_ratio(v, side, PLAN_COORD_MAX)))


def coord_canvas_to_plan(p: int, canvas: Canvas) -> int:
    side = _square_side(canvas)
    if not (0 <= p <= side):
        raise RelayerError(f"pixel coordinate {p} outside [0, {side}]", code="coord_range")
    return min(PLAN_COORD_MAX, max(0, _round_half_up_ratio(p, PLAN_COORD_MAX, side)))


def box_plan_to_canvas(box, canvas: Canvas) -> BoundingBox:
    x1, y1, x2, y2 = box.as_tuple() if isinstance(box, BoundingBox) else box
    return BoundingBox(
        coord_plan_to_canvas(x1, canvas), coord_plan_to_canvas(y1, canvas),
        coord_plan_to_canvas(x2, canvas), coord_plan_to_canvas(y2, canvas))


def box_canvas_to_plan(box: BoundingBox, canvas: Canvas) -> BoundingBox:
    return BoundingBox(
        coord_canvas_to_plan(box.x1, canvas), coord_canvas_to_plan(box.y1, canvas),
        coord_canvas_to_plan(box.x2, canvas), coord_canvas_to_plan(box.y2, canvas))


# ---------------------------------------------------------------------------
# plan model

KINDS = ("background", "object", "text")
TEXT_FIELDS = ("content", "color", "font", "alignment", "line_count", "angle")


@dataclass(frozen=True)
class PlanElement:
    kind: str
    box: tuple[int, int, int, int]
    content: str | None = None
    color: QuantColor | None = None
    font: str | None = None
    alignment: str | None = None
    line_count: int | None = None
    angle: int | None = None


@dataclass(frozen=True)
class DesignPlan:
    elements: tuple[PlanElement, ...]

    @property
    def background(self) -> PlanElement:
        return self.elements[0]

    @property
    def objects(self) -> list[PlanElement]:
        return [e for e in self.elements if e.kind == "object"]

    @property
    def texts(self) -> list[PlanElement]:
        return [e for e in self.elements if e.kind == "text"]


@dataclass(frozen=True)
class Violation:
    code: str
    detail: str


@dataclass
class RepairReport:
    repairs: list[str] = field(default_factory=list)


def validate_elements(elements) -> list[Violation]:
    violations = []
    if not elements:
        return [Violation("plan_empty", "plan has no elements")]
    if elements[0].kind != "background":
        violations.append(Violation("background_not_first",
                                    f"first element kind is {elements[0].kind!r}"))
    n_bg = sum(1 for e in elements if e.kind == "background")
    if n_bg == 0:
        violations.append(Violation("no_background", "plan has no background"))
    elif n_bg > 1:
        violations.append(Violation("multiple_backgrounds", f"{n_bg} backgrounds"))
    seen_text = False
    for i, e in enumerate(elements):
        where = f"element {i}"
        if e.kind not in KINDS:
            violations.append(Violation("unknown_kind", f"{where}: {e.kind!r}"))
            continue
        if e.kind == "text":
            seen_text = True
        elif e.kind == "object" and seen_text:
            violations.append(Violation("text_before_object",
                                        f"{where}: object after a text element"))
        x1, y1, x2, y2 = e.box
        if not all(0 <= v <= PLAN_COORD_MAX for v in e.box):
            violations.append(Violation("box_out_of_range", f"{where}: {e.box}"))
        elif not (x1 < x2 and y1 < y2):
            violations.append(Violation("box_degenerate", f"{where}: {e.box}"))
        if e.kind == "text":
            if not e.content:
                violations.append(Violation("content_empty", where))
            if e.color is None or e.font is None or e.alignment is None \
                    or e.line_count is None or e.angle is None:
                violations.append(Violation("missing_text_fields", where))
                continue
            if e.alignment not in ALIGNMENTS:
                violations.append(Violation("bad_alignment", f"{where}: {e.alignment!r}"))
            if e.line_count < 1:
                violations.append(Violation("lines_invalid", f"{where}: {e.line_count}"))
            if not (-180 <= e.angle <= 180):
                violations.append(Violation("angle_range", f"{where}: {e.angle}"))
        else:
            if any(getattr(e, f) is not None for f in TEXT_FIELDS):
                violations.append(Violation("unexpected_text_fields", where))
    return violations


def _element_to_record(e: PlanElement) -> dict:
    rec = {"type": e.kind, "box": list(e.box)}
    if e.kind == "text":
        rec.update({
            "content": e.content,
            "color": list(e.color.as_tuple()),
            "font": e.font,
            "alignment": e.alignment,
            "lines": e.line_count,
            "angle": e.angle,
        })
    return rec


def _element_from_record(rec, index: int) -> PlanElement:
    if not isinstance(rec, dict):
        raise PlanSyntaxError(f"element {index} is not an object")
    kind = rec.get("type")
    box = rec.get("box")
    if box is None or len(box) != 4:
        raise PlanSyntaxError(f"element {index} has no 4-coordinate box")
    box = tuple(int(v) for v in box)
    if kind != "text":
        return PlanElement(kind=str(kind), box=box)
    color = rec.get("color")
    try:
        qcolor = QuantColor(*[int(c) for c in color]) if color is not None else None
    except (ValueError, TypeError) as exc:
        raise PlanValidationError([Violation("color_bin_range",
                                             f"element {index}: {color}")]) from exc
    return PlanElement(
        kind="text",
        box=box,
        content=rec.get("content"),
        color=qcolor,
        font=rec.get("font"),
        alignment=rec.get("alignment"),
        line_count=int(rec["lines"]) if "lines" in rec else None,
        angle=int(rec["angle"]) if "angle" in rec else None,
    )


_FENCE_RE = re.compile(r"^```[a-zA-Z0-9_-]*\s*\n?|\n?```\s*$")
_TRAILING_COMMA_RE = re.compile(r",(\s*[\]}])")
_SINGLE_QUOTE_RE = re.compile(r"'(?:[^'\\]|\\.)*'")
_TUPLE_RE = re.compile(r"[\[,:]\s*\(")


def parse_plan(text: str) -> tuple[DesignPlan, RepairReport]:
    """Parse canonical plan JSON, repairing model-output quirks.

    Raises PlanSyntaxError for unrecoverable syntax and
    PlanValidationError with itemized violations for invalid plans.
    """
    report = RepairReport()
    stripped = text.strip()
    if stripped.startswith("```") or stripped.endswith("```"):
        stripped = _FENCE_RE.sub("", stripped).strip()
        report.repairs.append("code_fence")
    data = None
    try:
        data = json.loads(stripped)
    except json.JSONDecodeError:
        fixed, n = _TRAILING_COMMA_RE.subn(r"\1", stripped)
        if n:
            report.repairs.append("trailing_comma")
        try:
            data = json.loads(fixed)
        except json.JSONDecodeError:
            if _SINGLE_QUOTE_RE.search(fixed):
                report.repairs.append("single_quotes")
            if _TUPLE_RE.search(fixed):
                report.repairs.append("tuple_parens")
            try:
                data = _tuples_to_lists(ast.literal_eval(stripped))
            except (ValueError, SyntaxError) as exc:
                raise PlanSyntaxError(f"unrecoverable plan syntax: {exc}",
                                      raw_text=text) from exc
    if not isinstance(data, list):
        raise PlanSyntaxError("plan must be a list of element objects", raw_text=text)
    elements = [_element_from_record(rec, i) for i, rec in enumerate(data)]
    violations = validate_elements(elements)
    if violations:
        raise PlanValidationError(violations)
    return DesignPlan(elements=tuple(elements)), report


def _tuples_to_lists(obj):
    if isinstance(obj, (list, tuple)):
        return [_tuples_to_lists(v) for v in obj]
    if isinstance(obj, dict):
        return {k: _tuples_to_lists(v) for k, v in obj.items()}
    return obj


def serialize_plan(plan: DesignPlan) -> str:
    """Canonical, key-sorted, whitespace-stable JSON; parse_plan inverse."""
    text = json.dumps([_element_to_record(e) for e in plan.elements],
                      sort_keys=True, separators=(", ", ": "), ensure_ascii=False)
    if len(text) / 4 > OUTPUT_TOKEN_BUDGET:
        warnings.warn(
            f"plan serialization (~{len(text) // 4} tokens) exceeds the "
            f"{OUTPUT_TOKEN_BUDGET}-token output budget", OverBudgetWarning)
    return text


# ---------------------------------------------------------------------------
# plan <-> design helpers

def text_layer_from_element(e: PlanElement, canvas: Canvas) -> TextLayer:
    words = e.content.split()
    line_count = max(1, min(e.line_count, len(words)))
    return TextLayer(
        box=box_plan_to_canvas(e.box, canvas),
        content=e.content,
        color=e.color,
        font=e.font,
        alignment=e.alignment,
        line_count=line_count,
        angle=e.angle,
    )


def _padded_box_to_plan(box: BoundingBox, canvas: Canvas) -> tuple:
    """Canvas box -> plan space; non-square canvases map through the
    centered gray-pad square."""
    if canvas.width == canvas.height:
        return box_canvas_to_plan(box, canvas).as_tuple()
    side = max(canvas.width, canvas.height)
    off_x = (side - canvas.width) // 2
    off_y = (side - canvas.height) // 2

    def conv(v):
        return min(PLAN_COORD_MAX, max(0, _round_half_up_ratio(v, PLAN_COORD_MAX, side)))

    return (conv(box.x1 + off_x), conv(box.y1 + off_y),
            conv(box.x2 + off_x), conv(box.y2 + off_y))


def plan_from_design(design) -> DesignPlan:
    """Quantize a layered design's geometry into its plan."""
    canvas = design.canvas
    bg_box = (0, 0, PLAN_COORD_MAX, PLAN_COORD_MAX)
    if canvas.width != canvas.height:
        bg_box = _padded_box_to_plan(
            BoundingBox(0, 0, canvas.width, canvas.height), canvas)
    elements = [PlanElement(kind="background", box=bg_box)]
    for obj in design.objects:
        elements.append(PlanElement(
            kind="object", box=_padded_box_to_plan(obj.box, canvas)))
    for t in design.texts:
        elements.append(PlanElement(
            kind="text",
            box=_padded_box_to_plan(t.box, canvas),
            content=t.content,
            color=t.color,
            font=t.font,
            alignment=t.alignment,
            line_count=t.line_count,
            angle=t.angle,
        ))
    return DesignPlan(elements=tuple(elements))


# ---------------------------------------------------------------------------
# stage-2 combined prompt

STAGE2_VARIANTS = ("genai", "original", "background")


def _load_template(name: str) -> str:
    return (ASSETS_DIR / "prompts" / "stage2" / f"{name}.txt").read_text()


def format_ocr_genai(ocr) -> str:
    # boxes only; model-generated text carries no usable content
    parts = [f"[({b.x1}, {b.y1}, {b.x2}, {b.y2})]" for _, b in ocr.items]
    return "[" + ", ".join(parts) + "]"


def format_ocr_original(ocr) -> str:
    parts = [f"['{t or ''}', ({b.x1}, {b.y1}, {b.x2}, {b.y2})]" for t, b in ocr.items]
    return "[" + ", ".join(parts) + "]"


def build_stage2_prompt(variant: str, description: str | None = None,
                        ocr=None) -> str:
    if variant not in STAGE2_VARIANTS:
        raise RelayerError(f"unknown stage-2 variant {variant!r}", code="bad_variant")
    if variant == "genai":
        if description is None or ocr is None:
            raise RelayerError("genai variant needs description and ocr",
                               code="prompt_missing_input")
        return _load_template("genai").format(
            description=description, ocr=format_ocr_genai(ocr))
    if variant == "original":
        if ocr is None:
            raise RelayerError("original variant needs ocr", code="prompt_missing_input")
        if not ocr.items:
            warnings.warn("original-variant prompt with empty OCR", EmptyOcrWarning)
        return _load_template("original").format(ocr=format_ocr_original(ocr))
    if description is None:
        raise RelayerError("background variant needs description",
                           code="prompt_missing_input")
    if ocr is not None and getattr(ocr, "items", None):
        raise RelayerError("background variant takes no OCR input",
                           code="prompt_unexpected_input")
    return _load_template("background").format(description=description)
