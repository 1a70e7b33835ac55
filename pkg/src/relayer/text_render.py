"""Deterministic text layout, rasterization, and SVG export.

Layout splits content into exactly ``line_count`` lines (clamped to the
word count), picks the largest integer font size in [4, 200] that fits
the box, and positions lines per the alignment.  Rasterization draws a
glyph coverage mask with Pillow, colors it with the dequantized layer
color, and rotates about the box center.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw, ImageFont

from .design_doc import Canvas, TextLayer
from .errors import FontError

FONT_SIZE_MIN = 4
FONT_SIZE_MAX = 200
_BUNDLED_FONTS = Path(__file__).parent / "assets" / "fonts"


class LayoutWarning(UserWarning):
    pass


@dataclass(frozen=True)
class FontCatalog:
    """Closed map from font identifier to a font file.

    Unknown identifiers fall back to ``fallback`` when set, otherwise
    raise FontError.
    """

    entries: dict
    fallback: Path | None = None

    @property
    def size(self) -> int:
        return len(self.entries)

    def resolve(self, font_id: str) -> Path:
        path = self.entries.get(font_id)
        if path is not None:
            return path
        if self.fallback is not None:
            warnings.warn(f"unknown font id {font_id!r}; using fallback face",
                          LayoutWarning)
            return self.fallback
        raise FontError(f"unknown font id {font_id!r} and no fallback configured")

    @classmethod
    def load(cls, manifest_path, fallback: bool = True) -> "FontCatalog":
        manifest_path = Path(manifest_path)
        mapping = json.loads(manifest_path.read_text())
        entries = {}
        for font_id, rel in mapping.items():
            p = Path(rel)
            entries[font_id] = p if p.is_absolute() else manifest_path.parent / p
        fb = _BUNDLED_FONTS / "DejaVuSans.ttf" if fallback else None
        return cls(entries=entries, fallback=fb)

    @classmethod
    def default(cls) -> "FontCatalog":
        entries = {
            "sans": _BUNDLED_FONTS / "DejaVuSans.ttf",
            "sans-bold": _BUNDLED_FONTS / "DejaVuSans-Bold.ttf",
            "sans-oblique": _BUNDLED_FONTS / "DejaVuSans-Oblique.ttf",
            "serif": _BUNDLED_FONTS / "DejaVuSerif.ttf",
        }
        return cls(entries=entries, fallback=entries["sans"])


@lru_cache(maxsize=256)
def _load_font(path: str, size: int) -> ImageFont.FreeTypeFont:
    return ImageFont.truetype(path, size)


@dataclass(frozen=True)
class Line:
    text: str
    x: float  # left edge of the line at its alignment position
    baseline: float
    width: float  # advance width at the chosen size


@dataclass
class LineLayout:
    lines: list[Line]
    font_size: int
    line_height: float
    ascent: float
    font_path: str
    flags: list[str] = field(default_factory=list)


def _partition_min_max_width(word_widths, space_width, n_lines):
    """Split words into n_lines contiguous runs minimizing the max line
    width.  DP over prefixes; deterministic ties to earlier breaks."""
    n = len(word_widths)
    prefix = [0.0]
    for w in word_widths:
        prefix.append(prefix[-1] + w)

    def run_width(i, j):  # words [i, j)
        return prefix[j] - prefix[i] + space_width * (j - i - 1)

    INF = float("inf")
    best = [[INF] * (n_lines + 1) for _ in range(n + 1)]
    back = [[0] * (n_lines + 1) for _ in range(n + 1)]
    best[0][0] = 0.0
    for j in range(1, n + 1):
        for k in range(1, min(j, n_lines) + 1):
            for i in range(k - 1, j):
                if best[i][k - 1] == INF:
                    continue
                cand = max(best[i][k - 1], run_width(i, j))
                if cand < best[j][k]:
                    best[j][k] = cand
                    back[j][k] = i
    cuts = []
    j, k = n, n_lines
    while k > 0:
        i = back[j][k]
        cuts.append((i, j))
        j, k = i, k - 1
    return list(reversed(cuts))


def layout_lines(spec: TextLayer, catalog: FontCatalog) -> LineLayout:
    if not spec.content.strip():
        raise FontError("empty content", code="content_empty")
    font_path = str(catalog.resolve(spec.font))
    words = spec.content.split()
    flags = []
    n_lines = spec.line_count
    if n_lines > len(words):
        n_lines = len(words)
        flags.append("line_count_clamped")

    ref_font = _load_font(font_path, 100)
    word_widths = [ref_font.getlength(w) for w in words]
    cuts = _partition_min_max_width(word_widths, ref_font.getlength(" "), n_lines)
    line_texts = [" ".join(words[i:j]) for i, j in cuts]

    box = spec.box

    def fits(size: int) -> bool:
        font = _load_font(font_path, size)
        ascent, descent = font.getmetrics()
        if n_lines * (ascent + descent) > box.height:
            return False
        return all(font.getlength(t) <= box.width for t in line_texts)

    lo, hi = FONT_SIZE_MIN, FONT_SIZE_MAX
    if not fits(lo):
        size = lo
        flags.append("no_fit")
    else:
        while lo < hi:  # largest size with fits(size)
            mid = (lo + hi + 1) // 2
            if fits(mid):
                lo = mid
            else:
                hi = mid - 1
        size = lo

    font = _load_font(font_path, size)
    ascent, descent = font.getmetrics()
    line_height = float(ascent + descent)
    block_top = box.y1 + (box.height - n_lines * line_height) / 2.0
    lines = []
    for i, text in enumerate(line_texts):
        width = font.getlength(text)
        if spec.alignment == "left":
            x = float(box.x1)
        elif spec.alignment == "center":
            x = box.x1 + (box.width - width) / 2.0
        else:
            x = box.x2 - width
        baseline = block_top + i * line_height + ascent
        lines.append(Line(text=text, x=x, baseline=baseline, width=width))
    return LineLayout(lines=lines, font_size=size, line_height=line_height,
                      ascent=float(ascent), font_path=font_path, flags=flags)


def rasterize_text(spec: TextLayer, layout: LineLayout, canvas: Canvas) -> np.ndarray:
    """Canvas-sized RGBA raster of the laid-out text, transparent outside
    glyphs, rotated by the layer angle about the box center."""
    from .plan_codec import dequantize_color

    out = np.zeros((canvas.height, canvas.width, 4), dtype=np.uint8)
    r, g, b, a = (dequantize_color(c) for c in spec.color.as_tuple())
    out[..., 0], out[..., 1], out[..., 2] = r, g, b
    if spec.box.clip(canvas) is None:
        warnings.warn("text box fully outside canvas", LayoutWarning)
        return out * np.array([1, 1, 1, 0], dtype=np.uint8)

    mask_img = Image.new("L", (canvas.width, canvas.height), 0)
    draw = ImageDraw.Draw(mask_img)
    font = _load_font(layout.font_path, layout.font_size)
    for line in layout.lines:
        draw.text((line.x, line.baseline - layout.ascent), line.text,
                  fill=255, font=font)
    coverage = np.asarray(mask_img, dtype=np.uint16)
    out[..., 3] = ((coverage * a + 127) // 255).astype(np.uint8)
    if spec.angle:
        img = Image.fromarray(out, "RGBA").rotate(
            spec.angle, resample=Image.BILINEAR, center=spec.box.center)
        out = np.asarray(img, dtype=np.uint8).copy()
    return out


# ---------------------------------------------------------------------------
# SVG export

_ANCHORS = {"left": "start", "center": "middle", "right": "end"}
_ANCHORS_INV = {v: k for k, v in _ANCHORS.items()}


def _hex_color(spec: TextLayer) -> str:
    from .plan_codec import dequantize_color

    r, g, b = (dequantize_color(c) for c in (spec.color.r, spec.color.g, spec.color.b))
    return f"#{r:02x}{g:02x}{b:02x}"


def to_svg(spec: TextLayer, layout: LineLayout) -> str:
    """One <g> with a rotation transform and one <text> per line."""
    from .plan_codec import dequantize_color

    cx, cy = spec.box.center
    opacity = dequantize_color(spec.color.a) / 255.0
    anchor = _ANCHORS[spec.alignment]
    parts = [
        f'<g transform="rotate({-spec.angle} {cx:g} {cy:g})" data-angle="{spec.angle}">'
    ]
    for line in layout.lines:
        if anchor == "start":
            x = spec.box.x1
        elif anchor == "middle":
            x = cx
        else:
            x = spec.box.x2
        parts.append(
            f'<text x="{x:g}" y="{line.baseline:g}" fill="{_hex_color(spec)}" '
            f'fill-opacity="{opacity:.4f}" font-family="{spec.font}" '
            f'font-size="{layout.font_size}" text-anchor="{anchor}">'
            f"{_xml_escape(line.text)}</text>")
    parts.append("</g>")
    return "\n".join(parts)


def _xml_escape(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def parse_svg_fragment(fragment: str) -> dict:
    """Recover content, fill color, font, alignment, and angle from a
    to_svg fragment."""
    import xml.etree.ElementTree as ET

    root = ET.fromstring(fragment)
    texts = list(root.iter("text"))
    content = " ".join(t.text or "" for t in texts)
    first = texts[0] if texts else None
    return {
        "content": content,
        "fill": first.get("fill") if first is not None else None,
        "font": first.get("font-family") if first is not None else None,
        "alignment": _ANCHORS_INV.get(first.get("text-anchor")) if first is not None else None,
        "angle": int(root.get("data-angle")),
        "line_count": len(texts),
    }
