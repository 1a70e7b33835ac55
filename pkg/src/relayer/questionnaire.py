"""Removal-result selection via a 2x3 comparison grid.

Row 1 shows the original and the masked image; rows 2-3 show the four
candidates labeled a/b/c/d in row-major order.  The VLM (or an oracle)
picks the best candidate.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw

from .design_doc import Canvas, from_pil, to_pil
from .errors import RelayerError, SelectionUnparsable
from .text_render import _BUNDLED_FONTS, _load_font

CELL = 256
GRID_W, GRID_H = 2 * CELL, 3 * CELL
LABELS = ("a", "b", "c", "d")
LABEL_HEIGHT = 16

_PROMPT_PATH = Path(__file__).parent / "assets" / "prompts" / "questionnaire.txt"


def selection_prompt() -> str:
    return _PROMPT_PATH.read_text().strip()


@dataclass
class Questionnaire:
    grid: np.ndarray
    labels: tuple = LABELS
    provenance: tuple = ()  # per letter: candidate index or "ground_truth"


def _cell(image: np.ndarray) -> np.ndarray:
    return from_pil(to_pil(image).resize((CELL, CELL), Image.BOX))


def _stamp(img: Image.Image, x: int, y: int, letter: str) -> None:
    draw = ImageDraw.Draw(img)
    font = _load_font(str(_BUNDLED_FONTS / "DejaVuSans-Bold.ttf"), LABEL_HEIGHT)
    draw.rectangle([x + 2, y + 2, x + 4 + LABEL_HEIGHT, y + 4 + LABEL_HEIGHT],
                   fill=(255, 255, 255, 255))
    draw.text((x + 6, y + 3), letter, fill=(0, 0, 0, 255), font=font)


def compose_grid(original: np.ndarray, masked: np.ndarray, candidates,
                 provenance=None) -> Questionnaire:
    cands = candidates.candidates if hasattr(candidates, "candidates") else list(candidates)
    if len(cands) != 4:
        raise RelayerError(f"questionnaire needs exactly 4 candidates, got {len(cands)}",
                           code="bad_candidate_count")
    grid = np.zeros((GRID_H, GRID_W, 4), dtype=np.uint8)
    grid[..., 3] = 255
    grid[0:CELL, 0:CELL] = _cell(original)
    grid[0:CELL, CELL:2 * CELL] = _cell(masked)
    img = to_pil(grid)
    for k, cand in enumerate(cands):
        row, col = 1 + k // 2, k % 2
        y, x = row * CELL, col * CELL
        patch = to_pil(_cell(cand))
        img.paste(patch, (x, y))
        _stamp(img, x, y, LABELS[k])
    if provenance is None:
        provenance = tuple(range(4))
    return Questionnaire(grid=from_pil(img), provenance=tuple(provenance))


_LETTER_RE = re.compile(r"\b([abcd])\b", re.IGNORECASE)


def parse_selection(response: str) -> int:
    m = _LETTER_RE.search(response)
    if not m:
        raise SelectionUnparsable(f"no option letter in response: {response!r}")
    return LABELS.index(m.group(1).lower())


def select_best(q: Questionnaire, gateway) -> int:
    response = gateway.vlm_complete(q.grid, selection_prompt())
    return parse_selection(response)


def build_training_questionnaire(ground_truth: np.ndarray, generated, seed: int,
                                 original=None, masked=None):
    """Shuffle {gt, g1, g2, g3} into slots a..d; returns the grid and the
    letter of the ground-truth slot."""
    if len(generated) != 3:
        raise RelayerError("training questionnaire needs exactly 3 generated results",
                           code="bad_candidate_count")
    options = [ground_truth] + list(generated)
    tags = ["ground_truth", 0, 1, 2]
    rng = np.random.default_rng(seed)
    order = rng.permutation(4)
    slotted = [options[i] for i in order]
    provenance = tuple(tags[i] for i in order)
    answer = LABELS[int(np.nonzero(order == 0)[0][0])]
    gray = np.full_like(ground_truth, 128)
    gray[..., 3] = 255
    q = compose_grid(original if original is not None else gray,
                     masked if masked is not None else gray,
                     slotted, provenance=provenance)
    return q, answer


def oracle_select(candidates, ground_truth: np.ndarray) -> int:
    """argmin MSE against the ground truth; ties go to the lowest index."""
    cands = candidates.candidates if hasattr(candidates, "candidates") else list(candidates)
    best, best_mse = 0, None
    for i, cand in enumerate(cands):
        mse = float(np.mean(
            (cand[..., :3].astype(np.float64) - ground_truth[..., :3]) ** 2))
        if best_mse is None or mse < best_mse:
            best, best_mse = i, mse
    return best


# ---------------------------------------------------------------------------
# selection strategies used by the pipeline removal loop

MASK_GRAY = (128, 128, 128, 255)


def masked_preview(image: np.ndarray, mask: np.ndarray) -> np.ndarray:
    out = image.copy()
    out[mask != 0] = MASK_GRAY
    return out


class QuestionnaireSelector:
    """Default: compose the grid and let the VLM pick; falls back to
    candidate 0 when the answer is unparsable."""

    def __init__(self, gateway):
        self.gateway = gateway

    def choose(self, original, mask, batch) -> int:
        q = compose_grid(original, masked_preview(original, mask), batch)
        try:
            return select_best(q, self.gateway)
        except SelectionUnparsable:
            return 0


class FirstCandidateSelector:
    def choose(self, original, mask, batch) -> int:
        return 0


class OracleSelector:
    """Test selector: picks the candidate closest to a known target."""

    def __init__(self, target: np.ndarray):
        self.target = target

    def choose(self, original, mask, batch) -> int:
        return oracle_select(batch, self.target)
