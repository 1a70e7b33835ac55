"""Deterministic in-process expert mocks.

The suite shares a fixture registry: whenever the mock t2i (or a test)
creates a synthetic design, its composite is registered together with
its ground-truth plan and OCR items.  The mock VLM and OCR answer from
that registry, which makes every pipeline mode runnable offline with
exactly reproducible results.
"""

from __future__ import annotations

import hashlib
import re

import numpy as np

from .. import _kernels
from ..design_doc import Canvas, pad_to_square
from ..plan_codec import _round_half_up_ratio, PLAN_COORD_MAX
from .gateway import (ExpertGateway, b64_image, image_from_b64,
                      mask_payload_to_array, resize_to_longer_side)

QUESTIONNAIRE_MARKER = "select the option (a, b, c, or d)"
EXPANSION_MARKER = "expand the original prompt into a detailed one"
SKETCH_MARKER = "You will be provided with a sketch"
STAGE2_MARKERS = ("Parse and refine the attributions",
                  "Parse the attributions of text",
                  "Add text on the background")


def _image_key(image: np.ndarray) -> str:
    h = hashlib.sha256()
    h.update(str(image.shape).encode())
    h.update(np.ascontiguousarray(image).tobytes())
    return h.hexdigest()


def stable_seed(*parts) -> int:
    h = hashlib.sha256()
    for p in parts:
        h.update(str(p).encode())
        h.update(b"\x00")
    return int.from_bytes(h.digest()[:8], "big")


class FixtureRegistry:
    """Maps image fingerprints to ground-truth plan text and OCR items
    (plan-space boxes)."""

    def __init__(self):
        self._plans = {}
        self._ocr = {}

    def register_image(self, image: np.ndarray, plan_text: str, ocr_items=()):
        variants = [image, resize_to_longer_side(image)]
        h, w = image.shape[:2]
        if h != w:
            padded, _ = pad_to_square(image)
            variants += [padded, resize_to_longer_side(padded)]
        for img in variants:
            key = _image_key(img)
            self._plans[key] = plan_text
            self._ocr[key] = tuple(ocr_items)

    def plan_for(self, image: np.ndarray) -> str | None:
        return self._plans.get(_image_key(image))

    def ocr_for(self, image: np.ndarray):
        return self._ocr.get(_image_key(image), ())

    def save(self, path) -> None:
        import json

        payload = {
            "plans": self._plans,
            "ocr": {k: [[t, list(b)] for t, b in items]
                    for k, items in self._ocr.items()},
        }
        with open(path, "w") as fh:
            json.dump(payload, fh)

    @classmethod
    def load(cls, path) -> "FixtureRegistry":
        import json

        with open(path) as fh:
            payload = json.load(fh)
        reg = cls()
        reg._plans = dict(payload.get("plans", {}))
        reg._ocr = {k: tuple((t, tuple(b)) for t, b in items)
                    for k, items in payload.get("ocr", {}).items()}
        return reg


class _MockBackend:
    def __init__(self, suite: "MockSuite", role: str):
        self.suite = suite
        self.role = role

    def invoke(self, role, params, image=None, mask=None):
        handler = getattr(self.suite, f"_handle_{role}")
        return handler(params, image, mask)


class MockSuite:
    """All five expert roles, seeded and purely in-process."""

    def __init__(self, seed: int = 0, registry: FixtureRegistry | None = None,
                 scripted_vlm: dict | None = None):
        self.seed = seed
        self.registry = registry or FixtureRegistry()
        self.scripted_vlm = dict(scripted_vlm or {})

    def backend_for(self, role: str) -> _MockBackend:
        return _MockBackend(self, role)

    def gateway(self) -> ExpertGateway:
        backends = {r: self.backend_for(r)
                    for r in ("t2i", "vlm", "ocr", "segment", "remove")}
        defaults = {
            "t2i": {"width": 1024, "height": 1024, "steps": 4,
                    "max_prompt_tokens": 256},
            "remove": {"prompt": "nothing in the image"},
        }
        return ExpertGateway(backends=backends, defaults=defaults)

    # -- handlers ----------------------------------------------------------

    def _handle_t2i(self, params, image, mask):
        from .. import datagen
        from ..design_doc import composite
        from ..plan_codec import serialize_plan

        seed = stable_seed("t2i", self.seed, params["prompt"])
        spec = datagen.SyntheticDesignSpec(seed=seed)
        design, plan = datagen.synth_design(spec)
        ref = composite(design)
        self.registry.register_image(
            ref, serialize_plan(plan), datagen.ocr_items_for_plan(plan))
        w, h = int(params.get("width", 1024)), int(params.get("height", 1024))
        out = _nearest_resize(ref, w, h)
        return {"outputs": [{"image_b64": b64_image(out)}], "warnings": []}

    def _handle_vlm(self, params, image, mask):
        prompt = params["prompt"]
        if prompt in self.scripted_vlm:
            text = self.scripted_vlm[prompt]
        elif QUESTIONNAIRE_MARKER in prompt:
            text = "The best option is (a)."
        elif EXPANSION_MARKER in prompt:
            intention = _quoted(prompt, r'the given prompt "(.*?)",')
            text = _canned_expansion(intention)
        elif SKETCH_MARKER in prompt:
            intention = _quoted(prompt, r'this image is about "(.*?)"\.')
            text = _canned_sketch_description(intention)
        elif any(prompt.startswith(m) for m in STAGE2_MARKERS):
            plan_text = self.registry.plan_for(image) if image is not None else None
            text = plan_text if plan_text is not None else "no plan available"
        else:
            text = "no scripted response"
        return {"outputs": [{"text": text}], "warnings": []}

    def _handle_ocr(self, params, image, mask):
        h, w = image.shape[:2]
        side = max(h, w)
        items = []
        for text, plan_box in self.registry.ocr_for(image):
            px = [_round_half_up_ratio(v, side, PLAN_COORD_MAX) for v in plan_box]
            items.append({"text": text, "box": px})
        return {"outputs": [{"items": items}], "warnings": []}

    def _handle_segment(self, params, image, mask):
        import base64

        h, w = image.shape[:2]
        x1, y1, x2, y2 = params["box"]
        out = np.zeros((h, w), dtype=np.uint8)
        out[y1:y2, x1:x2] = 255
        return {"outputs": [{"mask_b64": base64.b64encode(out.tobytes()).decode(),
                             "mask_shape": [h, w]}],
                "warnings": []}

    def _handle_remove(self, params, image, mask):
        mask = mask if mask.ndim == 2 else mask[..., 0]
        n = int(params.get("n", 4))
        filled = image.copy()
        _kernels.row_blend_fill(filled, (mask != 0).astype(np.uint8))
        outputs = []
        for k in range(n):
            cand = filled.copy()
            if k > 0:
                rng = np.random.default_rng(
                    stable_seed("remove", self.seed, _image_key(image),
                                _image_key(mask[..., None]), k))
                noise = rng.integers(-k, k + 1, size=cand[..., :3].shape)
                rgb = cand[..., :3].astype(np.int16) + np.where(
                    (mask != 0)[..., None], noise, 0)
                cand[..., :3] = np.clip(rgb, 0, 255).astype(np.uint8)
            outputs.append({"image_b64": b64_image(cand)})
        return {"outputs": outputs, "warnings": []}


def _nearest_resize(image: np.ndarray, w: int, h: int) -> np.ndarray:
    from PIL import Image as PILImage

    from ..design_doc import to_pil

    return np.asarray(to_pil(image).resize((w, h), PILImage.NEAREST),
                      dtype=np.uint8).copy()


def _quoted(prompt: str, pattern: str) -> str:
    m = re.search(pattern, prompt, flags=re.DOTALL)
    return m.group(1) if m else "a graphic design"


def _canned_expansion(intention: str) -> str:
    return (
        f"A polished graphic design realizing the idea: {intention}. "
        "A clean composition with a strong focal object, balanced negative "
        "space, and bold headline typography placed where the layout "
        "breathes, over a softly graded background."
    )


def _canned_sketch_description(intention: str) -> str:
    return (
        f"The sketch depicts a design about {intention}. A primary object "
        "anchors the composition, with headline text across the marked "
        "placeholder areas and supporting text beneath, arranged for clear "
        "visual hierarchy."
    )
