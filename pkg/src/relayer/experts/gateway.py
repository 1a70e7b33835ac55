"""Uniform client layer for the five expert roles.

Wire contract: ``POST {base}/v1/{role}`` with a JSON envelope
``{request_id, params, image_b64?, mask_b64?}`` returning
``{request_id, outputs: [...], warnings: [...]}``.  Images travel as
base64 PNG.  The gateway enforces role pre/postconditions regardless of
the backend (HTTP service or in-process mock).
"""

from __future__ import annotations

import base64
import time
import uuid
import warnings
from dataclasses import dataclass, field

import numpy as np
import requests
from PIL import Image

from ..design_doc import (BoundingBox, Canvas, from_png_bytes, new_raster,
                          png_bytes, raster_canvas, to_pil)
from ..errors import ExpertError
from ..plan_codec import PLAN_COORD_MAX, _round_half_up_ratio

ROLES = ("t2i", "vlm", "ocr", "segment", "remove")
VLM_IMAGE_SIDE = 336
DEFAULT_MAX_NEW_TOKENS = 1536
DEFAULT_T2I_PROMPT_TOKENS = 256
SEGMENT_DILATION = 4


class TruncationWarning(UserWarning):
    pass


@dataclass(frozen=True)
class ExpertEndpoint:
    role: str
    url: str = ""
    timeout_s: float = 30.0
    retries: int = 2
    defaults: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.role not in ROLES:
            raise ExpertError(f"unknown expert role {self.role!r}", code="bad_role")
        if self.timeout_s <= 0:
            raise ExpertError("timeout must be positive", code="bad_endpoint")
        if self.retries < 0:
            raise ExpertError("retries must be >= 0", code="bad_endpoint")


@dataclass(frozen=True)
class OcrResult:
    """Detected text items, boxes in plan space [0, 336]."""

    items: tuple = ()


@dataclass
class RemovalBatch:
    candidates: list

    def __post_init__(self):
        if not (1 <= len(self.candidates) <= 8):
            raise ExpertError(f"removal batch size {len(self.candidates)} outside 1..8",
                              code="bad_batch")


def resize_to_longer_side(image: np.ndarray, target: int = VLM_IMAGE_SIDE) -> np.ndarray:
    """Aspect-preserving resize so the longer side equals ``target``."""
    h, w = image.shape[:2]
    if max(h, w) == target:
        return image
    if w >= h:
        new_w, new_h = target, max(1, round(h * target / w))
    else:
        new_h, new_w = target, max(1, round(w * target / h))
    img = to_pil(image).resize((new_w, new_h), Image.BOX)
    return np.asarray(img, dtype=np.uint8).copy()


def b64_image(image: np.ndarray) -> str:
    return base64.b64encode(png_bytes(image)).decode("ascii")


def image_from_b64(data: str) -> np.ndarray:
    return from_png_bytes(base64.b64decode(data))


class HttpBackend:
    """JSON-over-HTTP expert backend with exponential-backoff retries."""

    BACKOFF_BASE_S = 0.5

    def __init__(self, endpoint: ExpertEndpoint, post=None, sleep=time.sleep):
        self.endpoint = endpoint
        self._post = post or self._requests_post
        self._sleep = sleep

    def _requests_post(self, url, payload, timeout):
        resp = requests.post(url, json=payload, timeout=timeout)
        resp.raise_for_status()
        return resp.json()

    def invoke(self, role: str, params: dict, image=None, mask=None) -> dict:
        payload = {"request_id": str(uuid.uuid4()), "params": params}
        if image is not None:
            payload["image_b64"] = b64_image(image)
        if mask is not None:
            payload["mask_b64"] = base64.b64encode(mask.tobytes()).decode("ascii")
            payload["mask_shape"] = list(mask.shape)
        url = self.endpoint.url.rstrip("/") + f"/v1/{role}"
        attempts = self.endpoint.retries + 1
        last = None
        for attempt in range(attempts):
            try:
                body = self._post(url, payload, self.endpoint.timeout_s)
                if "outputs" not in body:
                    raise ExpertError(f"{role}: malformed response (no outputs)",
                                      code="expert_malformed")
                return body
            except ExpertError:
                raise
            except Exception as exc:  # transport failure
                last = exc
                if attempt + 1 < attempts:
                    self._sleep(self.BACKOFF_BASE_S * (2 ** attempt))
        raise ExpertError(f"{role}: transport failed after {attempts} attempts: {last}",
                          code="expert_transport")


class ExpertGateway:
    """Role-typed façade over per-role backends (HTTP or mock)."""

    def __init__(self, backends: dict, defaults: dict | None = None):
        self.backends = backends
        self.defaults = defaults or {}

    def _invoke(self, role, params, image=None, mask=None):
        backend = self.backends.get(role)
        if backend is None:
            raise ExpertError(f"no backend configured for role {role!r}",
                              code="expert_unconfigured")
        merged = dict(self.defaults.get(role, {}))
        merged.update(params)
        return backend.invoke(role, merged, image=image, mask=mask)

    # -- t2i ---------------------------------------------------------------
    def text_to_image(self, prompt: str, canvas: Canvas = Canvas(1024, 1024)) -> np.ndarray:
        if not prompt:
            raise ExpertError("t2i prompt must be nonempty", code="empty_prompt")
        cap = int(self.defaults.get("t2i", {}).get(
            "max_prompt_tokens", DEFAULT_T2I_PROMPT_TOKENS))
        tokens = prompt.split()
        if len(tokens) > cap:
            warnings.warn(f"t2i prompt truncated from {len(tokens)} to {cap} tokens",
                          TruncationWarning)
            prompt = " ".join(tokens[:cap])
        body = self._invoke("t2i", {"prompt": prompt, "width": canvas.width,
                                    "height": canvas.height})
        image = image_from_b64(body["outputs"][0]["image_b64"])
        if raster_canvas(image) != canvas:
            raise ExpertError("t2i returned wrong image size", code="expert_malformed")
        return image

    # -- vlm ---------------------------------------------------------------
    def vlm_complete(self, image: np.ndarray, prompt: str,
                     max_new: int = DEFAULT_MAX_NEW_TOKENS) -> str:
        if not prompt:
            raise ExpertError("vlm prompt must be nonempty", code="empty_prompt")
        small = resize_to_longer_side(image, VLM_IMAGE_SIDE)
        body = self._invoke("vlm", {"prompt": prompt, "max_new_tokens": max_new},
                            image=small)
        return body["outputs"][0]["text"]

    # -- ocr ---------------------------------------------------------------
    def ocr(self, image: np.ndarray) -> OcrResult:
        body = self._invoke("ocr", {}, image=image)
        h, w = image.shape[:2]
        side = max(h, w)
        items = []
        for rec in body["outputs"][0].get("items", []):
            x1, y1, x2, y2 = rec["box"]  # image pixel space
            coords = [min(PLAN_COORD_MAX,
                          max(0, _round_half_up_ratio(int(v), PLAN_COORD_MAX, side)))
                      for v in (x1, y1, x2, y2)]
            if coords[0] >= coords[2] or coords[1] >= coords[3]:
                continue
            items.append((rec.get("text"), BoundingBox(*coords)))
        items.sort(key=lambda it: (it[1].y1, it[1].x1))
        return OcrResult(items=tuple(items))

    # -- segment -----------------------------------------------------------
    def segment(self, image: np.ndarray, box: BoundingBox) -> np.ndarray:
        canvas = raster_canvas(image)
        if box.clip(canvas) is None or box.x2 > canvas.width or box.y2 > canvas.height \
                or box.x1 < 0 or box.y1 < 0:
            raise ExpertError(f"segment box {box.as_tuple()} outside canvas",
                              code="box_out_of_canvas")
        body = self._invoke("segment", {"box": list(box.as_tuple())}, image=image)
        out = body["outputs"][0]
        mask = np.frombuffer(base64.b64decode(out["mask_b64"]), dtype=np.uint8)
        mask = mask.reshape(out["mask_shape"]).copy()
        clip = np.zeros_like(mask)
        d = box.dilate(SEGMENT_DILATION, canvas)
        clip[d.y1:d.y2, d.x1:d.x2] = 1
        mask *= clip
        return mask

    # -- remove ------------------------------------------------------------
    def remove(self, image: np.ndarray, mask: np.ndarray, n: int = 4) -> RemovalBatch:
        if n < 1:
            raise ExpertError("removal candidate count must be >= 1", code="bad_count")
        if not mask.any():
            raise ExpertError("removal mask is empty", code="empty_mask")
        body = self._invoke("remove", {"n": n}, image=image, mask=mask)
        keep = mask == 0
        candidates = []
        for out in body["outputs"][:n]:
            cand = image_from_b64(out["image_b64"])
            cand[keep] = image[keep]  # off-mask pixels are inviolable
            candidates.append(cand)
        if len(candidates) != n:
            raise ExpertError(f"remove returned {len(candidates)} of {n} candidates",
                              code="expert_malformed")
        return RemovalBatch(candidates=candidates)


def mask_payload_to_array(payload: dict) -> np.ndarray:
    mask = np.frombuffer(base64.b64decode(payload["mask_b64"]), dtype=np.uint8)
    return mask.reshape(payload["mask_shape"]).copy()


def load_gateway(config: str = "mock", seed: int = 0) -> ExpertGateway:
    """Build a gateway from an experts.toml path, or 'mock' for the
    deterministic in-process suite."""
    import os

    from .mocks import FixtureRegistry, MockSuite

    def _mock_suite():
        registry = None
        reg_path = os.environ.get("RELAYER_MOCK_REGISTRY")
        if reg_path and os.path.exists(reg_path):
            registry = FixtureRegistry.load(reg_path)
        return MockSuite(seed=seed, registry=registry)

    if config == "mock":
        return _mock_suite().gateway()

    try:
        import tomllib
    except ModuleNotFoundError:  # python < 3.11
        import tomli as tomllib

    with open(config, "rb") as fh:
        cfg = tomllib.load(fh)
    backends = {}
    defaults = {}
    shared_suite = None
    for role, entry in cfg.items():
        if entry.get("backend") == "mock":
            if shared_suite is None:
                shared_suite = _mock_suite()
            backends[role] = shared_suite.backend_for(role)
        else:
            endpoint = ExpertEndpoint(
                role=role,
                url=entry["url"],
                timeout_s=float(entry.get("timeout_s", 30.0)),
                retries=int(entry.get("retries", 2)),
                defaults=entry.get("defaults", {}),
            )
            backends[role] = HttpBackend(endpoint)
        defaults[role] = entry.get("defaults", {})
    return ExpertGateway(backends=backends, defaults=defaults)
