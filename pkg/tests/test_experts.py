import base64

import numpy as np
import pytest
from fastapi.testclient import TestClient

from relayer.design_doc import BoundingBox, Canvas
from relayer.errors import ExpertError
from relayer.experts import MockSuite
from relayer.experts.gateway import (ExpertEndpoint, ExpertGateway, HttpBackend,
                                     OcrResult, RemovalBatch, TruncationWarning,
                                     b64_image, image_from_b64, load_gateway,
                                     resize_to_longer_side)
from relayer.experts.server import build_expert_app

from conftest import register_fixture, solid_raster


class TestEndpoint:
    def test_bad_role(self):
        with pytest.raises(ExpertError):
            ExpertEndpoint(role="oracle", url="http://x")

    def test_bad_timeout_and_retries(self):
        with pytest.raises(ExpertError):
            ExpertEndpoint(role="t2i", url="http://x", timeout_s=0)
        with pytest.raises(ExpertError):
            ExpertEndpoint(role="t2i", url="http://x", retries=-1)


class TestResize:
    def test_landscape(self):
        out = resize_to_longer_side(solid_raster(672, 200), 336)
        assert out.shape[:2] == (100, 336)

    def test_portrait(self):
        out = resize_to_longer_side(solid_raster(200, 672), 336)
        assert out.shape[:2] == (336, 100)

    def test_already_target_untouched(self):
        img = solid_raster(336, 100)
        assert np.array_equal(resize_to_longer_side(img, 336), img)

    def test_b64_round_trip(self):
        rng = np.random.default_rng(7)
        img = rng.integers(0, 256, size=(13, 9, 4), dtype=np.uint8)
        assert np.array_equal(image_from_b64(b64_image(img)), img)


class FlakyTransport:
    """Fails the first n calls, then returns a canned body."""

    def __init__(self, failures, body=None):
        self.failures = failures
        self.calls = 0
        self.body = body if body is not None else {"outputs": [{"text": "ok"}]}

    def __call__(self, url, payload, timeout):
        self.calls += 1
        if self.calls <= self.failures:
            raise ConnectionError("boom")
        return self.body


class TestHttpBackend:
    def _backend(self, transport, retries=2):
        endpoint = ExpertEndpoint(role="vlm", url="http://experts.local",
                                  retries=retries)
        sleeps = []
        backend = HttpBackend(endpoint, post=transport, sleep=sleeps.append)
        return backend, sleeps

    def test_success_first_try(self):
        transport = FlakyTransport(0)
        backend, sleeps = self._backend(transport)
        body = backend.invoke("vlm", {"prompt": "p"})
        assert body["outputs"][0]["text"] == "ok"
        assert transport.calls == 1
        assert sleeps == []

    def test_retries_with_exponential_backoff(self):
        transport = FlakyTransport(2)
        backend, sleeps = self._backend(transport, retries=2)
        backend.invoke("vlm", {"prompt": "p"})
        assert transport.calls == 3
        assert sleeps == [0.5, 1.0]

    def test_exhausted_retries_raise(self):
        transport = FlakyTransport(10)
        backend, sleeps = self._backend(transport, retries=2)
        with pytest.raises(ExpertError) as err:
            backend.invoke("vlm", {"prompt": "p"})
        assert err.value.code == "expert_transport"
        assert transport.calls == 3

    def test_malformed_body_not_retried(self):
        transport = FlakyTransport(0, body={"nope": True})
        backend, _ = self._backend(transport, retries=3)
        with pytest.raises(ExpertError) as err:
            backend.invoke("vlm", {"prompt": "p"})
        assert err.value.code == "expert_malformed"
        assert transport.calls == 1

    def test_payload_shape(self):
        seen = {}

        def transport(url, payload, timeout):
            seen.update(url=url, payload=payload, timeout=timeout)
            return {"outputs": [{"text": "ok"}]}

        backend, _ = self._backend(transport)
        img = solid_raster(4, 4)
        mask = np.ones((4, 4), dtype=np.uint8)
        backend.invoke("vlm", {"prompt": "p"}, image=img, mask=mask)
        assert seen["url"] == "http://experts.local/v1/vlm"
        assert seen["payload"]["params"] == {"prompt": "p"}
        assert "request_id" in seen["payload"]
        assert np.array_equal(
            image_from_b64(seen["payload"]["image_b64"]), img)
        assert seen["payload"]["mask_shape"] == [4, 4]


class TestGatewaySemantics:
    def test_t2i_empty_prompt_rejected(self, gateway):
        with pytest.raises(ExpertError):
            gateway.text_to_image("")

    def test_t2i_returns_requested_canvas(self, gateway):
        img = gateway.text_to_image("a poster", Canvas(1024, 1024))
        assert img.shape == (1024, 1024, 4)

    def test_t2i_prompt_truncated_with_warning(self, gateway):
        long_prompt = " ".join(["word"] * 400)
        with pytest.warns(TruncationWarning):
            gateway.text_to_image(long_prompt, Canvas(1024, 1024))

    def test_t2i_deterministic_per_prompt(self, mock_suite):
        g = mock_suite.gateway()
        a = g.text_to_image("same prompt")
        b = g.text_to_image("same prompt")
        c = g.text_to_image("different prompt")
        assert np.array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_vlm_resizes_input(self, mock_suite):
        calls = {}
        orig = mock_suite._handle_vlm

        def spy(params, image, mask):
            calls["shape"] = image.shape
            return orig(params, image, mask)

        mock_suite._handle_vlm = spy
        mock_suite.gateway().vlm_complete(solid_raster(1024, 512), "hello")
        assert calls["shape"][:2] == (168, 336)

    def test_ocr_sorted_and_plan_space(self, mock_suite, fixture_factory):
        design, plan, reference = fixture_factory(seed=3, text_count=3)
        result = mock_suite.gateway().ocr(reference)
        assert len(result.items) == 3
        ys = [b.y1 for _, b in result.items]
        assert ys == sorted(ys)
        for _, b in result.items:
            assert 0 <= b.x1 < b.x2 <= 336
            assert 0 <= b.y1 < b.y2 <= 336

    def test_segment_clips_to_dilated_box(self, gateway):
        img = solid_raster(64, 64)
        box = BoundingBox(10, 10, 20, 20)
        mask = gateway.segment(img, box)
        assert mask.shape == (64, 64)
        assert (mask[10:20, 10:20] == 255).all()
        ys, xs = np.nonzero(mask)
        assert xs.min() >= 6 and xs.max() <= 23
        assert ys.min() >= 6 and ys.max() <= 23

    def test_segment_box_outside_canvas_rejected(self, gateway):
        with pytest.raises(ExpertError):
            gateway.segment(solid_raster(32, 32), BoundingBox(10, 10, 40, 20))

    def test_remove_preserves_offmask_pixels(self, gateway):
        rng = np.random.default_rng(0)
        img = rng.integers(0, 256, size=(32, 32, 4), dtype=np.uint8)
        mask = np.zeros((32, 32), dtype=np.uint8)
        mask[8:16, 8:16] = 255
        batch = gateway.remove(img, mask, 4)
        assert len(batch.candidates) == 4
        keep = mask == 0
        for cand in batch.candidates:
            assert np.array_equal(cand[keep], img[keep])

    def test_remove_candidates_differ(self, gateway):
        img = solid_raster(32, 32, (200, 10, 10, 255))
        mask = np.zeros((32, 32), dtype=np.uint8)
        mask[4:28, 4:28] = 255
        batch = gateway.remove(img, mask, 3)
        assert not np.array_equal(batch.candidates[0], batch.candidates[1])
        assert not np.array_equal(batch.candidates[1], batch.candidates[2])

    def test_remove_empty_mask_rejected(self, gateway):
        with pytest.raises(ExpertError):
            gateway.remove(solid_raster(8, 8), np.zeros((8, 8), dtype=np.uint8))

    def test_remove_bad_count_rejected(self, gateway):
        mask = np.ones((8, 8), dtype=np.uint8)
        with pytest.raises(ExpertError):
            gateway.remove(solid_raster(8, 8), mask, 0)

    def test_batch_size_bounds(self):
        with pytest.raises(ExpertError):
            RemovalBatch(candidates=[])
        with pytest.raises(ExpertError):
            RemovalBatch(candidates=[None] * 9)

    def test_unconfigured_role(self):
        g = ExpertGateway(backends={})
        with pytest.raises(ExpertError) as err:
            g.vlm_complete(solid_raster(8, 8), "p")
        assert err.value.code == "expert_unconfigured"


class TestWireContract:
    """The mock suite served over HTTP must behave exactly like the
    in-process mock suite."""

    @pytest.fixture
    def served_gateway(self, mock_suite):
        client = TestClient(build_expert_app(mock_suite))

        def post(url, payload, timeout):
            resp = client.post(url, json=payload)
            resp.raise_for_status()
            return resp.json()

        backends = {}
        for role in ("t2i", "vlm", "ocr", "segment", "remove"):
            endpoint = ExpertEndpoint(role=role, url="http://testserver")
            backends[role] = HttpBackend(endpoint, post=post)
        return ExpertGateway(backends=backends,
                             defaults=mock_suite.gateway().defaults)

    def test_envelope_fields(self, mock_suite):
        client = TestClient(build_expert_app(mock_suite))
        resp = client.post("/v1/vlm", json={
            "request_id": "r-1",
            "params": {"prompt": "hello", "max_new_tokens": 16},
            "image_b64": b64_image(solid_raster(8, 8)),
        })
        assert resp.status_code == 200
        body = resp.json()
        assert body["request_id"] == "r-1"
        assert isinstance(body["outputs"], list)
        assert isinstance(body["warnings"], list)

    def test_http_and_inprocess_agree(self, mock_suite, served_gateway):
        local = mock_suite.gateway()
        img_http = served_gateway.text_to_image("poster about tea")
        img_local = local.text_to_image("poster about tea")
        assert np.array_equal(img_http, img_local)

        design, plan, reference = register_fixture(mock_suite, seed=11)
        assert (served_gateway.ocr(reference).items
                == local.ocr(reference).items)

        mask = np.zeros(reference.shape[:2], dtype=np.uint8)
        mask[10:40, 10:40] = 255
        a = served_gateway.remove(reference, mask, 2)
        b = local.remove(reference, mask, 2)
        for x, y in zip(a.candidates, b.candidates):
            assert np.array_equal(x, y)


class TestLoadGateway:
    def test_mock_literal(self):
        g = load_gateway("mock")
        assert isinstance(g, ExpertGateway)
        g.text_to_image("anything")

    def test_toml_mock_roles_share_registry(self, tmp_path):
        cfg = tmp_path / "experts.toml"
        cfg.write_text("\n".join(
            f'[{role}]\nbackend = "mock"' for role in
            ("t2i", "vlm", "ocr", "segment", "remove")))
        g = load_gateway(str(cfg))
        # t2i registers its synthetic design; ocr must see it
        img = g.text_to_image("a seeded design", Canvas(1024, 1024))
        small = np.asarray(
            __import__("PIL.Image", fromlist=["Image"]).fromarray(img).resize(
                (512, 512), __import__("PIL.Image", fromlist=["Image"]).BOX),
            dtype=np.uint8)
        result = g.ocr(small)
        assert isinstance(result, OcrResult)
        assert len(result.items) >= 1

    def test_toml_http_roles(self, tmp_path):
        cfg = tmp_path / "experts.toml"
        cfg.write_text('[vlm]\nurl = "http://experts.local"\nretries = 5\n'
                       'timeout_s = 7.5\n')
        g = load_gateway(str(cfg))
        backend = g.backends["vlm"]
        assert isinstance(backend, HttpBackend)
        assert backend.endpoint.retries == 5
        assert backend.endpoint.timeout_s == 7.5

    def test_registry_env_round_trip(self, tmp_path, mock_suite, monkeypatch):
        design, plan, reference = register_fixture(mock_suite, seed=5)
        reg_path = tmp_path / "registry.json"
        mock_suite.registry.save(reg_path)
        monkeypatch.setenv("RELAYER_MOCK_REGISTRY", str(reg_path))
        g = load_gateway("mock")
        assert len(g.ocr(reference).items) == len(plan.texts)
