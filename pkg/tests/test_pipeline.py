import json

import numpy as np
import pytest

from relayer.datagen import SyntheticDesignSpec, synth_design
from relayer.design_doc import composite, designs_equal
from relayer.errors import PipelineError, RelayerError
from relayer.experts import MockSuite
from relayer.metrics import mask_iou, psnr
from relayer.pipeline import (MASK_DILATION, MODES, PipelineRequest,
                              PipelineTrace, create_reference, describe_sketch,
                              dilate_mask, expand_intention, extract_layers,
                              plan_design, run, save_trace)
from relayer.plan_codec import box_plan_to_canvas, plan_from_design
from relayer.questionnaire import FirstCandidateSelector

from conftest import register_fixture, solid_raster


class TestRequest:
    def test_unknown_mode(self):
        with pytest.raises(RelayerError) as err:
            PipelineRequest(mode="telepathy").validate()
        assert err.value.code == "bad_mode"

    @pytest.mark.parametrize("mode,kwargs", [
        ("from_intention", {}),
        ("from_sketch", {"intention": "x"}),
        ("from_sketch", {"sketch": np.zeros((8, 8, 4), dtype=np.uint8)}),
        ("from_reference", {"intention": "x"}),
        ("derender", {}),
        ("add_text_to_background", {"reference": np.zeros((8, 8, 4), dtype=np.uint8)}),
    ])
    def test_missing_inputs(self, mode, kwargs):
        with pytest.raises(RelayerError) as err:
            PipelineRequest(mode=mode, **kwargs).validate()
        assert err.value.code == "missing_input"

    def test_all_modes_declared(self):
        assert set(MODES) == {"from_intention", "from_sketch", "from_reference",
                              "add_text_to_background", "derender"}


class TestDilate:
    def test_square_growth(self):
        mask = np.zeros((11, 11), dtype=np.uint8)
        mask[5, 5] = 255
        out = dilate_mask(mask, 2)
        assert (out[3:8, 3:8] == 255).all()
        assert out.sum() == 255 * 25

    def test_clipped_at_border(self):
        mask = np.zeros((6, 6), dtype=np.uint8)
        mask[0, 0] = 255
        out = dilate_mask(mask, 3)
        assert (out[:4, :4] == 255).all()
        assert out[5, 5] == 0

    def test_zero_radius_identity(self):
        mask = (np.random.default_rng(0).random((9, 9)) < 0.4).astype(np.uint8)
        assert np.array_equal(dilate_mask(mask, 0), mask)

    def test_matches_brute_force(self):
        rng = np.random.default_rng(3)
        mask = (rng.random((15, 12)) < 0.2).astype(np.uint8) * 255
        r = 2
        expected = np.zeros_like(mask)
        for y in range(15):
            for x in range(12):
                y0, y1 = max(0, y - r), min(15, y + r + 1)
                x0, x1 = max(0, x - r), min(12, x + r + 1)
                expected[y, x] = mask[y0:y1, x0:x1].max()
        assert np.array_equal(dilate_mask(mask, r), expected)


class TestStage1:
    def test_expand_intention(self, gateway):
        trace = PipelineTrace()
        out = expand_intention("a tulip fair poster", gateway, trace)
        assert "tulip fair" in out
        assert len(out) > len("a tulip fair poster")
        entry = trace.find("expand_intention")[0]
        assert "a tulip fair poster" in entry["prompt"]

    def test_expand_empty_rejected(self, gateway):
        with pytest.raises(RelayerError):
            expand_intention("", gateway)

    def test_describe_sketch(self, gateway):
        sketch = solid_raster(128, 128, (230, 230, 230, 255))
        out = describe_sketch(sketch, "a bakery ad", gateway)
        assert "a bakery ad" in out

    def test_create_reference_is_512(self, gateway):
        trace = PipelineTrace()
        ref = create_reference("some poster", gateway, trace)
        assert ref.shape == (512, 512, 4)
        assert np.array_equal(trace.find("create_reference")[0]["reference"], ref)


class TestStage2:
    def test_plan_recovered_from_registry(self, mock_suite):
        design, plan, reference = register_fixture(mock_suite, seed=21)
        got = plan_design(reference, None, mock_suite.gateway(), "original")
        assert got == plan

    def test_trace_records_ocr_and_variant(self, mock_suite):
        design, plan, reference = register_fixture(mock_suite, seed=22)
        trace = PipelineTrace()
        plan_design(reference, "a title", mock_suite.gateway(), "genai", trace)
        entry = trace.find("plan_design")[0]
        assert entry["variant"] == "genai"
        assert len(entry["ocr"]) == len(plan.texts)
        assert entry["repairs"] == []

    def test_unparsable_raw_raises(self, mock_suite):
        # unregistered image: the mock answers with non-plan text
        img = solid_raster(512, 512, (3, 4, 5, 255))
        from relayer.errors import PlanSyntaxError

        with pytest.raises(PlanSyntaxError):
            plan_design(img, None, mock_suite.gateway(), "original")


class TestStage3:
    def _setup(self, seed, **kwargs):
        suite = MockSuite(seed=0)
        design, plan, reference = register_fixture(suite, seed=seed, **kwargs)
        return suite, design, plan, reference

    def test_exact_recovery_background_and_texts(self):
        suite, design, plan, reference = self._setup(31, object_count=0,
                                                     text_count=2)
        got = extract_layers(reference, plan, suite.gateway(),
                             FirstCandidateSelector())
        assert plan_from_design(got) == plan
        # gradient background rows are constant, so row-wise inpainting
        # under candidate 0 reproduces the background exactly
        assert psnr(got.background, design.background) >= 90.0

    def test_object_peeling_recovers_masks(self):
        suite, design, plan, reference = self._setup(32, object_count=2,
                                                     text_count=1)
        got = extract_layers(reference, plan, suite.gateway(),
                             FirstCandidateSelector())
        assert len(got.objects) == 2
        for rec, orig in zip(got.objects, design.objects):
            assert mask_iou(rec.mask, orig.mask) == 1.0
            assert rec.box == orig.box
            on = orig.mask != 0
            assert np.array_equal(rec.image[..., :3][on], orig.image[..., :3][on])

    def test_reconstruction_error_zero(self):
        suite, design, plan, reference = self._setup(33, object_count=1,
                                                     text_count=2)
        got = extract_layers(reference, plan, suite.gateway(),
                             FirstCandidateSelector())
        recomposed = composite(got)
        diff = np.abs(recomposed[..., :3].astype(np.int16)
                      - reference[..., :3].astype(np.int16))
        assert float(diff.mean()) <= 0.5

    def test_texts_always_above_objects(self):
        suite, design, plan, reference = self._setup(34, object_count=2,
                                                     text_count=2)
        got = extract_layers(reference, plan, suite.gateway(),
                             FirstCandidateSelector())
        # composite order is background -> objects -> texts by construction;
        # the recovered design must keep every text above every object
        assert len(got.texts) == 2 and len(got.objects) == 2
        assert [o.z for o in got.objects] == [0, 1]

    def test_trace_stages(self):
        suite, design, plan, reference = self._setup(35, object_count=1,
                                                     text_count=1)
        trace = PipelineTrace()
        extract_layers(reference, plan, suite.gateway(),
                       FirstCandidateSelector(), trace)
        stages = [s["stage"] for s in trace.stages]
        assert stages == ["text_removal", "object_removal", "assemble"]
        removal = trace.find("object_removal")[0]
        assert len(removal["candidates"]) == 4
        assert removal["selected"] == 0

    def test_expert_failure_wraps_with_trace(self):
        suite, design, plan, reference = self._setup(36, text_count=1)

        class Exploding:
            def invoke(self, role, params, image=None, mask=None):
                raise_from = RelayerError("remove expert offline", code="expert_transport")
                raise raise_from

        gw = suite.gateway()
        gw.backends["remove"] = Exploding()
        trace = PipelineTrace()
        with pytest.raises(PipelineError) as err:
            extract_layers(reference, plan, gw, FirstCandidateSelector(), trace)
        assert err.value.trace is trace


class TestRun:
    def test_from_intention_end_to_end(self, mock_suite):
        design, trace = run(PipelineRequest(mode="from_intention",
                                            intention="spring market poster"),
                            mock_suite.gateway(), FirstCandidateSelector())
        assert design.canvas.width == design.canvas.height == 512
        stages = [s["stage"] for s in trace.stages]
        assert stages[0] == "expand_intention"
        assert stages[1] == "create_reference"
        assert stages[2] == "plan_design"
        assert stages[-1] == "assemble"
        assert set(trace.timings) == {"stage1", "stage2", "stage3"}

    def test_from_sketch_end_to_end(self, mock_suite):
        design, trace = run(PipelineRequest(
            mode="from_sketch", intention="music night",
            sketch=solid_raster(256, 256, (240, 240, 240, 255))),
            mock_suite.gateway(), FirstCandidateSelector())
        assert trace.find("describe_sketch")
        assert design.canvas.size == (512, 512)

    def test_derender_round_trip(self, mock_suite):
        design, plan, reference = register_fixture(mock_suite, seed=41,
                                                   object_count=1, text_count=2)
        got, trace = run(PipelineRequest(mode="derender", reference=reference),
                         mock_suite.gateway(), FirstCandidateSelector())
        assert plan_from_design(got) == plan
        assert trace.find("plan_design")[0]["variant"] == "original"

    def test_from_reference_variant(self, mock_suite):
        design, plan, reference = register_fixture(mock_suite, seed=42)
        got, trace = run(PipelineRequest(mode="from_reference",
                                         reference=reference, intention="a title"),
                         mock_suite.gateway(), FirstCandidateSelector())
        assert trace.find("plan_design")[0]["variant"] == "genai"

    def test_add_text_keeps_background_pixels(self, mock_suite):
        design, plan, reference = register_fixture(mock_suite, seed=43,
                                                   object_count=0, text_count=2)
        got, trace = run(PipelineRequest(mode="add_text_to_background",
                                         reference=reference, intention="t"),
                         mock_suite.gateway(), FirstCandidateSelector())
        assert got.objects == []
        assert len(got.texts) == len(plan.texts)
        assert np.array_equal(got.background[..., :3], reference[..., :3])
        assert trace.find("plan_design")[0]["variant"] == "background"

    def test_non_square_reference_round_trip(self, mock_suite):
        # a non-square input is padded for planning and cropped back
        design, plan, reference = register_fixture(mock_suite, seed=44,
                                                   object_count=0, text_count=1)
        wide = reference[128:384, :, :].copy()
        from relayer.plan_codec import serialize_plan
        from relayer.datagen import ocr_items_for_plan

        mock_suite.registry.register_image(wide, serialize_plan(plan),
                                           ocr_items_for_plan(plan))
        got, trace = run(PipelineRequest(mode="add_text_to_background",
                                         reference=wide, intention="t"),
                         mock_suite.gateway(), FirstCandidateSelector())
        assert got.canvas.size == (512, 256)
        assert trace.find("pad")

    def test_seed_reproducibility(self):
        a = run(PipelineRequest(mode="from_intention", intention="same"),
                MockSuite(seed=0).gateway(), FirstCandidateSelector())[0]
        b = run(PipelineRequest(mode="from_intention", intention="same"),
                MockSuite(seed=0).gateway(), FirstCandidateSelector())[0]
        assert designs_equal(a, b)


class TestTracePersistence:
    def test_save_trace_writes_json_and_pngs(self, tmp_path, mock_suite):
        design, plan, reference = register_fixture(mock_suite, seed=51,
                                                   object_count=1, text_count=1)
        got, trace = run(PipelineRequest(mode="derender", reference=reference),
                         mock_suite.gateway(), FirstCandidateSelector())
        save_trace(trace, tmp_path)
        payload = json.loads((tmp_path / "trace.json").read_text())
        assert {"stages", "timings"} <= set(payload)
        stages = [s["stage"] for s in payload["stages"]]
        assert "text_removal" in stages and "object_removal" in stages
        pngs = list(tmp_path.glob("*.png"))
        assert pngs
        # every referenced artifact exists
        for entry in payload["stages"]:
            for value in entry.values():
                names = value if isinstance(value, list) else [value]
                for name in names:
                    if isinstance(name, str) and name.endswith(".png"):
                        assert (tmp_path / name).exists()
