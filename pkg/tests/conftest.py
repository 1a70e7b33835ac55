import numpy as np
import pytest

from relayer.datagen import SyntheticDesignSpec, ocr_items_for_plan, synth_design
from relayer.design_doc import composite
from relayer.experts import MockSuite
from relayer.plan_codec import serialize_plan
from relayer.text_render import FontCatalog


@pytest.fixture(scope="session")
def catalog():
    return FontCatalog.default()


@pytest.fixture
def mock_suite():
    return MockSuite(seed=0)


@pytest.fixture
def gateway(mock_suite):
    return mock_suite.gateway()


def register_fixture(suite, seed=0, **spec_kwargs):
    """Synthesize a design, register its composite with the mock suite,
    and return (design, plan, reference)."""
    design, plan = synth_design(SyntheticDesignSpec(seed=seed, **spec_kwargs))
    reference = composite(design)
    suite.registry.register_image(reference, serialize_plan(plan),
                                  ocr_items_for_plan(plan))
    return design, plan, reference


@pytest.fixture
def fixture_factory(mock_suite):
    def make(seed=0, **kwargs):
        return register_fixture(mock_suite, seed=seed, **kwargs)

    return make


def solid_raster(w, h, color=(255, 255, 255, 255)):
    img = np.empty((h, w, 4), dtype=np.uint8)
    img[:] = color
    return img
