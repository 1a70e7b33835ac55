from .gateway import (ExpertEndpoint, ExpertGateway, HttpBackend, OcrResult,
                      RemovalBatch, load_gateway, resize_to_longer_side)
from .mocks import FixtureRegistry, MockSuite

__all__ = [
    "ExpertEndpoint", "ExpertGateway", "HttpBackend", "OcrResult",
    "RemovalBatch", "load_gateway", "resize_to_longer_side",
    "FixtureRegistry", "MockSuite",
]
