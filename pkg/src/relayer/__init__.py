"""relayer: unfold rasterized graphic designs into editable layered designs."""

__version__ = "0.1.0"

from .design_doc import (BoundingBox, Canvas, LayeredDesign, ObjectLayer,
                         QuantColor, TextLayer, composite, load_bundle,
                         save_bundle)
from .plan_codec import DesignPlan, PlanElement, parse_plan, serialize_plan

__all__ = [
    "BoundingBox", "Canvas", "LayeredDesign", "ObjectLayer", "QuantColor",
    "TextLayer", "composite", "load_bundle", "save_bundle",
    "DesignPlan", "PlanElement", "parse_plan", "serialize_plan",
]
