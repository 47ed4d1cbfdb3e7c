"""Vision-backbone embedding exporter for the PADE container format."""

from .backbones import REGISTRY, BackboneSpec, Recipe, resolve
from .discover import ImageRecord, discover
from .export import ExportSummary, export
from .job import (
    AUGMENTATIONS,
    WEIGHT_MODES,
    BackboneError,
    ExportError,
    ExportJob,
    LayoutError,
)

__all__ = [
    "AUGMENTATIONS",
    "BackboneError",
    "BackboneSpec",
    "ExportError",
    "ExportJob",
    "ExportSummary",
    "ImageRecord",
    "LayoutError",
    "REGISTRY",
    "Recipe",
    "WEIGHT_MODES",
    "discover",
    "export",
    "resolve",
]
