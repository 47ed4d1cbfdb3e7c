"""Export job description and the exporter's error types."""

from dataclasses import dataclass

AUGMENTATIONS = ("illumination", "rotate90", "blur", "jitter")
WEIGHT_MODES = ("auto", "pretrained", "random")


class ExportError(Exception):
    """Base class for every anticipated exporter failure."""


class LayoutError(ExportError):
    """Input tree does not follow <class>/<species>/<split>/*."""


class BackboneError(ExportError):
    """Unknown backbone, unobtainable weights, or an embedding dim breach."""


@dataclass(frozen=True)
class ExportJob:
    """Everything one export run needs.

    replicas is the row multiplier per image: replica 0 is the clean
    pass, replicas 1 and up each draw one augmentation. weights picks
    how backbone parameters are obtained; "auto" falls back to seeded
    random initialisation when no checkpoint is cached locally.
    """

    backbone: str
    input_dir: str
    out_dir: str
    replicas: int = 1
    augmentations: tuple = AUGMENTATIONS
    seed: int = 0
    weights: str = "auto"
    batch_size: int = 8

    def __post_init__(self):
        if self.replicas < 1:
            raise ExportError(f"replicas must be at least 1, got {self.replicas}")
        if self.batch_size < 1:
            raise ExportError(f"batch size must be at least 1, got {self.batch_size}")
        if self.weights not in WEIGHT_MODES:
            raise ExportError(
                f"unknown weights mode {self.weights!r}, "
                f"expected one of {', '.join(WEIGHT_MODES)}"
            )
        bad = [a for a in self.augmentations if a not in AUGMENTATIONS]
        if bad:
            raise ExportError(
                f"unknown augmentation {bad[0]!r}, "
                f"expected one of {', '.join(AUGMENTATIONS)}"
            )
        if self.replicas > 1 and not self.augmentations:
            raise ExportError(
                "replicas above 1 need at least one augmentation, "
                "otherwise the extra rows are exact duplicates"
            )
        object.__setattr__(self, "augmentations", tuple(self.augmentations))
