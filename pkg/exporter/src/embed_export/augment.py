"""Deterministic image augmentations.

Each augmented replica draws one operation and its parameters from a
stream seeded by (seed, replica, image id), so the result depends only
on the job seed and the image, never on discovery or execution order.
"""

import zlib

import numpy as np
from PIL import Image, ImageEnhance, ImageFilter

from .job import ExportError

_TURNS = (
    Image.Transpose.ROTATE_90,
    Image.Transpose.ROTATE_180,
    Image.Transpose.ROTATE_270,
)


def replica_rng(seed, replica, image_id):
    crc = zlib.crc32(image_id.encode("utf-8"))
    return np.random.default_rng((seed, replica, crc))


def augment(image, operations, rng):
    """Apply one operation drawn from the enabled set.

    An empty set returns the image untouched; callers that want clean
    replicas simply pass no operations.
    """
    if not operations:
        return image
    op = operations[int(rng.integers(len(operations)))]
    if op == "illumination":
        return ImageEnhance.Brightness(image).enhance(float(rng.uniform(0.6, 1.4)))
    if op == "rotate90":
        return image.transpose(_TURNS[int(rng.integers(3))])
    if op == "blur":
        return image.filter(ImageFilter.GaussianBlur(float(rng.uniform(0.5, 2.0))))
    if op == "jitter":
        image = ImageEnhance.Brightness(image).enhance(float(rng.uniform(0.8, 1.2)))
        image = ImageEnhance.Contrast(image).enhance(float(rng.uniform(0.8, 1.2)))
        return ImageEnhance.Color(image).enhance(float(rng.uniform(0.8, 1.2)))
    raise ExportError(f"unknown augmentation {op!r}")
