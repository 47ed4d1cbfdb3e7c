"""Backbone registry: preprocessing recipes, builders, embedding dims.

The declared dim is an architecture property and must match what the
model emits; export aborts otherwise. Weight resolution tries locally
cached checkpoints first ("auto") and falls back to seeded random
initialisation, which keeps dims, preprocessing and determinism intact
on hosts without a model cache. Random features are only useful for
pipeline and contract testing, not for detection quality, so the
fallback is logged loudly.
"""

import logging
import os
import zlib
from dataclasses import dataclass

import numpy as np

from .job import BackboneError

log = logging.getLogger("embed_export")

IMAGENET_MEAN = (0.485, 0.456, 0.406)
IMAGENET_STD = (0.229, 0.224, 0.225)
CLIP_MEAN = (0.48145466, 0.4578275, 0.40821073)
CLIP_STD = (0.26862954, 0.26130258, 0.27577711)


@dataclass(frozen=True)
class Recipe:
    """Resize-and-normalise parameters, recorded into the manifest."""

    resize_edge: int
    crop: int
    mean: tuple
    std: tuple

    def describe(self):
        return (
            f"shortest edge {self.resize_edge} bicubic, "
            f"center crop {self.crop}x{self.crop}"
        )


@dataclass(frozen=True)
class BackboneSpec:
    name: str
    dim: int
    family: str
    hub_id: str
    recipe: Recipe


_VIT_RECIPE = Recipe(256, 224, IMAGENET_MEAN, IMAGENET_STD)
_CLIP_RECIPE = Recipe(224, 224, CLIP_MEAN, CLIP_STD)
_CNN_RECIPE = Recipe(256, 224, IMAGENET_MEAN, IMAGENET_STD)

REGISTRY = {
    spec.name: spec
    for spec in (
        BackboneSpec("dinov2-small", 384, "dinov2", "facebook/dinov2-small", _VIT_RECIPE),
        BackboneSpec("dinov2-base", 768, "dinov2", "facebook/dinov2-base", _VIT_RECIPE),
        BackboneSpec("dinov2-large", 1024, "dinov2", "facebook/dinov2-large", _VIT_RECIPE),
        BackboneSpec("clip-vit-b16", 512, "clip", "openai/clip-vit-base-patch16", _CLIP_RECIPE),
        BackboneSpec("clip-vit-b32", 512, "clip", "openai/clip-vit-base-patch32", _CLIP_RECIPE),
        BackboneSpec("clip-vit-l14", 768, "clip", "openai/clip-vit-large-patch14", _CLIP_RECIPE),
        BackboneSpec("resnet50", 2048, "cnn", "resnet50", _CNN_RECIPE),
        BackboneSpec("mobilenet-v2", 1280, "cnn", "mobilenet_v2", _CNN_RECIPE),
        BackboneSpec("efficientnet-b0", 1280, "cnn", "efficientnet_b0", _CNN_RECIPE),
        BackboneSpec("densenet121", 1024, "cnn", "densenet121", _CNN_RECIPE),
        # tiny seeded projection with no model dependency; meant for
        # wiring tests and smoke runs, never for real features
        BackboneSpec("toy-8", 8, "toy", "", Recipe(32, 32, (0.5, 0.5, 0.5), (0.5, 0.5, 0.5))),
    )
}

# hidden size / depth / heads for building the ViT variants offline
_DINOV2_SHAPES = {
    "dinov2-small": (384, 12, 6),
    "dinov2-base": (768, 12, 12),
    "dinov2-large": (1024, 24, 16),
}
_CLIP_SHAPES = {
    # hidden, intermediate, depth, heads, patch, projection
    "clip-vit-b16": (768, 3072, 12, 12, 16, 512),
    "clip-vit-b32": (768, 3072, 12, 12, 32, 512),
    "clip-vit-l14": (1024, 4096, 24, 16, 14, 768),
}


def resolve(name):
    try:
        return REGISTRY[name]
    except KeyError:
        known = ", ".join(sorted(REGISTRY))
        raise BackboneError(f"unknown backbone {name!r}, expected one of {known}") from None


def load(spec, weights_mode, seed):
    """Return (embed_fn, weights_used).

    embed_fn maps a float32 batch of shape (B, 3, H, W), already
    resized and normalised, to a float32 array of shape (B, dim).
    weights_used is "pretrained" or "random".
    """
    if spec.family == "toy":
        if weights_mode == "pretrained":
            raise BackboneError(f"{spec.name} has no published weights")
        return _load_toy(spec, seed), "random"
    if spec.family == "dinov2":
        return _load_torch(spec, weights_mode, seed, _build_dinov2, _fetch_dinov2)
    if spec.family == "clip":
        return _load_torch(spec, weights_mode, seed, _build_clip, _fetch_clip)
    if spec.family == "cnn":
        return _load_torch(spec, weights_mode, seed, _build_cnn_random, _fetch_cnn)
    raise BackboneError(f"unknown backbone family {spec.family!r}")


def _load_torch(spec, weights_mode, seed, build_random, fetch_pretrained):
    if weights_mode in ("auto", "pretrained"):
        try:
            embed_fn = fetch_pretrained(spec)
            return embed_fn, "pretrained"
        except Exception as exc:
            if weights_mode == "pretrained":
                raise BackboneError(
                    f"cannot obtain pretrained weights for {spec.name}: {exc}"
                ) from None
            log.warning(
                "no cached checkpoint for %s; falling back to seeded random "
                "initialisation (features are for pipeline testing only)",
                spec.name,
            )
    return build_random(spec, seed), "random"


# --------------------------------------------------------------- families

def _to_numpy(tensor):
    return tensor.detach().cpu().numpy().astype(np.float32, copy=False)


def _load_toy(spec, seed):
    # fixed projection of the flattened pixels; 32x32x3 inputs
    rng = np.random.default_rng((seed, 0x70F))
    weight = rng.standard_normal((3 * 32 * 32, spec.dim)).astype(np.float32)
    weight /= np.sqrt(weight.shape[0])

    def embed(batch):
        flat = batch.reshape(batch.shape[0], -1)
        return (flat @ weight).astype(np.float32)

    return embed


def _wrap_forward(model, forward):
    import torch

    model.eval()

    def embed(batch):
        with torch.no_grad():
            return _to_numpy(forward(model, torch.from_numpy(batch)))

    return embed


def _build_dinov2(spec, seed):
    import torch
    from transformers import Dinov2Config, Dinov2Model

    hidden, depth, heads = _DINOV2_SHAPES[spec.name]
    config = Dinov2Config(
        hidden_size=hidden,
        intermediate_size=hidden * 4,
        num_hidden_layers=depth,
        num_attention_heads=heads,
        patch_size=14,
        image_size=spec.recipe.crop,
    )
    torch.manual_seed(_init_seed(spec, seed))
    return _wrap_forward(Dinov2Model(config), _dinov2_forward)


def _fetch_dinov2(spec):
    from transformers import Dinov2Model

    model = Dinov2Model.from_pretrained(spec.hub_id, local_files_only=True)
    return _wrap_forward(model, _dinov2_forward)


def _dinov2_forward(model, pixels):
    # pooler output is the class token after the final layer norm
    kwargs = {}
    if model.config.image_size != pixels.shape[-1]:
        kwargs["interpolate_pos_encoding"] = True
    return model(pixel_values=pixels, **kwargs).pooler_output


def _build_clip(spec, seed):
    import torch
    from transformers import CLIPVisionConfig, CLIPVisionModelWithProjection

    hidden, inter, depth, heads, patch, projection = _CLIP_SHAPES[spec.name]
    config = CLIPVisionConfig(
        hidden_size=hidden,
        intermediate_size=inter,
        num_hidden_layers=depth,
        num_attention_heads=heads,
        patch_size=patch,
        projection_dim=projection,
        image_size=spec.recipe.crop,
    )
    torch.manual_seed(_init_seed(spec, seed))
    return _wrap_forward(CLIPVisionModelWithProjection(config), _clip_forward)


def _fetch_clip(spec):
    from transformers import CLIPVisionModelWithProjection

    model = CLIPVisionModelWithProjection.from_pretrained(
        spec.hub_id, local_files_only=True
    )
    return _wrap_forward(model, _clip_forward)


def _clip_forward(model, pixels):
    return model(pixel_values=pixels).image_embeds


def _build_cnn_random(spec, seed):
    import torch

    torch.manual_seed(_init_seed(spec, seed))
    return _wrap_forward(_cnn_model(spec, weights=None), _cnn_forward)


def _fetch_cnn(spec):
    from torchvision import models

    enum = models.get_model_weights(spec.hub_id).DEFAULT
    filename = os.path.basename(enum.url)
    import torch

    cached = os.path.join(torch.hub.get_dir(), "checkpoints", filename)
    if not os.path.exists(cached):
        raise FileNotFoundError(f"no cached checkpoint at {cached}")
    return _wrap_forward(_cnn_model(spec, weights=enum), _cnn_forward)


def _cnn_model(spec, weights):
    import torch.nn as nn
    from torchvision import models

    model = getattr(models, spec.hub_id)(weights=weights)
    if spec.hub_id == "resnet50":
        model.fc = nn.Identity()
    return model


def _cnn_forward(model, pixels):
    import torch.nn.functional as F

    if hasattr(model, "features"):
        feats = model.features(pixels)
        if type(model).__name__ == "DenseNet":
            feats = F.relu(feats)
        return F.adaptive_avg_pool2d(feats, 1).flatten(1)
    return model(pixels)


def _init_seed(spec, seed):
    # distinct init streams per backbone under the same job seed; crc32
    # keeps this stable across processes, unlike hash()
    return (seed * 1_000_003 + zlib.crc32(spec.name.encode("utf-8"))) % (2**31)
