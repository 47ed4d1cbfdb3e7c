"""Run one export job: images in, embedding container out.

Rows land in sorted file order with an image's replicas consecutive,
whatever the batch size. All outputs are written only after the whole
tree has been embedded, so an aborted run leaves nothing behind.
"""

import logging
import os
from dataclasses import dataclass

import numpy as np
from PIL import Image, UnidentifiedImageError

from . import backbones, pade
from .augment import augment, replica_rng
from .discover import BONA_FIDE, discover
from .job import BackboneError, ExportError

log = logging.getLogger("embed_export")

EMBEDDINGS_NAME = "embeddings.pade"
MANIFEST_NAME = "manifest.csv"


@dataclass(frozen=True)
class ExportSummary:
    backbone: str
    dim: int
    weights: str
    images: int
    skipped: tuple
    replicas: int
    rows: int
    outputs: tuple


def export(job):
    spec = backbones.resolve(job.backbone)
    records = discover(job.input_dir)
    if not records:
        raise ExportError(f"no images found under {job.input_dir}")
    embed_fn, weights_used = backbones.load(spec, job.weights, job.seed)

    usable, skipped = [], []
    for record in records:
        try:
            image = _load_rgb(record.path)
        except ExportError as exc:
            log.warning("skipping unreadable image %s: %s", record.rel, exc)
            skipped.append(record.rel)
            continue
        usable.append((record, image))
    if not usable:
        raise ExportError(
            f"no readable images under {job.input_dir} "
            f"({len(skipped)} skipped)"
        )

    rows = _embed_all(usable, spec, embed_fn, job)

    multi = job.replicas > 1
    ids, labels = [], []
    for record, _ in usable:
        for replica in range(job.replicas):
            ids.append(f"{record.rel}#r{replica}" if multi else record.rel)
            labels.append((record.cls, record.species, record.split))

    os.makedirs(job.out_dir, exist_ok=True)
    container = os.path.join(job.out_dir, EMBEDDINGS_NAME)
    pade.write_container(container, rows, labels, comments=(f"seed: {job.seed}",))
    manifest = os.path.join(job.out_dir, MANIFEST_NAME)
    entries = [(i,) + triple for i, triple in zip(ids, labels)]
    pade.write_manifest(manifest, entries, comments=_audit(spec, job, weights_used))

    return ExportSummary(
        backbone=spec.name,
        dim=spec.dim,
        weights=weights_used,
        images=len(usable),
        skipped=tuple(skipped),
        replicas=job.replicas,
        rows=len(ids),
        outputs=(EMBEDDINGS_NAME, f"{EMBEDDINGS_NAME}.labels.csv", MANIFEST_NAME),
    )


def _embed_all(usable, spec, embed_fn, job):
    chunks = []
    batch, done = [], 0
    total = len(usable) * job.replicas

    def flush():
        nonlocal batch, done
        if not batch:
            return
        out = embed_fn(np.stack(batch))
        if out.ndim != 2 or out.shape[0] != len(batch):
            raise BackboneError(
                f"{spec.name} returned shape {out.shape} for a "
                f"batch of {len(batch)}"
            )
        if out.shape[1] != spec.dim:
            raise BackboneError(
                f"{spec.name} emitted dim {out.shape[1]}, declared {spec.dim}"
            )
        chunks.append(out.astype(np.float32, copy=False))
        done += len(batch)
        log.debug("embedded %d/%d", done, total)
        batch = []

    for record, image in usable:
        for replica in range(job.replicas):
            if replica == 0:
                view = image
            else:
                rng = replica_rng(job.seed, replica, record.rel)
                view = augment(image, job.augmentations, rng)
            batch.append(_preprocess(view, spec.recipe))
            if len(batch) >= job.batch_size:
                flush()
    flush()
    return np.vstack(chunks)


def _load_rgb(path):
    try:
        with Image.open(path) as image:
            return image.convert("RGB")
    except (UnidentifiedImageError, OSError, ValueError) as exc:
        raise ExportError(str(exc)) from None


def _preprocess(image, recipe):
    width, height = image.size
    scale = recipe.resize_edge / min(width, height)
    resized = (max(1, round(width * scale)), max(1, round(height * scale)))
    image = image.resize(resized, Image.Resampling.BICUBIC)
    left = (resized[0] - recipe.crop) // 2
    top = (resized[1] - recipe.crop) // 2
    image = image.crop((left, top, left + recipe.crop, top + recipe.crop))
    array = np.asarray(image, dtype=np.float32) / 255.0
    array = (array - np.asarray(recipe.mean, dtype=np.float32)) / np.asarray(
        recipe.std, dtype=np.float32
    )
    return array.transpose(2, 0, 1)


def _audit(spec, job, weights_used):
    augmentations = (
        ",".join(job.augmentations) if job.replicas > 1 else "none"
    )
    return (
        f"backbone: {spec.name}",
        f"weights: {weights_used}",
        f"resize: {spec.recipe.describe()}",
        "normalize: mean {} std {}".format(
            ",".join(str(v) for v in spec.recipe.mean),
            ",".join(str(v) for v in spec.recipe.std),
        ),
        f"seed: {job.seed}",
        f"replicas: {job.replicas}",
        f"augmentations: {augmentations}",
        # BLAS blocking depends on batch shape, so exact float repro
        # needs the same batch size, not only the same seed
        f"batch: {job.batch_size}",
        f"source: embed-export {spec.name}",
    )
