"""Walk the <class>/<species>/<split>/* image tree.

Labels come from the directory names alone. Bona fide species
directories are collapsed to the canonical bona label because the
downstream container has no species notion for bona fide rows.
"""

import logging
import os
from dataclasses import dataclass

from .job import LayoutError

log = logging.getLogger("embed_export")

BONA_FIDE = "bona_fide"
CLASSES = (BONA_FIDE, "attack")
SPLITS = ("train", "val", "test")
IMAGE_EXTENSIONS = (".bmp", ".jpeg", ".jpg", ".png", ".webp")


@dataclass(frozen=True)
class ImageRecord:
    path: str
    rel: str
    cls: str
    species: str
    split: str


def discover(input_dir):
    """All image records under input_dir, sorted by relative path."""
    if not os.path.isdir(input_dir):
        raise LayoutError(f"input directory {input_dir} does not exist")
    records = []
    for cls in _subdirs(input_dir):
        if cls not in CLASSES:
            raise LayoutError(
                f"unknown class directory {cls!r} under {input_dir}, "
                f"expected one of {', '.join(CLASSES)}"
            )
        cls_dir = os.path.join(input_dir, cls)
        for species in _subdirs(cls_dir):
            if cls == "attack" and species == BONA_FIDE:
                raise LayoutError(
                    f"attack species directory must not be named {BONA_FIDE!r} "
                    f"({os.path.join(cls_dir, species)})"
                )
            species_dir = os.path.join(cls_dir, species)
            for split in _subdirs(species_dir):
                if split not in SPLITS:
                    raise LayoutError(
                        f"unknown split directory {split!r} under {species_dir}, "
                        f"expected one of {', '.join(SPLITS)}"
                    )
                split_dir = os.path.join(species_dir, split)
                for name in sorted(os.listdir(split_dir)):
                    path = os.path.join(split_dir, name)
                    if not os.path.isfile(path):
                        continue
                    if not name.lower().endswith(IMAGE_EXTENSIONS):
                        continue
                    rel = "/".join((cls, species, split, name))
                    if name.startswith((".", "#")):
                        # a leading '#' would turn the manifest row into
                        # a comment line downstream
                        log.warning("skipping hidden or unrepresentable file %s", rel)
                        continue
                    records.append(
                        ImageRecord(
                            path=path,
                            rel=rel,
                            cls=cls,
                            species=BONA_FIDE if cls == BONA_FIDE else species,
                            split=split,
                        )
                    )
    records.sort(key=lambda r: r.rel)
    return records


def _subdirs(path):
    return sorted(
        name for name in os.listdir(path)
        if os.path.isdir(os.path.join(path, name)) and not name.startswith(".")
    )
