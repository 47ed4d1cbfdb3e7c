"""Synthetic embedding datasets with closed-form separability.

Bona fide rows are isotropic unit-variance Gaussians at the origin; each
attack species sits at distance d' along its own unit direction.  The
Bayes-optimal detector is then a linear projection, so a linear probe can
approach the analytic EER of Phi(-d'/2), which makes these datasets the
ground truth the private corpora cannot provide.

Splits are assigned round-robin by generation index within each class
group (6 train, 2 val, 2 test out of every 10) for exact reproducibility.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import FormatError, ValidationError
from .head import EmbeddingTable
from .metrics import BONA_FIDE
from .protocol import DatasetManifest, ManifestEntry

__all__ = ["SpeciesSpec", "SynthSpec", "generate", "analytic_eer", "parse_spec"]

_SPLIT_CYCLE = ("train",) * 6 + ("val",) * 2 + ("test",) * 2


@dataclass(frozen=True)
class SpeciesSpec:
    count: int
    d_prime: float
    direction: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.count < 1:
            raise ValidationError("species count must be at least 1")
        if not (self.d_prime >= 0 and math.isfinite(self.d_prime)):
            raise ValidationError("d_prime must be finite and non-negative")
        if self.direction is not None:
            direction = tuple(float(x) for x in self.direction)
            if not all(math.isfinite(x) for x in direction):
                raise ValidationError("direction must be finite")
            if not any(x != 0.0 for x in direction):
                raise ValidationError("direction must be non-zero")
            object.__setattr__(self, "direction", direction)


@dataclass(frozen=True)
class SynthSpec:
    dim: int
    n_bona_fide: int
    species: dict[str, SpeciesSpec]
    seed: int

    def __post_init__(self):
        if self.dim < 1:
            raise ValidationError("dim must be at least 1")
        if self.n_bona_fide < 1:
            raise ValidationError("n_bona_fide must be at least 1")
        if not self.species:
            raise ValidationError("at least one species is required")
        for name, spec in self.species.items():
            if not name or name == BONA_FIDE:
                raise ValidationError(f"invalid species name {name!r}")
            if spec.direction is not None and len(spec.direction) != self.dim:
                raise ValidationError(
                    f"species {name!r} direction must have length {self.dim}"
                )
        if not 0 <= self.seed < 2**64:
            raise ValidationError("seed must fit in 64 unsigned bits")
        object.__setattr__(self, "species", dict(self.species))


def parse_spec(text, *, seed_override=None):
    """Parse a SynthSpec from its JSON document form.

    Expected shape: {"dim": D, "seed": S, "bona_fide": N,
    "species": {name: {"count": N, "d_prime": X, "direction": [...]?}}}.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"invalid JSON at line {exc.lineno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise FormatError("spec document must be a JSON object")
    unknown = set(doc) - {"dim", "seed", "bona_fide", "species"}
    if unknown:
        raise FormatError(f"unknown spec fields {sorted(unknown)}")
    try:
        dim = doc["dim"]
        n_bona = doc["bona_fide"]
        species_doc = doc["species"]
        seed = doc.get("seed", 0)
    except KeyError as exc:
        raise FormatError(f"spec is missing field {exc.args[0]!r}") from None
    if not isinstance(species_doc, dict):
        raise FormatError("spec field 'species' must be an object")
    if not all(
        isinstance(v, int) and not isinstance(v, bool) for v in (dim, n_bona, seed)
    ):
        raise FormatError("spec fields dim, bona_fide and seed must be integers")
    species = {}
    for name, entry in species_doc.items():
        if not isinstance(entry, dict):
            raise FormatError(f"species {name!r} must be an object")
        bad = set(entry) - {"count", "d_prime", "direction"}
        if bad:
            raise FormatError(f"species {name!r} has unknown fields {sorted(bad)}")
        if "count" not in entry or "d_prime" not in entry:
            raise FormatError(f"species {name!r} needs count and d_prime")
        if not isinstance(entry["count"], int) or isinstance(entry["count"], bool):
            raise FormatError(f"species {name!r} count must be an integer")
        if not isinstance(entry["d_prime"], (int, float)) or isinstance(
            entry["d_prime"], bool
        ):
            raise FormatError(f"species {name!r} d_prime must be a number")
        direction = entry.get("direction")
        if direction is not None:
            if not (
                isinstance(direction, list)
                and all(
                    isinstance(x, (int, float)) and not isinstance(x, bool)
                    for x in direction
                )
            ):
                raise FormatError(f"species {name!r} direction must be numbers")
            direction = tuple(float(x) for x in direction)
        try:
            species[name] = SpeciesSpec(
                count=entry["count"],
                d_prime=float(entry["d_prime"]),
                direction=direction,
            )
        except ValidationError as exc:
            raise FormatError(f"species {name!r}: {exc}") from None
    try:
        return SynthSpec(
            dim=dim,
            n_bona_fide=n_bona,
            species=species,
            seed=seed if seed_override is None else seed_override,
        )
    except ValidationError as exc:
        raise FormatError(f"invalid spec: {exc}") from None


def generate(spec):
    """Deterministic (EmbeddingTable, DatasetManifest) pair for the spec.

    Row order is the bona fide block followed by species blocks in sorted
    name order; the generator stream is consumed in that same order
    (direction first when one is not pinned, then the rows).
    """
    rng = np.random.default_rng(spec.seed)
    blocks = [rng.standard_normal((spec.n_bona_fide, spec.dim))]
    names = [BONA_FIDE]
    for name in sorted(spec.species):
        sp = spec.species[name]
        if sp.direction is None:
            vec = rng.standard_normal(spec.dim)
        else:
            vec = np.array(sp.direction, dtype=np.float64)
        unit = vec / np.linalg.norm(vec)
        blocks.append(
            rng.standard_normal((sp.count, spec.dim)) + sp.d_prime * unit
        )
        names.append(name)

    rows = np.concatenate(blocks).astype(np.float32)
    labels, species, split, entries = [], [], [], []
    for block, name in zip(blocks, names):
        for i in range(block.shape[0]):
            tag = _SPLIT_CYCLE[i % len(_SPLIT_CYCLE)]
            labels.append(0 if name == BONA_FIDE else 1)
            species.append(name)
            split.append(tag)
            entries.append(
                ManifestEntry(
                    id=f"{name}-{i:06d}",
                    cls=BONA_FIDE if name == BONA_FIDE else "attack",
                    species=name,
                    split=tag,
                )
            )
    manifest = DatasetManifest(entries=tuple(entries), source="synthetic")
    table = EmbeddingTable(
        rows=rows,
        labels=np.array(labels, dtype=np.uint8),
        species=tuple(species),
        split=tuple(split),
        ids=tuple(e.id for e in entries),
    )
    return table, manifest


def analytic_eer(d_prime):
    """Phi(-d'/2): the EER of two unit-variance Gaussians d' apart."""
    if not (isinstance(d_prime, (int, float)) and math.isfinite(d_prime)):
        raise ValidationError("d_prime must be a finite number")
    if d_prime < 0:
        raise ValidationError("d_prime must be non-negative")
    return 0.5 * math.erfc(d_prime / (2.0 * math.sqrt(2.0)))
