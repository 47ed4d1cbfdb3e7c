"""Experiment orchestration: dataset manifests, split construction,
single runs and model sweeps.

The Leave-One-Out split simulates an unknown attack: the held-out species
is removed from train and val entirely, and every one of its entries
(whatever split it came from) is tested against the designated bona fide
test entries.  The two-class split simply adopts the manifest's own
train/val/test partition.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .det import sweep_det
from .errors import AlignmentError, CoverageError, PadBenchError, ValidationError
from .head import SPLITS, EmbeddingTable, grid_search, predict_scores, train_head
from .metrics import BONA_FIDE, compute_report

__all__ = [
    "DatasetManifest",
    "ManifestEntry",
    "ProtocolSplit",
    "ResultRow",
    "attach_manifest",
    "build_loo_split",
    "build_two_class_split",
    "run_experiment",
    "run_benchmark",
]

ALL_ATTACKS = "all-attacks"


@dataclass(frozen=True)
class ManifestEntry:
    id: str
    cls: str  # "bona_fide" or "attack"; maps to the manifest's class column
    species: str
    split: str

    def __post_init__(self):
        if not self.id:
            raise ValidationError("entry ids must be non-empty")
        if self.cls not in (BONA_FIDE, "attack"):
            raise ValidationError(f"entry {self.id!r}: unknown class {self.cls!r}")
        if self.split not in SPLITS:
            raise ValidationError(f"entry {self.id!r}: unknown split {self.split!r}")
        if self.cls == BONA_FIDE and self.species != BONA_FIDE:
            raise ValidationError(
                f"entry {self.id!r}: bona fide entries use species {BONA_FIDE!r}"
            )
        if self.cls == "attack" and (not self.species or self.species == BONA_FIDE):
            raise ValidationError(
                f"entry {self.id!r}: attack entries need a species name"
            )


@dataclass(frozen=True)
class DatasetManifest:
    entries: tuple[ManifestEntry, ...]
    source: str = ""

    def __post_init__(self):
        entries = tuple(self.entries)
        if not entries:
            raise ValidationError("a manifest needs at least one entry")
        seen = set()
        for e in entries:
            if e.id in seen:
                raise ValidationError(f"duplicate manifest id {e.id!r}")
            seen.add(e.id)
        object.__setattr__(self, "entries", entries)

    def attack_species(self):
        return tuple(sorted({e.species for e in self.entries if e.cls == "attack"}))

    def ids(self):
        return tuple(e.id for e in self.entries)


@dataclass(frozen=True)
class ProtocolSplit:
    """Train/val/test id sets realizing one protocol configuration.

    The holder of the manifest guarantees the species-level constraints
    (no held-out id in train or val); this type enforces disjointness.
    """

    held_out: str | None
    train: frozenset[str]
    val: frozenset[str]
    test: frozenset[str]

    def __post_init__(self):
        object.__setattr__(self, "train", frozenset(self.train))
        object.__setattr__(self, "val", frozenset(self.val))
        object.__setattr__(self, "test", frozenset(self.test))
        if (
            self.train & self.val
            or self.train & self.test
            or self.val & self.test
        ):
            raise ValidationError("split id sets must be pairwise disjoint")
        if self.held_out is not None and not self.held_out:
            raise ValidationError("held_out must be a species name or None")


@dataclass(frozen=True)
class ResultRow:
    """One results-table line; metric fields are None for a failed run."""

    model: str
    protocol: str
    held_out: str
    eer: float | None
    bpcer10: float | None
    bpcer20: float | None
    bpcer100: float | None
    error: str = ""

    def __post_init__(self):
        if self.protocol not in ("loo", "two-class"):
            raise ValidationError(f"unknown protocol {self.protocol!r}")
        metrics = (self.eer, self.bpcer10, self.bpcer20, self.bpcer100)
        if self.error:
            if any(m is not None for m in metrics):
                raise ValidationError("a failed row must not carry metrics")
        else:
            for name, value in zip(
                ("eer", "bpcer10", "bpcer20", "bpcer100"), metrics
            ):
                if value is None or not 0.0 <= value <= 1.0:
                    raise ValidationError(f"{name} must lie in [0, 1]")


def build_loo_split(manifest, held_out):
    """Hold one species out of training entirely and test on all of it."""
    species = manifest.attack_species()
    if held_out not in species:
        raise ValidationError(
            f"unknown species {held_out!r}; manifest has {', '.join(species)}"
        )
    if len(species) < 2:
        raise ValidationError("the LOO protocol needs at least two species")
    train, val, test = set(), set(), set()
    for e in manifest.entries:
        if e.species == held_out:
            test.add(e.id)
        elif e.split == "train":
            train.add(e.id)
        elif e.split == "val":
            val.add(e.id)
        elif e.cls == BONA_FIDE:  # split == "test"
            test.add(e.id)
        # attack test entries of other species take no part in this run
    split = ProtocolSplit(
        held_out=held_out,
        train=frozenset(train),
        val=frozenset(val),
        test=frozenset(test),
    )
    _check_train_classes(manifest, split)
    return split


def build_two_class_split(manifest):
    """Adopt the manifest's own partition; all species stay in training."""
    by_split = {tag: set() for tag in SPLITS}
    for e in manifest.entries:
        by_split[e.split].add(e.id)
    for tag in SPLITS:
        if not by_split[tag]:
            raise ValidationError(f"manifest split {tag!r} is empty")
    split = ProtocolSplit(
        held_out=None,
        train=frozenset(by_split["train"]),
        val=frozenset(by_split["val"]),
        test=frozenset(by_split["test"]),
    )
    _check_train_classes(manifest, split)
    return split


def _check_train_classes(manifest, split):
    classes = {e.cls for e in manifest.entries if e.id in split.train}
    if BONA_FIDE not in classes:
        raise ValidationError("resulting train split has no bona fide entries")
    if "attack" not in classes:
        raise ValidationError("resulting train split has no attack entries")


def attach_manifest(table, manifest):
    """Bind manifest ids to table rows by position.

    Entry i describes row i; class, species and split must agree row by
    row, otherwise the offending rows are listed.
    """
    if table.n_rows != len(manifest.entries):
        raise AlignmentError(
            f"table has {table.n_rows} rows but manifest has "
            f"{len(manifest.entries)} entries"
        )
    offenders = []
    for i, e in enumerate(manifest.entries):
        label = 0 if e.cls == BONA_FIDE else 1
        if (
            int(table.labels[i]) != label
            or table.species[i] != e.species
            or table.split[i] != e.split
        ):
            offenders.append(i)
    if offenders:
        head, extra = offenders[:10], len(offenders) - min(len(offenders), 10)
        more = f" and {extra} more" if extra else ""
        raise AlignmentError(
            f"rows disagree with manifest entries at indices {head}{more}"
        )
    return EmbeddingTable(
        rows=table.rows,
        labels=table.labels,
        species=table.species,
        split=table.split,
        ids=tuple(e.id for e in manifest.entries),
    )


def _subset_for_split(table, split):
    """Rows of the table that play a role in the split, retagged by role."""
    if table.ids is None:
        raise ValidationError(
            "table carries no ids; attach a manifest before running protocols"
        )
    present = set(table.ids)
    missing = sorted((split.train | split.val | split.test) - present)
    if missing:
        head = ", ".join(missing[:10])
        more = f" and {len(missing) - 10} more" if len(missing) > 10 else ""
        raise CoverageError(f"table is missing split ids: {head}{more}")
    indices, tags = [], []
    for i, rid in enumerate(table.ids):
        if rid in split.train:
            indices.append(i)
            tags.append("train")
        elif rid in split.val:
            indices.append(i)
            tags.append("val")
        elif rid in split.test:
            indices.append(i)
            tags.append("test")
    return table.take(np.array(indices, dtype=np.int64), split=tags)


def run_experiment(
    table,
    split,
    config,
    *,
    model="model",
    lr_grid=None,
    threshold_source="test",
    backend=None,
):
    """Train on the split, score its test role and summarize.

    With lr_grid, a validation grid search picks the learning rate first.
    threshold_source="val" takes the operating threshold from validation
    scores instead of the test sweep.  Returns (ResultRow, MetricsReport,
    DetCurve).
    """
    if threshold_source not in ("test", "val"):
        raise ValidationError("threshold_source must be 'test' or 'val'")
    sub = _subset_for_split(table, split)
    final_config = config
    if lr_grid is not None:
        final_config, _ = grid_search(sub, lr_grid, config, backend=backend)
    head = train_head(sub, final_config, backend=backend)
    test_scores = predict_scores(head, sub, "test")
    threshold_set = None
    if threshold_source == "val":
        threshold_set = predict_scores(head, sub, "val")
    report = compute_report(test_scores, threshold_set=threshold_set)
    curve = sweep_det(test_scores.bona_fide, test_scores.pooled_attacks())
    row = ResultRow(
        model=model,
        protocol="loo" if split.held_out is not None else "two-class",
        held_out=split.held_out if split.held_out is not None else ALL_ATTACKS,
        eer=report.eer,
        bpcer10=report.bpcer10,
        bpcer20=report.bpcer20,
        bpcer100=report.bpcer100,
    )
    return row, report, curve


def _benchmark_task(payload):
    model, table, manifest, split, config, lr_grid, threshold_source = payload
    protocol = "loo" if split.held_out is not None else "two-class"
    held_out = split.held_out if split.held_out is not None else ALL_ATTACKS
    try:
        row, _, _ = run_experiment(
            attach_manifest(table, manifest),
            split,
            config,
            model=model,
            lr_grid=lr_grid,
            threshold_source=threshold_source,
        )
        return row
    except PadBenchError as exc:
        return ResultRow(
            model=model,
            protocol=protocol,
            held_out=held_out,
            eer=None,
            bpcer10=None,
            bpcer20=None,
            bpcer100=None,
            error=str(exc),
        )


def run_benchmark(
    tables,
    manifest,
    protocol,
    config,
    *,
    lr_grid=None,
    jobs=1,
    threshold_source="test",
):
    """One ResultRow per (model, experiment), ordered by model then species.

    Failures of individual runs become rows with an error message instead
    of aborting the sweep.  With jobs > 1 experiments run in separate
    processes; the output order never depends on completion order.
    """
    if jobs < 1:
        raise ValidationError("jobs must be at least 1")
    if protocol == "loo-all-species":
        splits = [
            build_loo_split(manifest, name) for name in manifest.attack_species()
        ]
    elif protocol == "two-class":
        splits = [build_two_class_split(manifest)]
    else:
        raise ValidationError(
            f"unknown protocol {protocol!r}; "
            "expected 'loo-all-species' or 'two-class'"
        )
    payloads = [
        (model, tables[model], manifest, split, config,
         lr_grid, threshold_source)
        for model in sorted(tables)
        for split in splits
    ]
    if jobs == 1:
        return [_benchmark_task(p) for p in payloads]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_benchmark_task, payloads))
