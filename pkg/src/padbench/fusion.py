"""Score-level fusion of detectors by per-presentation averaging.

Inputs are aligned by presentation id and must agree on every id's class
and species; the fused score is the unweighted mean of the detectors'
scores for that presentation.  Averaging sigmoid outputs needs no
normalization, but min-max normalization of each input set is available
as an explicit opt-in.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import AlignmentError, ValidationError
from .metrics import MetricsReport, ScoreSet, compute_report

__all__ = ["FusedScoreSet", "FusionComparison", "fuse_average", "fuse_mean",
           "evaluate_fusion"]


@dataclass(frozen=True)
class FusedScoreSet(ScoreSet):
    """A ScoreSet that remembers which detectors it was averaged from."""

    provenance: tuple[str, ...] = ()


def _id_map(score_set):
    """id -> (species-or-None, score) over the whole set."""
    table = {}
    for i, s in zip(score_set.bona_fide_ids, score_set.bona_fide):
        table[i] = (None, float(s))
    for name in score_set.species:
        for i, s in zip(score_set.attack_ids[name], score_set.attacks[name]):
            table[i] = (name, float(s))
    return table


def _normalized(score_set):
    """Min-max normalize the pooled scores of one set (opt-in path)."""
    pooled = np.concatenate([score_set.bona_fide, score_set.pooled_attacks()])
    low, high = float(pooled.min()), float(pooled.max())
    if high == low:
        # a constant detector carries no ranking information; park it at
        # the midpoint so it cannot dominate the average
        transform = lambda arr: np.full_like(arr, 0.5)
    else:
        transform = lambda arr: (arr - low) / (high - low)
    return ScoreSet(
        bona_fide=transform(score_set.bona_fide),
        attacks={n: transform(score_set.attacks[n]) for n in score_set.species},
        bona_fide_ids=score_set.bona_fide_ids,
        attack_ids=score_set.attack_ids,
    )


def fuse_mean(score_sets, *, names=None, normalize=False):
    """Unweighted per-id mean of two or more aligned score sets."""
    sets = list(score_sets)
    if len(sets) < 2:
        raise ValidationError("fusion needs at least two score sets")
    if names is None:
        names = tuple(f"detector-{i}" for i in range(len(sets)))
    names = tuple(names)
    if len(names) != len(sets):
        raise ValidationError("names must match the number of score sets")
    if normalize:
        sets = [_normalized(s) for s in sets]

    first = sets[0]
    maps = [_id_map(s) for s in sets]
    for name, other in zip(names[1:], maps[1:]):
        only_first = sorted(set(maps[0]) - set(other))
        only_other = sorted(set(other) - set(maps[0]))
        if only_first or only_other:
            raise AlignmentError(
                f"{names[0]!r} and {name!r} cover different ids; "
                f"first-only {only_first[:10]}, other-only {only_other[:10]}"
            )
        disagree = sorted(
            i for i, (sp, _) in maps[0].items() if other[i][0] != sp
        )
        if disagree:
            raise AlignmentError(
                f"{names[0]!r} and {name!r} disagree on the class or species "
                f"of ids {disagree[:10]}"
            )

    def fused_for(ids):
        return np.array(
            [sum(m[i][1] for m in maps) / len(maps) for i in ids]
        )

    return FusedScoreSet(
        bona_fide=fused_for(first.bona_fide_ids),
        attacks={
            n: fused_for(first.attack_ids[n]) for n in first.species
        },
        bona_fide_ids=first.bona_fide_ids,
        attack_ids=first.attack_ids,
        provenance=names,
    )


def fuse_average(a, b, *, names=("a", "b"), normalize=False):
    """Per-id average of two detectors' scores."""
    return fuse_mean((a, b), names=names, normalize=normalize)


@dataclass(frozen=True)
class FusionComparison:
    """Reports for both inputs and their fusion.

    improved is set when the fused EER undercuts both individual EERs.
    """

    names: tuple[str, str]
    report_a: MetricsReport
    report_b: MetricsReport
    report_fused: MetricsReport
    fused: FusedScoreSet = field(repr=False)
    improved: bool = False


def evaluate_fusion(a, b, *, names=("a", "b"), normalize=False):
    """Metrics for a, b and their average, with the improvement flag."""
    fused = fuse_average(a, b, names=names, normalize=normalize)
    report_a = compute_report(a)
    report_b = compute_report(b)
    report_fused = compute_report(fused)
    return FusionComparison(
        names=tuple(names),
        report_a=report_a,
        report_b=report_b,
        report_fused=report_fused,
        fused=fused,
        improved=report_fused.eer < min(report_a.eer, report_b.eer),
    )
