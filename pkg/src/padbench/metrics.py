"""Presentation-attack-detection error rates computed from labeled scores.

Scores are oriented so that higher means more attack-like, and a
presentation is classified as an attack at threshold t exactly when its
score is >= t (the boundary counts as attack).  APCER is the fraction of
attack presentations of one species classified as bona fide; BPCER is the
fraction of bona fide presentations classified as attacks.

All operations are pure functions of their inputs and safe to call from
multiple threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError

__all__ = [
    "ScoreSet",
    "MetricsReport",
    "classify",
    "apcer",
    "bpcer",
    "worst_case_apcer",
    "eer",
    "bpcer_at_apcer",
    "compute_report",
]

BONA_FIDE = "bona_fide"

# APCER targets behind the BPCER10 / BPCER20 / BPCER100 operating points.
BPCER_TARGETS = {"bpcer10": 0.10, "bpcer20": 0.05, "bpcer100": 0.01}


def _as_scores(values, name):
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1:
        raise ValidationError(f"{name} must be a one-dimensional score list")
    if arr.size == 0:
        raise ValidationError(f"{name} must contain at least one score")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} contains non-finite scores")
    if arr.min() < 0.0 or arr.max() > 1.0:
        raise ValidationError(f"{name} contains scores outside [0, 1]")
    return arr


def _check_threshold(threshold):
    if not math.isfinite(threshold):
        raise ValidationError("threshold must be finite")
    return float(threshold)


@dataclass(frozen=True)
class ScoreSet:
    """Detector scores grouped into bona fide and per-species attacks.

    Every group carries a parallel tuple of presentation ids; generated
    placeholder ids are filled in when none are supplied, so that any two
    sets built the same way align.  Ids must be unique across the whole
    set.  Arrays are copied on construction and should be treated as
    read-only afterwards.
    """

    bona_fide: np.ndarray
    attacks: dict[str, np.ndarray]
    bona_fide_ids: tuple[str, ...] = ()
    attack_ids: dict[str, tuple[str, ...]] = field(default_factory=dict)

    def __post_init__(self):
        bona = _as_scores(self.bona_fide, "bona_fide scores").copy()
        bona.setflags(write=False)
        object.__setattr__(self, "bona_fide", bona)
        if not self.attacks:
            raise ValidationError("at least one attack species is required")
        attacks = {}
        for name, scores in self.attacks.items():
            if not isinstance(name, str) or not name:
                raise ValidationError("species names must be non-empty strings")
            if name == BONA_FIDE:
                raise ValidationError(f"{BONA_FIDE!r} is not a valid species name")
            arr = _as_scores(scores, f"species {name!r} scores").copy()
            arr.setflags(write=False)
            attacks[name] = arr
        object.__setattr__(self, "attacks", attacks)
        unknown = set(self.attack_ids) - set(attacks)
        if unknown:
            raise ValidationError(f"attack_ids name unknown species {sorted(unknown)}")

        bona_ids = tuple(self.bona_fide_ids) or tuple(
            f"{BONA_FIDE}-{i:06d}" for i in range(bona.size)
        )
        if len(bona_ids) != bona.size:
            raise ValidationError("bona_fide_ids length does not match scores")
        attack_ids = {}
        for name, arr in attacks.items():
            ids = tuple(self.attack_ids.get(name, ()))
            if not ids:
                ids = tuple(f"{name}-{i:06d}" for i in range(arr.size))
            if len(ids) != arr.size:
                raise ValidationError(f"attack_ids for {name!r} do not match scores")
            attack_ids[name] = ids
        object.__setattr__(self, "bona_fide_ids", bona_ids)
        object.__setattr__(self, "attack_ids", attack_ids)

        seen = set()
        for i in self.iter_ids():
            if i in seen:
                raise ValidationError(f"duplicate presentation id {i!r}")
            seen.add(i)

    @property
    def species(self):
        return tuple(sorted(self.attacks))

    def pooled_attacks(self):
        return np.concatenate([self.attacks[s] for s in self.species])

    def iter_ids(self):
        yield from self.bona_fide_ids
        for name in self.species:
            yield from self.attack_ids[name]


@dataclass(frozen=True)
class MetricsReport:
    """Operating-point summary for one evaluated score set.

    per_pais_apcer and worst_case_apcer are taken at eer_threshold; the
    bpcerN fields are threshold sweeps of their own and do not depend on
    it.
    """

    eer: float
    eer_threshold: float
    bpcer10: float
    bpcer20: float
    bpcer100: float
    per_pais_apcer: dict[str, float]
    worst_case_apcer: float

    def __post_init__(self):
        for name in ("eer", "bpcer10", "bpcer20", "bpcer100", "worst_case_apcer"):
            value = getattr(self, name)
            if not (0.0 <= value <= 1.0):
                raise ValidationError(f"{name} must lie in [0, 1], got {value}")
        for name, value in self.per_pais_apcer.items():
            if not (0.0 <= value <= 1.0):
                raise ValidationError(f"APCER for {name!r} must lie in [0, 1]")
        if self.per_pais_apcer and self.worst_case_apcer != max(
            self.per_pais_apcer.values()
        ):
            raise ValidationError("worst_case_apcer must be the per-species maximum")

    def to_dict(self):
        return {
            "eer": self.eer,
            "eer_threshold": self.eer_threshold,
            "bpcer10": self.bpcer10,
            "bpcer20": self.bpcer20,
            "bpcer100": self.bpcer100,
            "per_pais_apcer": dict(sorted(self.per_pais_apcer.items())),
            "worst_case_apcer": self.worst_case_apcer,
        }


def classify(score, threshold):
    """1 if the score is classified as an attack presentation, else 0."""
    if not math.isfinite(score):
        raise ValidationError("score must be finite")
    return 1 if score >= _check_threshold(threshold) else 0


def apcer(attack_scores, threshold):
    arr = _as_scores(attack_scores, "attack scores")
    t = _check_threshold(threshold)
    return float(1.0 - np.count_nonzero(arr >= t) / arr.size)


def bpcer(bona_fide_scores, threshold):
    arr = _as_scores(bona_fide_scores, "bona_fide scores")
    t = _check_threshold(threshold)
    return float(np.count_nonzero(arr >= t) / arr.size)


def worst_case_apcer(score_set, threshold):
    return max(apcer(score_set.attacks[s], threshold) for s in score_set.species)


def _candidate_thresholds(pooled):
    u = np.unique(pooled)
    return np.concatenate(([u[0] - 1.0], (u[:-1] + u[1:]) / 2.0, [u[-1] + 1.0]))


def _sweep(bona_fide, pooled_attacks):
    """APCER/BPCER over the candidate threshold grid (ascending)."""
    bona = _as_scores(bona_fide, "bona_fide scores")
    attacks = _as_scores(pooled_attacks, "attack scores")
    cands = _candidate_thresholds(np.concatenate((bona, attacks)))
    apcer_c = np.searchsorted(np.sort(attacks), cands, side="left") / attacks.size
    bpcer_c = (
        bona.size - np.searchsorted(np.sort(bona), cands, side="left")
    ) / bona.size
    return cands, apcer_c, bpcer_c


def eer(bona_fide, pooled_attacks):
    """Equal error rate and its threshold by exhaustive enumeration.

    The threshold minimizing |APCER - BPCER| over the candidate grid wins;
    ties go to the lower BPCER, then to the lower threshold.  Returns
    (eer, threshold) where eer is the midpoint of the two rates.
    """
    bona = _as_scores(bona_fide, "bona_fide scores")
    attacks = _as_scores(pooled_attacks, "attack scores")
    cands = _candidate_thresholds(np.concatenate((bona, attacks)))
    n, m = attacks.size, bona.size
    miss = np.searchsorted(np.sort(attacks), cands, side="left")
    flag = m - np.searchsorted(np.sort(bona), cands, side="left")
    # |APCER - BPCER| compared as |miss*m - flag*n| over the common
    # denominator n*m: integer arithmetic keeps tied rationals tied, which
    # float rates cannot guarantee
    diff = np.abs(miss * m - flag * n)
    # sort by |diff| then BPCER; stability keeps the lowest threshold on ties
    best = np.lexsort((flag, diff))[0]
    return float((miss[best] / n + flag[best] / m) / 2.0), float(cands[best])


def bpcer_at_apcer(bona_fide, pooled_attacks, target_apcer):
    """BPCER at the largest candidate threshold whose APCER stays strictly
    below the target.

    The below-minimum sentinel threshold has APCER 0, so a qualifying
    threshold exists for every positive target.
    """
    if not (isinstance(target_apcer, (int, float)) and math.isfinite(target_apcer)):
        raise ValidationError("target_apcer must be a finite number")
    if not 0.0 < target_apcer < 1.0:
        raise ValidationError("target_apcer must lie strictly between 0 and 1")
    _, apcer_c, bpcer_c = _sweep(bona_fide, pooled_attacks)
    qualifying = np.flatnonzero(apcer_c < target_apcer)
    return float(bpcer_c[qualifying[-1]])


def compute_report(score_set, *, threshold_set=None):
    """Build a MetricsReport for one score set.

    The operating threshold comes from the evaluated set's own EER sweep
    by default; pass another ScoreSet (for example validation scores) as
    threshold_set to take the threshold from there instead.  In that mode
    the reported eer is the midpoint of APCER and BPCER of the evaluated
    scores at the imported threshold.
    """
    bona = score_set.bona_fide
    pooled = score_set.pooled_attacks()
    if threshold_set is None:
        eer_value, threshold = eer(bona, pooled)
    else:
        _, threshold = eer(threshold_set.bona_fide, threshold_set.pooled_attacks())
        eer_value = (apcer(pooled, threshold) + bpcer(bona, threshold)) / 2.0
    per_pais = {s: apcer(score_set.attacks[s], threshold) for s in score_set.species}
    return MetricsReport(
        eer=eer_value,
        eer_threshold=threshold,
        bpcer10=bpcer_at_apcer(bona, pooled, BPCER_TARGETS["bpcer10"]),
        bpcer20=bpcer_at_apcer(bona, pooled, BPCER_TARGETS["bpcer20"]),
        bpcer100=bpcer_at_apcer(bona, pooled, BPCER_TARGETS["bpcer100"]),
        per_pais_apcer=per_pais,
        worst_case_apcer=max(per_pais.values()),
    )
