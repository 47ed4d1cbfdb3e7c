"""Probe heads trained on frozen embeddings.

A head is a stack of 0 to 3 rectified hidden layers plus one output neuron
read through a sigmoid; with no hidden layers it is the single-neuron
linear probe, with one hidden layer the small fine-tuning head.  Training
is plain mini-batch SGD on mean binary cross-entropy with the attack class
labeled 1.  Runs are deterministic for a given seed: the seeded generator
first draws the initial weights (uniform in +/- 1/sqrt(fan_in), weights
then bias, layer by layer), then one index permutation per epoch.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import _native
from .errors import DivergenceError, ValidationError
from .metrics import BONA_FIDE, ScoreSet, eer

__all__ = [
    "EmbeddingTable",
    "HeadModel",
    "TrainConfig",
    "bce_loss",
    "bce_gradient",
    "init_head",
    "train_head",
    "predict_scores",
    "grid_search",
]

SPLITS = ("train", "val", "test")
PRED_CLAMP = 1e-7  # applied to predictions for loss evaluation only
MAX_HIDDEN_LAYERS = 3


@dataclass(frozen=True)
class EmbeddingTable:
    """N x D feature matrix with per-row class, species and split labels.

    rows are float32 (the on-disk precision); labels are 0 for bona fide
    and 1 for attacks; species is the PAIS name, or "bona_fide" for bona
    fide rows.  ids are optional per-row presentation ids, attached when a
    manifest is bound to the table.  Arrays are locked after validation.
    """

    rows: np.ndarray
    labels: np.ndarray
    species: tuple[str, ...]
    split: tuple[str, ...]
    ids: tuple[str, ...] | None = None

    def __post_init__(self):
        rows = np.array(self.rows, dtype=np.float32, order="C")
        if rows.ndim != 2 or rows.shape[0] < 1 or rows.shape[1] < 1:
            raise ValidationError("rows must be a non-empty N x D matrix")
        if not np.all(np.isfinite(rows)):
            raise ValidationError("rows contain non-finite entries")
        labels = np.array(self.labels, dtype=np.uint8)
        if labels.shape != (rows.shape[0],):
            raise ValidationError("labels must align with rows")
        if labels.max(initial=0) > 1:
            raise ValidationError("labels must be 0 (bona fide) or 1 (attack)")
        species = tuple(self.species)
        split = tuple(self.split)
        if len(species) != rows.shape[0] or len(split) != rows.shape[0]:
            raise ValidationError("species and split must align with rows")
        for i, (lab, sp, sl) in enumerate(zip(labels, species, split)):
            if sl not in SPLITS:
                raise ValidationError(f"row {i}: unknown split {sl!r}")
            if lab == 0 and sp != BONA_FIDE:
                raise ValidationError(f"row {i}: bona fide row with species {sp!r}")
            if lab == 1 and (not sp or sp == BONA_FIDE):
                raise ValidationError(f"row {i}: attack row needs a species name")
        ids = None
        if self.ids is not None:
            ids = tuple(self.ids)
            if len(ids) != rows.shape[0]:
                raise ValidationError("ids must align with rows")
            if len(set(ids)) != len(ids):
                raise ValidationError("ids must be unique")
        rows.setflags(write=False)
        labels.setflags(write=False)
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "species", species)
        object.__setattr__(self, "split", split)
        object.__setattr__(self, "ids", ids)

    @property
    def dim(self):
        return int(self.rows.shape[1])

    @property
    def n_rows(self):
        return int(self.rows.shape[0])

    def split_indices(self, tag):
        if tag not in SPLITS:
            raise ValidationError(f"unknown split {tag!r}")
        return np.flatnonzero(np.array([s == tag for s in self.split]))

    def take(self, indices, split=None):
        """New table holding the given rows, optionally with new split tags."""
        indices = np.asarray(indices, dtype=np.int64)
        return EmbeddingTable(
            rows=self.rows[indices],
            labels=self.labels[indices],
            species=tuple(self.species[i] for i in indices),
            split=tuple(split) if split is not None
            else tuple(self.split[i] for i in indices),
            ids=tuple(self.ids[i] for i in indices) if self.ids else None,
        )


@dataclass(frozen=True)
class HeadModel:
    """Weight/bias pairs for each layer, ending in a single output unit."""

    layers: tuple[tuple[np.ndarray, np.ndarray], ...]

    def __post_init__(self):
        if not 1 <= len(self.layers) <= MAX_HIDDEN_LAYERS + 1:
            raise ValidationError("a head has 1 to 4 layers")
        layers = []
        previous = None
        for w, b in self.layers:
            w = np.array(w, dtype=np.float64, order="C")
            b = np.array(b, dtype=np.float64)
            if w.ndim != 2 or b.shape != (w.shape[1],):
                raise ValidationError("layer shapes must be (in, out) with out bias")
            if previous is not None and w.shape[0] != previous:
                raise ValidationError("layer shapes must chain")
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise ValidationError("head parameters must be finite")
            previous = w.shape[1]
            w.setflags(write=False)
            b.setflags(write=False)
            layers.append((w, b))
        if previous != 1:
            raise ValidationError("the output layer must have exactly one unit")
        object.__setattr__(self, "layers", tuple(layers))

    @property
    def input_dim(self):
        return int(self.layers[0][0].shape[0])

    @property
    def hidden_widths(self):
        return tuple(int(w.shape[1]) for w, _ in self.layers[:-1])

    @property
    def n_params(self):
        return int(sum(w.size + b.size for w, b in self.layers))

    def sizes(self):
        return np.array(
            [self.input_dim] + [int(w.shape[1]) for w, _ in self.layers],
            dtype=np.int64,
        )

    def flat_params(self):
        parts = []
        for w, b in self.layers:
            parts.append(w.ravel())
            parts.append(b)
        return np.concatenate(parts)


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3
    batch_size: int = 64
    epochs: int = 100
    optimizer: str = "sgd"
    seed: int = 0
    hidden_layers: int = 0
    hidden_width: int = 16

    def __post_init__(self):
        if not (self.learning_rate > 0 and np.isfinite(self.learning_rate)):
            raise ValidationError("learning_rate must be positive and finite")
        if self.batch_size < 1:
            raise ValidationError("batch_size must be positive")
        if self.epochs < 0:
            raise ValidationError("epochs must be non-negative")
        if self.optimizer != "sgd":
            raise ValidationError(f"unsupported optimizer {self.optimizer!r}")
        if not 0 <= self.seed < 2**64:
            raise ValidationError("seed must fit in 64 unsigned bits")
        if not 0 <= self.hidden_layers <= MAX_HIDDEN_LAYERS:
            raise ValidationError("hidden_layers must be between 0 and 3")
        if self.hidden_width < 1:
            raise ValidationError("hidden_width must be positive")


def bce_loss(y_true, y_pred):
    """Mean binary cross-entropy with predictions clamped to
    [1e-7, 1 - 1e-7]."""
    y = np.asarray(y_true, dtype=np.float64)
    p = np.asarray(y_pred, dtype=np.float64)
    if y.shape != p.shape or y.ndim != 1 or y.size == 0:
        raise ValidationError("targets and predictions must be equal-length 1-D")
    if not np.all((y == 0.0) | (y == 1.0)):
        raise ValidationError("targets must be binary")
    if not np.all(np.isfinite(p)) or p.min() < 0.0 or p.max() > 1.0:
        raise ValidationError("predictions must lie in [0, 1]")
    p = np.clip(p, PRED_CLAMP, 1.0 - PRED_CLAMP)
    return float(np.mean(-(y * np.log(p) + (1.0 - y) * np.log1p(-p))))


def _forward(layers, x):
    a = x
    zs = []
    acts = [a]
    for i, (w, b) in enumerate(layers):
        z = a @ w + b
        zs.append(z)
        a = z if i == len(layers) - 1 else np.maximum(z, 0.0)
        acts.append(a)
    p = 1.0 / (1.0 + np.exp(-zs[-1][:, 0]))
    return p, zs, acts


def predict(head, x):
    """Sigmoid outputs of the head for a float batch, shape (n,)."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != head.input_dim:
        raise ValidationError(
            f"input dimension {x.shape} does not match head ({head.input_dim})"
        )
    p, _, _ = _forward(head.layers, x)
    return p


def bce_gradient(head, batch, targets):
    """Analytic gradients of the mean BCE over one batch.

    Returns one (d_weights, d_bias) pair per layer.  These are gradients
    of the unclamped loss through the sigmoid; the loss clamp only matters
    within 1e-7 of the endpoints.
    """
    x = np.asarray(batch, dtype=np.float64)
    y = np.asarray(targets, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] == 0:
        raise ValidationError("batch must be a non-empty 2-D array")
    if x.shape[1] != head.input_dim:
        raise ValidationError("batch dimension does not match head input")
    if y.shape != (x.shape[0],):
        raise ValidationError("targets must align with the batch")
    p, zs, acts = _forward(head.layers, x)
    delta = ((p - y) / y.size)[:, None]
    grads = [None] * len(head.layers)
    for li in range(len(head.layers) - 1, -1, -1):
        grads[li] = (acts[li].T @ delta, delta.sum(axis=0))
        if li > 0:
            delta = (delta @ head.layers[li][0].T) * (zs[li - 1] > 0.0)
    return grads


def init_head(input_dim, hidden_layers, hidden_width, rng):
    """Fresh head with uniform +/- 1/sqrt(fan_in) weights from rng."""
    if input_dim < 1:
        raise ValidationError("input_dim must be positive")
    widths = [input_dim] + [hidden_width] * hidden_layers + [1]
    layers = []
    for fan_in, fan_out in zip(widths[:-1], widths[1:]):
        limit = 1.0 / np.sqrt(fan_in)
        w = rng.uniform(-limit, limit, size=(fan_in, fan_out))
        b = rng.uniform(-limit, limit, size=fan_out)
        layers.append((w, b))
    return HeadModel(layers=tuple(layers))


def _head_from_flat(params, sizes):
    layers = []
    offset = 0
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        fan_in, fan_out = int(fan_in), int(fan_out)
        w = params[offset:offset + fan_in * fan_out].reshape(fan_in, fan_out)
        offset += fan_in * fan_out
        b = params[offset:offset + fan_out]
        offset += fan_out
        layers.append((w.copy(), b.copy()))
    return HeadModel(layers=tuple(layers))


def train_head(table, config, *, backend=None):
    """Train a head on the table's train split.

    Deterministic for fixed inputs and seed within one backend; pass
    backend="python" or "cython" to pin the kernel (default: best
    available).  Raises a divergence error naming the epoch if parameters
    stop being finite.
    """
    impl = _native.get_backend(backend)
    idx = table.split_indices("train")
    if idx.size == 0:
        raise ValidationError("train split is empty")
    x = table.rows[idx].astype(np.float64)
    y = table.labels[idx].astype(np.float64)
    if y.min() == y.max():
        raise ValidationError("training data must contain both classes")

    rng = np.random.default_rng(config.seed)
    head = init_head(table.dim, config.hidden_layers, config.hidden_width, rng)
    sizes = head.sizes()
    params = head.flat_params()
    for epoch in range(config.epochs):
        perm = rng.permutation(idx.size).astype(np.int64)
        impl.sgd_epoch(
            x, y, perm, params, sizes,
            float(config.learning_rate), int(config.batch_size),
        )
        if not np.all(np.isfinite(params)):
            raise DivergenceError(
                f"non-finite parameters after epoch {epoch + 1}; "
                "lower the learning rate"
            )
    return _head_from_flat(params, sizes)


def predict_scores(head, table, split):
    """Score one split of the table and group the outputs by species."""
    idx = table.split_indices(split)
    if idx.size == 0:
        raise ValidationError(f"split {split!r} has no rows")
    if table.dim != head.input_dim:
        raise ValidationError(
            f"table dimension {table.dim} does not match head input "
            f"{head.input_dim}"
        )
    scores = predict(head, table.rows[idx].astype(np.float64))
    bona, attacks = [], {}
    bona_ids, attack_ids = [], {}
    for pos, row in enumerate(idx):
        rid = table.ids[row] if table.ids else f"row-{int(row):06d}"
        if table.labels[row] == 0:
            bona.append(scores[pos])
            bona_ids.append(rid)
        else:
            attacks.setdefault(table.species[row], []).append(scores[pos])
            attack_ids.setdefault(table.species[row], []).append(rid)
    if not bona:
        raise ValidationError(f"split {split!r} has no bona fide rows")
    return ScoreSet(
        bona_fide=np.array(bona),
        attacks={k: np.array(v) for k, v in attacks.items()},
        bona_fide_ids=tuple(bona_ids),
        attack_ids={k: tuple(v) for k, v in attack_ids.items()},
    )


def grid_search(table, lr_grid, base, *, backend=None):
    """Train one head per learning rate and pick the best by validation EER.

    Ties go to the larger learning rate.  Returns the winning TrainConfig
    and the per-rate validation EER map.
    """
    rates = sorted(set(float(lr) for lr in lr_grid), reverse=True)
    if not rates:
        raise ValidationError("the learning-rate grid must not be empty")
    if table.split_indices("val").size == 0:
        raise ValidationError("val split is empty")
    val_eer = {}
    for lr in rates:
        config = replace(base, learning_rate=lr)
        head = train_head(table, config, backend=backend)
        scores = predict_scores(head, table, "val")
        val_eer[lr], _ = eer(scores.bona_fide, scores.pooled_attacks())
    best = min(rates, key=lambda lr: (val_eer[lr], -lr))
    return replace(base, learning_rate=best), val_eer
