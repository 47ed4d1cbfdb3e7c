"""Probe heads: shapes, loss, analytic gradients, SGD behavior."""

import numpy as np
import pytest

import oracles
from padbench import (
    BONA_FIDE,
    DivergenceError,
    EmbeddingTable,
    HeadModel,
    TrainConfig,
    ValidationError,
    bce_gradient,
    bce_loss,
    eer,
    grid_search,
    init_head,
    predict,
    predict_scores,
    train_head,
)
from padbench.head import _head_from_flat


def make_table(rows, labels, split=None, species=None):
    rows = np.asarray(rows, dtype=np.float32)
    labels = np.asarray(labels, dtype=np.uint8)
    if species is None:
        species = tuple(BONA_FIDE if l == 0 else "printed" for l in labels)
    if split is None:
        split = ("train",) * len(labels)
    return EmbeddingTable(rows=rows, labels=labels, species=tuple(species),
                          split=tuple(split))


def separable_table(n=50, split="train"):
    # the classic linearly separable layout: class 0 at (-1, 0), class 1
    # at (1, 0)
    rows = np.concatenate(
        (np.tile([-1.0, 0.0], (n, 1)), np.tile([1.0, 0.0], (n, 1)))
    )
    labels = np.array([0] * n + [1] * n, dtype=np.uint8)
    return make_table(rows, labels, split=(split,) * (2 * n))


# -------------------------------------------------------- EmbeddingTable

def test_table_validation():
    rows = np.zeros((2, 3), dtype=np.float32)
    good = EmbeddingTable(rows=rows, labels=np.array([0, 1], dtype=np.uint8),
                          species=(BONA_FIDE, "printed"),
                          split=("train", "train"))
    assert good.dim == 3 and good.n_rows == 2
    with pytest.raises(ValidationError):  # bona fide row with attack species
        EmbeddingTable(rows=rows, labels=np.array([0, 1], dtype=np.uint8),
                       species=("printed", "printed"), split=("train", "train"))
    with pytest.raises(ValidationError):  # attack row without a species
        EmbeddingTable(rows=rows, labels=np.array([0, 1], dtype=np.uint8),
                       species=(BONA_FIDE, BONA_FIDE), split=("train", "train"))
    with pytest.raises(ValidationError):  # unknown split tag
        EmbeddingTable(rows=rows, labels=np.array([0, 1], dtype=np.uint8),
                       species=(BONA_FIDE, "printed"), split=("train", "dev"))
    with pytest.raises(ValidationError):  # non-finite feature
        EmbeddingTable(rows=np.array([[np.inf]], dtype=np.float32),
                       labels=np.array([0], dtype=np.uint8),
                       species=(BONA_FIDE,), split=("train",))


def test_table_split_indices_and_take():
    t = make_table(np.arange(8, dtype=np.float32).reshape(4, 2),
                   [0, 1, 0, 1],
                   split=("train", "val", "test", "train"))
    assert list(t.split_indices("train")) == [0, 3]
    sub = t.take(np.array([1, 2]))
    assert sub.n_rows == 2
    assert sub.split == ("val", "test")
    retagged = t.take(np.array([0, 1]), split=["test", "test"])
    assert retagged.split == ("test", "test")


def test_table_arrays_locked():
    t = separable_table(4)
    with pytest.raises(ValueError):
        t.rows[0, 0] = 9.0
    with pytest.raises(ValueError):
        t.labels[0] = 1


# ------------------------------------------------------------- HeadModel

def test_param_count_formulas():
    rng = np.random.default_rng(0)
    linear = init_head(384, 0, 16, rng)
    assert linear.n_params == 384 + 1
    one_hidden = init_head(384, 1, 100, rng)
    assert one_hidden.n_params == (384 * 100 + 100) + (100 + 1)


def test_init_bounds_and_determinism():
    h1 = init_head(9, 2, 5, np.random.default_rng(42))
    h2 = init_head(9, 2, 5, np.random.default_rng(42))
    for (w1, b1), (w2, b2) in zip(h1.layers, h2.layers):
        assert np.array_equal(w1, w2) and np.array_equal(b1, b2)
    for fan_in, (w, b) in zip((9, 5, 5), h1.layers):
        limit = 1.0 / np.sqrt(fan_in)
        assert np.all(np.abs(w) <= limit)
        assert np.all(np.abs(b) <= limit)


def test_head_validation():
    with pytest.raises(ValidationError):  # empty stack
        HeadModel(layers=())
    with pytest.raises(ValidationError):  # output width must be 1
        HeadModel(layers=((np.zeros((3, 2)), np.zeros(2)),))
    with pytest.raises(ValidationError):  # chain mismatch
        HeadModel(layers=((np.zeros((3, 4)), np.zeros(4)),
                          (np.zeros((5, 1)), np.zeros(1))))
    with pytest.raises(ValidationError):  # too deep
        layers = tuple((np.zeros((2, 2)), np.zeros(2)) for _ in range(4))
        HeadModel(layers=layers + ((np.zeros((2, 1)), np.zeros(1)),))


def test_flat_params_round_trip():
    rng = np.random.default_rng(7)
    head = init_head(6, 2, 4, rng)
    rebuilt = _head_from_flat(head.flat_params(), head.sizes())
    for (w1, b1), (w2, b2) in zip(head.layers, rebuilt.layers):
        assert np.array_equal(w1, w2) and np.array_equal(b1, b2)


# ------------------------------------------------------------------ loss

def test_bce_hand_value():
    y = np.array([1.0, 0.0, 1.0])
    p = np.array([0.9, 0.2, 0.8])
    assert bce_loss(y, p) == pytest.approx(oracles.BCE_HAND_VALUE, abs=1e-15)


def test_bce_balanced_half_is_ln2():
    y = np.array([0.0, 1.0])
    p = np.array([0.5, 0.5])
    assert bce_loss(y, p) == pytest.approx(np.log(2.0), abs=1e-15)


def test_bce_clamps_certain_wrong_predictions():
    # confidently wrong predictions at the boundary stay finite via the
    # 1e-7 clamp
    loss = bce_loss(np.array([1.0]), np.array([0.0]))
    assert loss == pytest.approx(-np.log(1e-7), rel=1e-9)


def test_bce_validation():
    with pytest.raises(ValidationError):
        bce_loss(np.array([0.5]), np.array([0.5]))  # non-binary target
    with pytest.raises(ValidationError):
        bce_loss(np.array([1.0]), np.array([1.5]))  # out-of-range pred
    with pytest.raises(ValidationError):
        bce_loss(np.array([]), np.array([]))


def test_bce_matches_reference_forward():
    rng = np.random.default_rng(13)
    head = init_head(5, 1, 4, rng)
    x = rng.normal(size=(20, 5))
    y = (rng.random(20) < 0.5).astype(np.float64)
    p = predict(head, x)
    assert bce_loss(y, p) == pytest.approx(
        oracles.reference_loss(head.layers, x, y), abs=1e-12
    )


# ------------------------------------------------------------- gradients

def test_gradient_single_sample_bias():
    # one sample, one neuron: the bias gradient is exactly p - y
    w = np.array([[0.3], [-0.2]])
    b = np.array([0.1])
    head = HeadModel(layers=((w, b),))
    x = np.array([[0.5, -1.0]])
    for y in (0.0, 1.0):
        grads = bce_gradient(head, x, np.array([y]))
        p = predict(head, x)[0]
        assert grads[0][1][0] == pytest.approx(p - y, abs=1e-15)


def test_gradient_zero_weight_symmetric_batch():
    # zero head, batch (x,1),(x,0),(-x,1),(-x,0): p = 0.5 everywhere and
    # residuals cancel against mirrored inputs, so weight gradients vanish
    head = HeadModel(layers=((np.zeros((3, 1)), np.zeros(1)),))
    x = np.array([1.0, -2.0, 0.5])
    batch = np.stack((x, x, -x, -x))
    targets = np.array([1.0, 0.0, 1.0, 0.0])
    grads = bce_gradient(head, batch, targets)
    assert np.all(grads[0][0] == 0.0)
    assert np.all(grads[0][1] == 0.0)


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(17)
    for _ in range(12):
        depth = int(rng.integers(0, 4))
        width = int(rng.integers(1, 7))
        dim = int(rng.integers(1, 7))
        head = init_head(dim, depth, width, rng)
        x = rng.normal(size=(6, dim))
        y = (rng.random(6) < 0.5).astype(np.float64)
        analytic = bce_gradient(head, x, y)
        numeric = oracles.fd_gradients(head.layers, x, y)
        err = oracles.relative_gradient_error(analytic, numeric)
        assert err <= 1e-4


# -------------------------------------------------------------- training

def test_predict_zero_head_is_half():
    head = HeadModel(layers=((np.zeros((2, 1)), np.zeros(1)),))
    t = separable_table(5)
    scores = predict(head, t.rows.astype(np.float64))
    assert np.all(scores == 0.5)


def test_train_separable_reaches_perfect_accuracy():
    # at lr 1e-3 x 100 epochs the updates move weights by about 0.1, so
    # the 0.5-thresholded accuracy depends on the seeded init landing
    # within reach; seed 4 does (EER is 0 for any seed, see below)
    table = separable_table(50)
    head = train_head(table, TrainConfig(seed=4))
    p = predict(head, table.rows.astype(np.float64))
    acc = np.mean((p >= 0.5).astype(np.uint8) == table.labels)
    assert acc == 1.0


def test_train_epochs_zero_returns_initialization():
    table = separable_table(10)
    cfg = TrainConfig(epochs=0, seed=5)
    head = train_head(table, cfg)
    expected = init_head(2, 0, 16, np.random.default_rng(5))
    for (w1, b1), (w2, b2) in zip(head.layers, expected.layers):
        assert np.array_equal(w1, w2) and np.array_equal(b1, b2)


def test_train_same_seed_bitwise_identical():
    table = separable_table(20)
    cfg = TrainConfig(epochs=5, seed=11)
    h1 = train_head(table, cfg)
    h2 = train_head(table, cfg)
    assert np.array_equal(h1.flat_params(), h2.flat_params())


def test_train_different_seeds_differ():
    table = separable_table(20)
    h1 = train_head(table, TrainConfig(epochs=3, seed=1))
    h2 = train_head(table, TrainConfig(epochs=3, seed=2))
    assert not np.array_equal(h1.flat_params(), h2.flat_params())


def test_train_requires_both_classes():
    rows = np.ones((4, 2), dtype=np.float32)
    table = make_table(rows, [0, 0, 0, 0])
    with pytest.raises(ValidationError):
        train_head(table, TrainConfig())


def test_train_requires_train_rows():
    t = separable_table(4, split="test")
    with pytest.raises(ValidationError):
        train_head(t, TrainConfig())


def test_divergence_names_epoch():
    rng = np.random.default_rng(3)
    rows = rng.normal(scale=100.0, size=(40, 4)).astype(np.float32)
    labels = np.array([0, 1] * 20, dtype=np.uint8)
    table = make_table(rows, labels)
    with pytest.raises(DivergenceError, match="epoch"):
        train_head(table, TrainConfig(learning_rate=1e300, epochs=4,
                                      hidden_layers=1))


def test_train_config_validation():
    with pytest.raises(ValidationError):
        TrainConfig(learning_rate=0.0)
    with pytest.raises(ValidationError):
        TrainConfig(batch_size=0)
    with pytest.raises(ValidationError):
        TrainConfig(epochs=-1)
    with pytest.raises(ValidationError):
        TrainConfig(optimizer="adam")
    with pytest.raises(ValidationError):
        TrainConfig(hidden_layers=4)
    with pytest.raises(ValidationError):
        TrainConfig(seed=-1)


# -------------------------------------------------------- predict_scores

def test_predict_scores_groups_by_species():
    rng = np.random.default_rng(23)
    rows = rng.normal(size=(8, 3)).astype(np.float32)
    labels = np.array([0, 0, 1, 1, 1, 1, 1, 1], dtype=np.uint8)
    species = (BONA_FIDE, BONA_FIDE, "a", "a", "b", "b", "c", "c")
    table = make_table(rows, labels, split=("test",) * 8, species=species)
    head = init_head(3, 0, 16, rng)
    scores = predict_scores(head, table, "test")
    assert scores.species == ("a", "b", "c")
    assert len(scores.bona_fide) == 2
    assert all(len(scores.attacks[s]) == 2 for s in scores.species)


def test_predict_scores_zero_head():
    table = separable_table(6, split="test")
    head = HeadModel(layers=((np.zeros((2, 1)), np.zeros(1)),))
    scores = predict_scores(head, table, "test")
    assert np.all(scores.bona_fide == 0.5)
    assert np.all(scores.attacks["printed"] == 0.5)


def test_predict_scores_needs_bona_fide():
    rows = np.ones((2, 2), dtype=np.float32)
    table = make_table(rows, [1, 1], split=("test", "test"),
                       species=("a", "a"))
    head = HeadModel(layers=((np.zeros((2, 1)), np.zeros(1)),))
    with pytest.raises(ValidationError):
        predict_scores(head, table, "test")


def test_separable_head_scores_eer_zero():
    table = separable_table(50)
    head = train_head(table, TrainConfig())
    scores = predict_scores(head, table, "train")
    value, _ = eer(scores.bona_fide, scores.pooled_attacks())
    assert value == 0.0


# ------------------------------------------------------------ grid search

def grid_table():
    rng = np.random.default_rng(29)
    n = 40
    rows = np.concatenate(
        (np.tile([-1.0, 0.0], (n, 1)), np.tile([1.0, 0.0], (n, 1)))
    ) + rng.normal(scale=0.01, size=(2 * n, 2))
    labels = np.array([0] * n + [1] * n, dtype=np.uint8)
    split = (("train",) * 30 + ("val",) * 10) * 2
    return make_table(rows.astype(np.float32), labels, split=split)


def test_grid_search_tie_prefers_larger_rate():
    table = grid_table()
    best, by_rate = grid_search(table, [1e-3, 1e-4, 1e-5, 1e-6],
                                TrainConfig(epochs=60))
    assert set(by_rate) == {1e-3, 1e-4, 1e-5, 1e-6}
    assert all(v == 0.0 for v in by_rate.values())
    assert best.learning_rate == 1e-3


def test_grid_search_singleton():
    table = grid_table()
    best, by_rate = grid_search(table, [5e-4], TrainConfig(epochs=2))
    assert best.learning_rate == 5e-4
    assert list(by_rate) == [5e-4]


def test_grid_search_empty_grid():
    with pytest.raises(ValidationError):
        grid_search(grid_table(), [], TrainConfig())


def test_grid_search_noise_stays_near_chance():
    rng = np.random.default_rng(31)
    rows = rng.normal(size=(120, 4)).astype(np.float32)
    labels = np.array([0, 1] * 60, dtype=np.uint8)
    split = (("train",) * 80 + ("val",) * 40)
    table = make_table(rows, labels, split=split)
    _, by_rate = grid_search(table, [1e-3, 1e-4], TrainConfig(epochs=10))
    for value in by_rate.values():
        assert 0.3 <= value <= 0.7
