"""Export orchestration on the toy backbone: ordering, determinism,
replica handling, skip and abort paths."""

import logging
import struct

import numpy as np
import pytest

from conftest import build_tree
from embed_export import BackboneError, ExportError, ExportJob, export
from embed_export import backbones
from embed_export.pade import HEADER


def toy_job(tree, out, **kwargs):
    return ExportJob(
        backbone="toy-8", input_dir=str(tree), out_dir=str(out), **kwargs
    )


def read_payload(out):
    data = (out / "embeddings.pade").read_bytes()
    _, _, count, dim = struct.unpack_from("<4sIQI", data)
    rows = np.frombuffer(data, dtype="<f4", offset=HEADER.size)
    return rows.reshape(count, dim)


def manifest_ids(out):
    lines = (out / "manifest.csv").read_text().splitlines()
    body = [l for l in lines if not l.startswith("#")][1:]
    return [l.split(",", 1)[0] for l in body]


def test_rows_follow_sorted_file_order(tree, tmp_path):
    out = tmp_path / "out"
    summary = export(toy_job(tree, out))
    assert summary.rows == 10
    ids = manifest_ids(out)
    assert ids == sorted(ids)
    assert ids[0] == "attack/replay/test/img00.png"


def test_same_seed_same_bytes(tree, tmp_path):
    export(toy_job(tree, tmp_path / "a", replicas=3, seed=4))
    export(toy_job(tree, tmp_path / "b", replicas=3, seed=4))
    for name in ("embeddings.pade", "embeddings.pade.labels.csv", "manifest.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (
            tmp_path / "b" / name
        ).read_bytes()


def test_different_seed_different_rows(tree, tmp_path):
    export(toy_job(tree, tmp_path / "a", replicas=2, seed=0))
    export(toy_job(tree, tmp_path / "b", replicas=2, seed=1))
    assert not np.array_equal(read_payload(tmp_path / "a"), read_payload(tmp_path / "b"))


def test_replica_zero_matches_single_export(tree, tmp_path):
    export(toy_job(tree, tmp_path / "single", seed=2))
    export(toy_job(tree, tmp_path / "multi", replicas=3, seed=2))
    single = read_payload(tmp_path / "single")
    multi = read_payload(tmp_path / "multi")
    assert multi.shape[0] == 30
    assert np.array_equal(multi[0::3], single)
    # augmented replicas actually moved
    assert not np.array_equal(multi[1::3], single)


def test_replica_ids_suffixed_only_when_multiplied(tree, tmp_path):
    export(toy_job(tree, tmp_path / "single"))
    assert all("#" not in i for i in manifest_ids(tmp_path / "single"))
    export(toy_job(tree, tmp_path / "multi", replicas=2))
    ids = manifest_ids(tmp_path / "multi")
    assert ids[0].endswith("#r0") and ids[1].endswith("#r1")
    assert ids[0].rsplit("#", 1)[0] == ids[1].rsplit("#", 1)[0]


def test_batch_size_does_not_change_order_or_values(tree, tmp_path):
    # row order and ids are batch-invariant; values agree only to float
    # tolerance because BLAS blocking differs per batch shape
    export(toy_job(tree, tmp_path / "a", batch_size=1))
    export(toy_job(tree, tmp_path / "b", batch_size=7))
    np.testing.assert_allclose(
        read_payload(tmp_path / "a"), read_payload(tmp_path / "b"),
        rtol=1e-5, atol=1e-6,
    )
    assert manifest_ids(tmp_path / "a") == manifest_ids(tmp_path / "b")


def test_unreadable_image_skipped_and_logged(tree, tmp_path, caplog):
    broken = tree / "attack" / "replay" / "train" / "img01.png"
    broken.write_bytes(b"this is not an image")
    with caplog.at_level(logging.WARNING, logger="embed_export"):
        summary = export(toy_job(tree, tmp_path / "out", replicas=2))
    assert summary.skipped == ("attack/replay/train/img01.png",)
    assert "attack/replay/train/img01.png" in caplog.text
    assert summary.rows == 9 * 2
    assert "attack/replay/train/img01.png#r0" not in manifest_ids(tmp_path / "out")


def test_all_unreadable_aborts(tmp_path):
    tree = tmp_path / "images"
    paths = build_tree(tree, {("attack", "replay"): {"train": 2}})
    for path in paths:
        path.write_bytes(b"junk")
    with pytest.raises(ExportError, match="no readable images"):
        export(toy_job(tree, tmp_path / "out"))


def test_empty_tree_aborts(tmp_path):
    tree = tmp_path / "images"
    (tree / "attack" / "replay" / "train").mkdir(parents=True)
    with pytest.raises(ExportError, match="no images found"):
        export(toy_job(tree, tmp_path / "out"))


def test_emitted_dim_mismatch_aborts_without_outputs(tree, tmp_path, monkeypatch):
    def bad_load(spec, mode, seed):
        def embed(batch):
            return np.zeros((batch.shape[0], spec.dim + 1), np.float32)

        return embed, "random"

    monkeypatch.setattr(backbones, "load", bad_load)
    out = tmp_path / "out"
    with pytest.raises(BackboneError, match="emitted dim 9, declared 8"):
        export(toy_job(tree, out))
    assert not out.exists()


def test_wrong_batch_count_aborts(tree, tmp_path, monkeypatch):
    def bad_load(spec, mode, seed):
        def embed(batch):
            return np.zeros((batch.shape[0] + 1, spec.dim), np.float32)

        return embed, "random"

    monkeypatch.setattr(backbones, "load", bad_load)
    with pytest.raises(BackboneError, match="returned shape"):
        export(toy_job(tree, tmp_path / "out"))


def test_bona_species_normalised_in_outputs(tmp_path):
    tree = tmp_path / "images"
    build_tree(
        tree,
        {("bona_fide", "indoor"): {"train": 2}, ("attack", "replay"): {"train": 1}},
    )
    out = tmp_path / "out"
    export(toy_job(tree, out))
    lines = (out / "manifest.csv").read_text().splitlines()
    bona = [l for l in lines if l.startswith("bona_fide/")]
    assert bona and all(",bona_fide,train" in l for l in bona)


def test_job_validation():
    with pytest.raises(ExportError, match="replicas must be at least 1"):
        ExportJob(backbone="toy-8", input_dir="x", out_dir="y", replicas=0)
    with pytest.raises(ExportError, match="unknown weights mode"):
        ExportJob(backbone="toy-8", input_dir="x", out_dir="y", weights="frozen")
    with pytest.raises(ExportError, match="unknown augmentation"):
        ExportJob(
            backbone="toy-8", input_dir="x", out_dir="y",
            augmentations=("sharpen",),
        )
    with pytest.raises(ExportError, match="need at least one augmentation"):
        ExportJob(
            backbone="toy-8", input_dir="x", out_dir="y",
            replicas=2, augmentations=(),
        )


def test_unknown_backbone_named_with_alternatives(tree, tmp_path):
    with pytest.raises(BackboneError, match="unknown backbone 'dino'.*dinov2-small"):
        export(
            ExportJob(backbone="dino", input_dir=str(tree), out_dir=str(tmp_path))
        )
