"""Byte layout of the container writers."""

import csv
import struct

import numpy as np
import pytest

from embed_export.pade import (
    HEADER,
    MAGIC,
    write_container,
    write_csv,
    write_manifest,
)

LABELS = [
    ("bona_fide", "bona_fide", "train"),
    ("attack", "replay", "val"),
    ("attack", "print", "test"),
]


def test_header_and_payload_layout(tmp_path):
    path = tmp_path / "e.pade"
    rows = np.arange(6, dtype=np.float32).reshape(3, 2)
    write_container(str(path), rows, LABELS)
    data = path.read_bytes()
    magic, version, count, dim = struct.unpack_from("<4sIQI", data)
    assert (magic, version, count, dim) == (MAGIC, 1, 3, 2)
    assert len(data) == HEADER.size + 3 * 2 * 4
    back = np.frombuffer(data, dtype="<f4", offset=HEADER.size).reshape(3, 2)
    assert np.array_equal(back, rows)


def test_sidecar_rows_and_comments(tmp_path):
    path = tmp_path / "e.pade"
    write_container(
        str(path),
        np.zeros((3, 2), np.float32),
        LABELS,
        comments=("seed: 9",),
    )
    lines = (tmp_path / "e.pade.labels.csv").read_text().splitlines()
    assert lines[0] == "# seed: 9"
    assert lines[1] == "row_index,class,species,split"
    assert lines[2] == "0,bona_fide,bona_fide,train"
    assert lines[4] == "2,attack,print,test"


def test_label_count_mismatch_rejected(tmp_path):
    with pytest.raises(ValueError, match="2 rows but 3 label triples"):
        write_container(
            str(tmp_path / "e.pade"), np.zeros((2, 4), np.float32), LABELS
        )


def test_non_matrix_rows_rejected(tmp_path):
    with pytest.raises(ValueError, match="must be 2-d"):
        write_container(
            str(tmp_path / "e.pade"), np.zeros(8, np.float32), LABELS[:1]
        )


def test_manifest_entries_and_quoting(tmp_path):
    path = tmp_path / "manifest.csv"
    entries = [
        ("a/b/train/x.png", "attack", "print, glossy", "train"),
        ("c.png", "bona_fide", "bona_fide", "val"),
    ]
    write_manifest(str(path), entries, comments=("source: unit",))
    text = path.read_text()
    assert text.startswith("# source: unit\nid,class,species,split\n")
    parsed = list(csv.reader(text.splitlines()[2:]))
    assert parsed == [list(e) for e in entries]


def test_writes_leave_no_temp_files(tmp_path):
    write_csv(str(tmp_path / "x.csv"), ("a", "b"), [(1, 2)])
    write_container(
        str(tmp_path / "e.pade"), np.zeros((1, 1), np.float32), LABELS[:1]
    )
    leftovers = [p.name for p in tmp_path.iterdir() if p.name.endswith(".tmp")]
    assert leftovers == []
