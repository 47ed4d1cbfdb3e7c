"""Writers for the embedding container and its CSV companions.

Byte layout: 20-byte header (magic "PADE", u32 version 1, u64 row
count, u32 dim, all little endian) followed by row-major float32 rows.
The labels sidecar sits next to the binary at <path>.labels.csv with
columns row_index,class,species,split; the manifest carries one id per
row with columns id,class,species,split. Comment lines start with
"# " and are only legal before the CSV header.
"""

import csv
import io
import os
import struct

import numpy as np

MAGIC = b"PADE"
FORMAT_VERSION = 1
HEADER = struct.Struct("<4sIQI")

SIDECAR_HEADER = ("row_index", "class", "species", "split")
MANIFEST_HEADER = ("id", "class", "species", "split")


def write_atomic(path, data):
    tmp = f"{path}.tmp"
    with open(tmp, "wb") as fh:
        fh.write(data)
    os.replace(tmp, path)


def write_csv(path, header, rows, comments=()):
    buf = io.StringIO()
    for line in comments:
        buf.write(f"# {line}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    write_atomic(path, buf.getvalue().encode("utf-8"))


def write_container(path, rows, labels, comments=()):
    """Binary payload plus the labels sidecar next to it.

    labels is a sequence of (cls, species, split) triples, one per row.
    """
    array = np.ascontiguousarray(rows, dtype="<f4")
    if array.ndim != 2:
        raise ValueError(f"rows must be 2-d, got shape {array.shape}")
    if array.shape[0] != len(labels):
        raise ValueError(
            f"{array.shape[0]} rows but {len(labels)} label triples"
        )
    header = HEADER.pack(MAGIC, FORMAT_VERSION, array.shape[0], array.shape[1])
    write_atomic(path, header + array.tobytes())
    side = [(i,) + tuple(triple) for i, triple in enumerate(labels)]
    write_csv(f"{path}.labels.csv", SIDECAR_HEADER, side, comments)


def write_manifest(path, entries, comments=()):
    """entries is a sequence of (id, cls, species, split) tuples."""
    write_csv(path, MANIFEST_HEADER, entries, comments)
