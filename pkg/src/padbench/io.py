"""Readers and writers for every on-disk format.

Text formats are UTF-8 CSV with a mandatory header row; lines starting
with '#' before the header are comments (writers use them to echo seeds
and provenance) and are skipped by every reader.  The embedding format is
binary little-endian: magic "PADE", u32 version, u64 row count, u32 dim,
then row-major float32 payload, with a labels CSV sidecar.  Readers never
raise anything but package errors on malformed input, and report line
numbers or byte offsets where they can.

Numeric precision per format: embedding payloads are exact float32;
score CSVs carry shortest round-trip decimals (lossless for float64);
DET and results CSVs carry 6 decimal places; head JSON carries 9
significant digits.  Rendered tables show percentages with 2 decimals,
half-up.
"""

from __future__ import annotations

import csv
import io as _stdio
import json
import math
import os
import struct
from decimal import ROUND_HALF_UP, Decimal

import numpy as np

from .det import export_det, parse_det
from .errors import FormatError, ValidationError
from .head import EmbeddingTable, HeadModel
from .metrics import BONA_FIDE, ScoreSet
from .protocol import DatasetManifest, ManifestEntry, ResultRow
from .synth import parse_spec

__all__ = [
    "read_embeddings",
    "write_embeddings",
    "read_scores",
    "write_scores",
    "read_manifest",
    "write_manifest",
    "read_head",
    "write_head",
    "read_det",
    "write_det",
    "read_results",
    "write_results",
    "read_synth_spec",
    "render_results_table",
    "percent",
]

MAGIC = b"PADE"
FORMAT_VERSION = 1
HEADER = struct.Struct("<4sIQI")  # magic, version, row count, dim

SCORES_HEADER = ("id", "class", "species", "score")
MANIFEST_HEADER = ("id", "class", "species", "split")
SIDECAR_HEADER = ("row_index", "class", "species", "split")
RESULTS_HEADER = (
    "model", "protocol", "held_out", "eer", "bpcer10", "bpcer20", "bpcer100"
)

_SPLITS = ("train", "val", "test")


# ---------------------------------------------------------------- helpers

def _read_text(path):
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc}") from None
    try:
        return raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise FormatError(f"{path} is not valid UTF-8 at byte {exc.start}") from None


def _csv_rows(text, expected_header, label):
    """(lineno, fields) rows after the header; leading '#' lines skipped."""
    lines = text.splitlines()
    body = []
    header_line = None
    for n, line in enumerate(lines, start=1):
        if header_line is None and line.startswith("#"):
            continue
        if header_line is None:
            header_line = n
            fields = _split_csv_line(line, n)
            if tuple(fields) != expected_header:
                raise FormatError(
                    f"line {n}: expected {label} header "
                    f"{','.join(expected_header)!r}, got {line!r}"
                )
            continue
        if line.startswith("#"):
            raise FormatError(f"line {n}: comments are only allowed before the header")
        fields = _split_csv_line(line, n)
        if len(fields) != len(expected_header):
            raise FormatError(
                f"line {n}: expected {len(expected_header)} fields, "
                f"got {len(fields)}"
            )
        body.append((n, fields))
    if header_line is None:
        raise FormatError(f"missing {label} header row")
    return body


def _split_csv_line(line, lineno):
    if "\x00" in line:
        raise FormatError(f"line {lineno}: NUL byte in CSV data")
    try:
        rows = list(csv.reader([line]))
    except csv.Error as exc:
        raise FormatError(f"line {lineno}: {exc}") from None
    if len(rows) != 1:
        raise FormatError(f"line {lineno}: malformed CSV row")
    return rows[0]


def _write_csv(path, header, rows, header_comments):
    buf = _stdio.StringIO()
    for comment in header_comments:
        buf.write(f"# {comment}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    _write_atomic(path, buf.getvalue().encode("utf-8"))


def _write_atomic(path, data):
    tmp = f"{path}.tmp"
    with open(tmp, "wb") as fh:
        fh.write(data)
    os.replace(tmp, path)


def _parse_float(text, lineno, column):
    try:
        value = float(text)
    except ValueError:
        raise FormatError(f"line {lineno}: {column} {text!r} is not a number") from None
    return value


def percent(fraction):
    """Render a fraction as a percentage with 2 decimals, half-up.

    Goes through the 6-decimal text form so the rendering matches the
    stored CSV value rather than binary float leftovers.
    """
    quantized = Decimal(f"{fraction:.6f}") * 100
    return str(quantized.quantize(Decimal("0.01"), rounding=ROUND_HALF_UP))


# ------------------------------------------------------------- embeddings

def _sidecar_path(path):
    return f"{path}.labels.csv"


def write_embeddings(table, path, *, sidecar_path=None, header_comments=()):
    """Binary payload plus the labels sidecar (path + '.labels.csv')."""
    payload = np.ascontiguousarray(table.rows, dtype="<f4").tobytes()
    header = HEADER.pack(MAGIC, FORMAT_VERSION, table.n_rows, table.dim)
    _write_atomic(path, header + payload)
    rows = [
        (i, BONA_FIDE if table.labels[i] == 0 else "attack",
         table.species[i], table.split[i])
        for i in range(table.n_rows)
    ]
    _write_csv(
        sidecar_path or _sidecar_path(path), SIDECAR_HEADER, rows, header_comments
    )


def read_embeddings(path, *, sidecar_path=None):
    """Parse the binary payload and sidecar back into an EmbeddingTable."""
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc}") from None
    if len(data) < HEADER.size:
        raise FormatError(
            f"truncated header at offset 0: need {HEADER.size} bytes, "
            f"have {len(data)}"
        )
    magic, version, n_rows, dim = HEADER.unpack_from(data)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r} at offset 0, expected {MAGIC!r}")
    if version != FORMAT_VERSION:
        raise FormatError(
            f"unsupported format version {version} at offset 4, "
            f"expected {FORMAT_VERSION}"
        )
    if n_rows < 1:
        raise FormatError("row count at offset 8 must be at least 1")
    if dim < 1:
        raise FormatError("dimension at offset 16 must be at least 1")
    expected = n_rows * dim * 4
    actual = len(data) - HEADER.size
    if actual < expected:
        raise FormatError(
            f"truncated payload at offset {HEADER.size}: need {expected} "
            f"bytes for {n_rows} x {dim}, have {actual}"
        )
    if actual > expected:
        raise FormatError(
            f"trailing data at offset {HEADER.size + expected}: "
            f"{actual - expected} unexpected bytes"
        )
    rows = np.frombuffer(
        data, dtype="<f4", count=n_rows * dim, offset=HEADER.size
    ).reshape(n_rows, dim)

    sidecar = sidecar_path or _sidecar_path(path)
    body = _csv_rows(_read_text(sidecar), SIDECAR_HEADER, "labels sidecar")
    if len(body) != n_rows:
        raise FormatError(
            f"sidecar has {len(body)} rows but the header declares {n_rows}"
        )
    labels, species, split = [], [], []
    for expect_index, (lineno, fields) in enumerate(body):
        index_text, cls, sp, tag = fields
        if index_text != str(expect_index):
            raise FormatError(
                f"line {lineno}: row_index {index_text!r}, expected {expect_index}"
            )
        if cls == BONA_FIDE:
            labels.append(0)
            if sp == "":
                sp = BONA_FIDE
        elif cls == "attack":
            labels.append(1)
        else:
            raise FormatError(f"line {lineno}: unknown class {cls!r}")
        if tag not in _SPLITS:
            raise FormatError(f"line {lineno}: unknown split {tag!r}")
        species.append(sp)
        split.append(tag)
    try:
        return EmbeddingTable(
            rows=rows,
            labels=np.array(labels, dtype=np.uint8),
            species=tuple(species),
            split=tuple(split),
        )
    except ValidationError as exc:
        raise ValidationError(f"{path}: {exc}") from None


# ----------------------------------------------------------------- scores

def write_scores(score_set, path, *, header_comments=()):
    rows = []
    for i, s in zip(score_set.bona_fide_ids, score_set.bona_fide):
        rows.append((i, BONA_FIDE, "", repr(float(s))))
    for name in score_set.species:
        for i, s in zip(score_set.attack_ids[name], score_set.attacks[name]):
            rows.append((i, "attack", name, repr(float(s))))
    _write_csv(path, SCORES_HEADER, rows, header_comments)


def read_scores(path):
    body = _csv_rows(_read_text(path), SCORES_HEADER, "scores")
    seen = {}
    bona, bona_ids = [], []
    attacks, attack_ids = {}, {}
    for lineno, (rid, cls, sp, score_text) in body:
        if not rid:
            raise FormatError(f"line {lineno}: empty id")
        if rid in seen:
            raise ValidationError(
                f"line {lineno}: duplicate id {rid!r} (first at line {seen[rid]})"
            )
        seen[rid] = lineno
        value = _parse_float(score_text, lineno, "score")
        if not math.isfinite(value) or not 0.0 <= value <= 1.0:
            raise ValidationError(
                f"line {lineno}: score {score_text} outside [0, 1]"
            )
        if cls == BONA_FIDE:
            if sp != "":
                raise FormatError(
                    f"line {lineno}: bona fide rows must leave species empty"
                )
            bona.append(value)
            bona_ids.append(rid)
        elif cls == "attack":
            if not sp or sp == BONA_FIDE:
                raise FormatError(f"line {lineno}: attack rows need a species")
            attacks.setdefault(sp, []).append(value)
            attack_ids.setdefault(sp, []).append(rid)
        else:
            raise FormatError(f"line {lineno}: unknown class {cls!r}")
    try:
        return ScoreSet(
            bona_fide=np.array(bona, dtype=np.float64),
            attacks={k: np.array(v, dtype=np.float64) for k, v in attacks.items()},
            bona_fide_ids=tuple(bona_ids),
            attack_ids={k: tuple(v) for k, v in attack_ids.items()},
        )
    except ValidationError as exc:
        raise ValidationError(f"{path}: {exc}") from None


# --------------------------------------------------------------- manifest

def write_manifest(manifest, path, *, header_comments=()):
    rows = [(e.id, e.cls, e.species, e.split) for e in manifest.entries]
    comments = list(header_comments)
    if manifest.source:
        comments.append(f"source: {manifest.source}")
    _write_csv(path, MANIFEST_HEADER, rows, comments)


def read_manifest(path):
    text = _read_text(path)
    source = ""
    for line in text.splitlines():
        if not line.startswith("#"):
            break
        if line.startswith("# source: "):
            source = line[len("# source: "):]
    body = _csv_rows(text, MANIFEST_HEADER, "manifest")
    if not body:
        raise FormatError("manifest has no entries")
    seen = {}
    entries = []
    for lineno, (rid, cls, sp, tag) in body:
        if rid in seen:
            raise ValidationError(
                f"line {lineno}: duplicate id {rid!r} (first at line {seen[rid]})"
            )
        seen[rid] = lineno
        if cls == BONA_FIDE and sp == "":
            sp = BONA_FIDE
        try:
            entries.append(ManifestEntry(id=rid, cls=cls, species=sp, split=tag))
        except ValidationError as exc:
            raise FormatError(f"line {lineno}: {exc}") from None
    return DatasetManifest(entries=tuple(entries), source=source)


# ------------------------------------------------------------------- head

def _round9(value):
    return float(format(value, ".9g"))


def write_head(head, path, *, meta=None):
    doc = {
        "format": "padbench-head",
        "version": 1,
        "layers": [
            {
                "shape": [int(w.shape[0]), int(w.shape[1])],
                "weights": [_round9(v) for v in w.ravel()],
                "bias": [_round9(v) for v in b],
            }
            for w, b in head.layers
        ],
    }
    if meta is not None:
        doc["meta"] = meta
    text = json.dumps(doc, sort_keys=True, indent=2) + "\n"
    _write_atomic(path, text.encode("utf-8"))


def _reject_json_constant(token):
    raise FormatError(f"non-finite JSON number {token!r} is not allowed")


def read_head(path):
    text = _read_text(path)
    try:
        doc = json.loads(text, parse_constant=_reject_json_constant)
    except json.JSONDecodeError as exc:
        raise FormatError(f"invalid JSON at line {exc.lineno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise FormatError("head document must be a JSON object")
    if doc.get("format") != "padbench-head":
        raise FormatError("missing or wrong 'format' marker")
    if doc.get("version") != 1:
        raise FormatError(f"unsupported head version {doc.get('version')!r}")
    unknown = set(doc) - {"format", "version", "layers", "meta"}
    if unknown:
        raise FormatError(f"unknown head fields {sorted(unknown)}")
    layers_doc = doc.get("layers")
    if not isinstance(layers_doc, list) or not layers_doc:
        raise FormatError("'layers' must be a non-empty list")
    layers = []
    for i, entry in enumerate(layers_doc):
        if not isinstance(entry, dict):
            raise FormatError(f"layer {i} must be an object")
        if set(entry) != {"shape", "weights", "bias"}:
            raise FormatError(f"layer {i} must have shape, weights and bias")
        shape = entry["shape"]
        if not (
            isinstance(shape, list)
            and len(shape) == 2
            and all(isinstance(x, int) and not isinstance(x, bool) for x in shape)
            and shape[0] >= 1
            and shape[1] >= 1
        ):
            raise FormatError(f"layer {i} shape must be two positive integers")
        weights, bias = entry["weights"], entry["bias"]
        for name, values, expected in (
            ("weights", weights, shape[0] * shape[1]),
            ("bias", bias, shape[1]),
        ):
            if not (
                isinstance(values, list)
                and len(values) == expected
                and all(
                    isinstance(v, (int, float)) and not isinstance(v, bool)
                    for v in values
                )
            ):
                raise FormatError(
                    f"layer {i} {name} must be {expected} numbers"
                )
        layers.append(
            (
                np.array(weights, dtype=np.float64).reshape(shape[0], shape[1]),
                np.array(bias, dtype=np.float64),
            )
        )
    try:
        return HeadModel(layers=tuple(layers))
    except ValidationError as exc:
        raise FormatError(f"invalid head: {exc}") from None


# -------------------------------------------------------------------- DET

def write_det(curve, path, *, coordinates="raw", header_comments=()):
    text = "".join(f"# {c}\n" for c in header_comments)
    text += export_det(curve, coordinates)
    _write_atomic(path, text.encode("utf-8"))


def read_det(path):
    try:
        return parse_det(_read_text(path))
    except ValidationError as exc:
        raise FormatError(str(exc)) from None


# ---------------------------------------------------------------- results

def write_results(rows, path, *, header_comments=()):
    table = []
    for row in rows:
        if row.error:
            table.append((row.model, row.protocol, row.held_out, "", "", "", ""))
        else:
            table.append(
                (
                    row.model, row.protocol, row.held_out,
                    f"{row.eer:.6f}", f"{row.bpcer10:.6f}",
                    f"{row.bpcer20:.6f}", f"{row.bpcer100:.6f}",
                )
            )
    _write_csv(path, RESULTS_HEADER, table, header_comments)


def read_results(path):
    body = _csv_rows(_read_text(path), RESULTS_HEADER, "results")
    rows = []
    for lineno, fields in body:
        model, protocol, held_out = fields[:3]
        metric_text = fields[3:]
        if all(t == "" for t in metric_text):
            try:
                rows.append(
                    ResultRow(
                        model=model, protocol=protocol, held_out=held_out,
                        eer=None, bpcer10=None, bpcer20=None, bpcer100=None,
                        error="failed",
                    )
                )
            except ValidationError as exc:
                raise FormatError(f"line {lineno}: {exc}") from None
            continue
        values = []
        for column, text in zip(RESULTS_HEADER[3:], metric_text):
            value = _parse_float(text, lineno, column)
            if not 0.0 <= value <= 1.0:
                raise ValidationError(
                    f"line {lineno}: {column} {text} outside [0, 1]"
                )
            values.append(value)
        try:
            rows.append(
                ResultRow(
                    model=model, protocol=protocol, held_out=held_out,
                    eer=values[0], bpcer10=values[1],
                    bpcer20=values[2], bpcer100=values[3],
                )
            )
        except ValidationError as exc:
            raise FormatError(f"line {lineno}: {exc}") from None
    return rows


def render_results_table(rows):
    """Fixed-width text table with percentages, mirroring the CSV rows."""
    headers = (
        "Model", "Protocol", "Held-out",
        "EER (%)", "BPCER10 (%)", "BPCER20 (%)", "BPCER100 (%)",
    )
    body = []
    for row in rows:
        if row.error:
            body.append(
                (row.model, row.protocol, row.held_out,
                 f"FAILED: {row.error}", "", "", "")
            )
        else:
            body.append(
                (
                    row.model, row.protocol, row.held_out,
                    percent(row.eer), percent(row.bpcer10),
                    percent(row.bpcer20), percent(row.bpcer100),
                )
            )
    return render_table(headers, body, numeric_from=3)


def render_table(headers, body, *, numeric_from):
    """Two-space separated fixed-width table; numeric columns right-aligned."""
    widths = [
        max(len(str(headers[c])), *(len(str(r[c])) for r in body)) if body
        else len(str(headers[c]))
        for c in range(len(headers))
    ]
    lines = []
    for record in (headers, tuple("-" * w for w in widths), *body):
        cells = []
        for c, cell in enumerate(record):
            cell = str(cell)
            if c >= numeric_from and record is not headers:
                cells.append(cell.rjust(widths[c]))
            else:
                cells.append(cell.ljust(widths[c]))
        lines.append("  ".join(cells).rstrip())
    return "\n".join(lines) + "\n"


# ------------------------------------------------------------- synth spec

def read_synth_spec(path, *, seed_override=None):
    return parse_spec(_read_text(path), seed_override=seed_override)
