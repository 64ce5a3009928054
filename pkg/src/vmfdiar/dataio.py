"""
Readers and writers for embeddings, segment lists and RTTM files.

Embeddings come either as CSV (one embedding per line, comma separated) or as
a little-endian binary file::

    b"SCE1" | uint32 n | uint32 d | n*d float64, row major

Segment files hold one ``start end [label]`` row per line. Rows of the
embedding file and of the segment file are index-aligned.
"""

import logging
import math
import struct
from pathlib import Path

import numpy as np

from .errors import LengthMismatch, NegativeDuration, ParseError, RaggedRows
from .metrics import Segment, SegmentTimeline

log = logging.getLogger(__name__)

MAGIC = b"SCE1"
_HEADER = struct.Struct("<4sII")


# -- embeddings -----------------------------------------------------------------

def _check_finite(values, path, line):
    if not all(math.isfinite(v) for v in values):
        raise ParseError("non-finite value", path, line)


def _read_csv_embeddings(path):
    rows = []
    width = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            text = raw.strip()
            if not text or text.startswith("#"):
                continue
            try:
                values = [float(tok) for tok in text.split(",")]
            except ValueError as exc:
                raise ParseError(f"bad number ({exc})", path, lineno) from None
            _check_finite(values, path, lineno)
            if width is None:
                width = len(values)
            elif len(values) != width:
                raise RaggedRows(f"expected {width} values, found {len(values)}", path, lineno)
            rows.append(values)
    if not rows:
        raise ParseError("no embeddings found", path)
    return np.array(rows, dtype=np.float64)


def _read_binary_embeddings(path):
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise ParseError("truncated header", path)
    magic, n, d = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise ParseError("bad magic bytes", path)
    if n < 1 or d < 1:
        raise ParseError(f"invalid shape n={n}, d={d}", path)
    body = data[_HEADER.size:]
    if len(body) != 8 * n * d:
        raise ParseError(f"expected {8 * n * d} bytes of values, found {len(body)}", path)
    X = np.frombuffer(body, dtype="<f8").reshape(n, d).astype(np.float64)
    bad = ~np.all(np.isfinite(X), axis=1)
    if bad.any():
        raise ParseError("non-finite value", path, int(np.flatnonzero(bad)[0]) + 1)
    return X


def read_embeddings(path):
    """Load an ``(n, d)`` embedding array, detecting the format from the magic bytes."""
    with open(path, "rb") as fh:
        head = fh.read(len(MAGIC))
    if head == MAGIC:
        return _read_binary_embeddings(path)
    return _read_csv_embeddings(path)


def write_embeddings(X, path, fmt=None):
    """Write embeddings as ``"binary"`` or ``"csv"`` (default from the suffix)."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if fmt is None:
        fmt = "csv" if str(path).endswith(".csv") else "binary"
    if fmt == "binary":
        n, d = X.shape
        with open(path, "wb") as fh:
            fh.write(_HEADER.pack(MAGIC, n, d))
            fh.write(X.astype("<f8").tobytes())
    elif fmt == "csv":
        with open(path, "w", encoding="utf-8") as fh:
            for row in X:
                fh.write(",".join(repr(float(v)) for v in row) + "\n")
    else:
        raise ValueError(f"unknown embedding format {fmt!r}")


# -- segments ---------------------------------------------------------------------

def read_segments(path):
    """Read ``start end [label]`` rows into a timeline sorted by start time."""
    segments = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            text = raw.strip()
            if not text or text.startswith("#"):
                continue
            fields = text.split()
            if len(fields) not in (2, 3):
                raise ParseError("expected 'start end [label]'", path, lineno)
            try:
                start, end = float(fields[0]), float(fields[1])
            except ValueError:
                raise ParseError("bad time value", path, lineno) from None
            _check_finite((start, end), path, lineno)
            if start < 0:
                raise ParseError("negative start time", path, lineno)
            if end <= start:
                raise NegativeDuration(f"end {end} is not after start {start}", path, lineno)
            label = fields[2] if len(fields) == 3 else None
            segments.append(Segment(start, end, label))
    segments.sort(key=lambda s: (s.start, s.end))
    return SegmentTimeline(segments)


def write_segments(timeline, path, with_labels=True):
    with open(path, "w", encoding="utf-8") as fh:
        for seg in timeline.segments:
            row = f"{seg.start:.3f} {seg.end:.3f}"
            if with_labels and seg.label is not None:
                row += f" {seg.label}"
            fh.write(row + "\n")


# -- RTTM ---------------------------------------------------------------------------

def read_rttm(path):
    """
    Read SPEAKER records of an RTTM file.

    Other record types are skipped; their number is logged as a warning.
    Segments keep file order.
    """
    segments = []
    skipped = 0
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            fields = raw.split()
            if not fields or fields[0].startswith("#"):
                continue
            if fields[0] != "SPEAKER":
                skipped += 1
                continue
            if len(fields) < 8:
                raise ParseError("SPEAKER record needs at least 8 fields", path, lineno)
            try:
                onset, dur = float(fields[3]), float(fields[4])
            except ValueError:
                raise ParseError("bad onset or duration", path, lineno) from None
            _check_finite((onset, dur), path, lineno)
            if onset < 0:
                raise ParseError("negative onset", path, lineno)
            if dur <= 0:
                raise NegativeDuration("non-positive duration", path, lineno)
            segments.append(Segment(onset, round(onset + dur, 9), fields[7]))
    if skipped:
        log.warning("%s: skipped %d non-SPEAKER line(s)", path, skipped)
    return SegmentTimeline(segments)


def write_rttm(timeline, path, file_id="rec", channel=1):
    """Write one SPEAKER record per segment with millisecond times."""
    with open(path, "w", encoding="utf-8") as fh:
        for seg in timeline.segments:
            onset = round(seg.start, 3)
            dur = round(round(seg.end, 3) - onset, 3)
            fh.write(
                f"SPEAKER {file_id} {channel} {onset:.3f} {dur:.3f} "
                f"<NA> <NA> {seg.label} <NA> <NA>\n"
            )


def check_aligned(X, timeline):
    if X.shape[0] != len(timeline):
        raise LengthMismatch(
            f"{X.shape[0]} embeddings but {len(timeline)} segments; files must be index-aligned"
        )
