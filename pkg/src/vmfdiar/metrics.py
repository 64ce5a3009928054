"""
Diarization scoring on a fixed frame grid.

Reference and system timelines are sampled at frame midpoints (10 ms frames
by default). A frame where two or more speakers are active gets the single
label :data:`OVERLAP`, which is then scored like any other speaker cluster;
frames with no speaker get :data:`NONSPEECH`. No collar is applied unless
asked for.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import DurationMismatch, EmptyTable, InvalidArgument, LengthMismatch

NONSPEECH = "<NONSPEECH>"
OVERLAP = "OVERLAP"
FRAME_SIZE = 0.010

# integer time grid used for midpoint tests, in nanoseconds
_TICKS = 1_000_000_000


@dataclass(frozen=True)
class Segment:
    start: float
    end: float
    label: str = None

    def __post_init__(self):
        if not self.start >= 0.0:
            raise InvalidArgument(f"segment start {self.start} is negative")
        if not self.end > self.start:
            raise InvalidArgument(f"segment end {self.end} is not after start {self.start}")
        if self.label is not None and not str(self.label):
            raise InvalidArgument("segment label must be non-empty")

    @property
    def duration(self):
        return self.end - self.start


@dataclass(frozen=True)
class SegmentTimeline:
    segments: tuple
    duration: float = None

    def __post_init__(self):
        segs = tuple(self.segments)
        end = max((s.end for s in segs), default=0.0)
        dur = end if self.duration is None else float(self.duration)
        if end > dur + 1e-9:
            raise InvalidArgument(f"segment ends at {end}, after timeline duration {dur}")
        object.__setattr__(self, "segments", segs)
        object.__setattr__(self, "duration", dur)

    def __len__(self):
        return len(self.segments)

    @property
    def labels(self):
        return [s.label for s in self.segments]

    def relabel(self, labels):
        """Same boundaries, new labels (one per segment)."""
        if len(labels) != len(self.segments):
            raise LengthMismatch(f"{len(labels)} labels for {len(self.segments)} segments")
        segs = tuple(Segment(s.start, s.end, str(lab)) for s, lab in zip(self.segments, labels))
        return SegmentTimeline(segs, self.duration)

    def with_duration(self, duration):
        return SegmentTimeline(self.segments, duration)


@dataclass(frozen=True)
class FrameLabels:
    """Per-frame labels as integer codes into ``names``.

    ``names[0]`` is always NONSPEECH and ``names[1]`` always OVERLAP.
    """

    frame_size: float
    codes: np.ndarray
    names: tuple

    def __len__(self):
        return self.codes.shape[0]

    def as_strings(self):
        return [self.names[c] for c in self.codes]


def _ticks(t):
    return int(round(float(t) * _TICKS))


def n_frames(duration, frame_size=FRAME_SIZE):
    d, f = _ticks(duration), _ticks(frame_size)
    return -(-d // f)


def _frame_range(start, end, frame):
    # frames k whose midpoint (2k+1) * frame / 2 lies in [start, end)
    lo = max(0, -(-(2 * start - frame) // (2 * frame)))
    hi = max(0, -(-(2 * end - frame) // (2 * frame)))
    return lo, hi


def discretize(timeline, frame_size=FRAME_SIZE):
    """
    Sample a timeline at frame midpoints.

    Segments are half-open ``[start, end)``. Segments labelled OVERLAP mark
    overlap directly; otherwise a frame where two or more distinct labels are
    active becomes OVERLAP.
    """
    if not frame_size > 0:
        raise InvalidArgument("frame_size must be positive")
    frame = _ticks(frame_size)
    if frame <= 0:
        raise InvalidArgument("frame_size is below the timing resolution")
    total = n_frames(timeline.duration, frame_size)
    speakers = sorted({s.label for s in timeline.segments if s.label not in (OVERLAP, None)})
    names = (NONSPEECH, OVERLAP) + tuple(speakers)
    index = {name: i for i, name in enumerate(names)}
    active = {}
    for seg in timeline.segments:
        label = seg.label
        if label is None:
            raise InvalidArgument("cannot score an unlabelled segment")
        lo, hi = _frame_range(_ticks(seg.start), _ticks(seg.end), frame)
        hi = min(hi, total)
        if lo >= hi:
            continue
        mask = active.setdefault(label, np.zeros(total, dtype=bool))
        mask[lo:hi] = True
    codes = np.zeros(total, dtype=np.int64)
    count = np.zeros(total, dtype=np.int64)
    for label in sorted(active):
        mask = active[label]
        codes[mask] = index[label]
        count += mask
    codes[count >= 2] = index[OVERLAP]
    return FrameLabels(float(frame_size), codes, names)


@dataclass(frozen=True)
class ContingencyTable:
    """Co-occurrence counts; rows are reference labels, columns system labels."""

    counts: np.ndarray
    row_labels: tuple
    col_labels: tuple

    @property
    def row_sums(self):
        return self.counts.sum(axis=1)

    @property
    def col_sums(self):
        return self.counts.sum(axis=0)

    @property
    def total(self):
        return int(self.counts.sum())

    def transpose(self):
        return ContingencyTable(self.counts.T.copy(), self.col_labels, self.row_labels)


def contingency(ref, sys, include_nonspeech=True):
    """
    Count frames for every (reference label, system label) pair.

    Only labels that occur at least once get a row or column.
    """
    if len(ref) != len(sys):
        raise LengthMismatch(f"{len(ref)} reference frames vs {len(sys)} system frames")
    if not math.isclose(ref.frame_size, sys.frame_size, rel_tol=1e-12):
        raise LengthMismatch("frame sizes differ")
    r, s = ref.codes, sys.codes
    if not include_nonspeech:
        keep = (r != 0) | (s != 0)
        r, s = r[keep], s[keep]
    r_used = np.unique(r)
    s_used = np.unique(s)
    ri = np.searchsorted(r_used, r)
    si = np.searchsorted(s_used, s)
    counts = np.zeros((r_used.size, s_used.size), dtype=np.int64)
    np.add.at(counts, (ri, si), 1)
    return ContingencyTable(
        counts,
        tuple(ref.names[c] for c in r_used),
        tuple(sys.names[c] for c in s_used),
    )


def optimal_mapping(table):
    """
    One-to-one map from system labels to reference labels with maximal overlap.

    NONSPEECH takes no part in the assignment. Pairs with zero shared frames
    are dropped, so a system label may be left unmapped.

    Returns
    -------
    dict
        ``{system_label: reference_label}``.
    """
    rows = [i for i, lab in enumerate(table.row_labels) if lab != NONSPEECH]
    cols = [j for j, lab in enumerate(table.col_labels) if lab != NONSPEECH]
    if not rows or not cols:
        return {}
    sub = table.counts[np.ix_(rows, cols)]
    ri, ci = linear_sum_assignment(sub, maximize=True)
    return {
        table.col_labels[cols[j]]: table.row_labels[rows[i]]
        for i, j in zip(ri, ci)
        if sub[i, j] > 0
    }


def mapped_total(table, mapping):
    row = {lab: i for i, lab in enumerate(table.row_labels)}
    col = {lab: j for j, lab in enumerate(table.col_labels)}
    return int(sum(table.counts[row[r], col[s]] for s, r in mapping.items()))


@dataclass(frozen=True)
class DerBreakdown:
    phi_fa: float
    phi_miss: float
    phi_err: float
    phi_total: float

    @property
    def der(self):
        return (self.phi_fa + self.phi_miss + self.phi_err) / self.phi_total

    @property
    def der_percent(self):
        return 100.0 * self.der


def _collar_mask(timeline, total, frame, collar):
    keep = np.ones(total, dtype=bool)
    c = _ticks(collar)
    for seg in timeline.segments:
        for edge in (_ticks(seg.start), _ticks(seg.end)):
            lo, hi = _frame_range(edge - c, edge + c, frame)
            keep[lo:min(hi, total)] = False
    return keep


def compute_der(ref, sys, frame_size=FRAME_SIZE, collar=0.0):
    """
    Diarization error rate on the frame grid.

    Missed speech, false alarm and speaker error are measured in frames and
    converted to seconds. Speaker error counts frames where both sides have
    speech but the system label, after optimal mapping, differs from the
    reference label; OVERLAP is one more cluster label here. With
    ``collar > 0`` frames whose midpoint is within `collar` seconds of a
    reference boundary are not scored.

    Raises
    ------
    DurationMismatch
        If the timelines cover different numbers of frames.
    """
    if n_frames(ref.duration, frame_size) != n_frames(sys.duration, frame_size):
        raise DurationMismatch(
            f"reference lasts {ref.duration} s but system lasts {sys.duration} s"
        )
    rf = discretize(ref, frame_size)
    sf = discretize(sys, frame_size)
    r, s = rf.codes, sf.codes
    if collar > 0:
        keep = _collar_mask(ref, len(rf), _ticks(frame_size), collar)
        r, s = r[keep], s[keep]
        rf = FrameLabels(rf.frame_size, r, rf.names)
        sf = FrameLabels(sf.frame_size, s, sf.names)
    ref_speech = r != 0
    sys_speech = s != 0
    total = int(ref_speech.sum())
    if total == 0:
        raise EmptyTable("reference contains no speech to score")
    mapping = optimal_mapping(contingency(rf, sf))
    code_of = {name: i for i, name in enumerate(rf.names)}
    sys_to_ref = np.full(len(sf.names), -1, dtype=np.int64)
    for s_lab, r_lab in mapping.items():
        sys_to_ref[sf.names.index(s_lab)] = code_of[r_lab]
    both = ref_speech & sys_speech
    err = int(np.count_nonzero(both & (sys_to_ref[s] != r)))
    miss = int(np.count_nonzero(ref_speech & ~sys_speech))
    fa = int(np.count_nonzero(~ref_speech & sys_speech))
    tick = _ticks(frame_size)

    def secs(frames):
        return frames * tick / _TICKS

    return DerBreakdown(secs(fa), secs(miss), secs(err), secs(total))


def compute_mi(table):
    """Mutual information in bits between the row and column labellings."""
    n = table.counts.astype(np.float64)
    total = n.sum()
    if total <= 0:
        raise EmptyTable("contingency table has no frames")
    r = n.sum(axis=1, keepdims=True)
    s = n.sum(axis=0, keepdims=True)
    nz = n > 0
    ratio = (n * total) / (r * s)
    return float(np.sum(n[nz] / total * np.log2(ratio[nz])))


def entropy_bits(counts):
    p = np.asarray(counts, dtype=np.float64)
    p = p[p > 0] / p.sum()
    return float(-(p * np.log2(p)).sum())


def adjusted_rand_index(labels_true, labels_pred):
    """Chance-corrected Rand index between two partitions of the same items."""
    a = np.asarray(labels_true)
    b = np.asarray(labels_pred)
    if a.shape != b.shape:
        raise LengthMismatch("partitions cover different numbers of items")
    _, ai = np.unique(a, return_inverse=True)
    _, bi = np.unique(b, return_inverse=True)
    table = np.zeros((ai.max() + 1, bi.max() + 1), dtype=np.int64)
    np.add.at(table, (ai, bi), 1)

    def pairs(x):
        x = x.astype(np.float64)
        return float((x * (x - 1) / 2).sum())

    index = pairs(table)
    row = pairs(table.sum(axis=1))
    col = pairs(table.sum(axis=0))
    n_pairs = a.size * (a.size - 1) / 2
    expected = row * col / n_pairs if n_pairs else 0.0
    top = 0.5 * (row + col)
    if top == expected:
        return 1.0
    return (index - expected) / (top - expected)
