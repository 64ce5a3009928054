"""Synthetic speaker-embedding data drawn from a known vMF mixture."""

import numpy as np

from .errors import InvalidArgument
from .metrics import OVERLAP, Segment, SegmentTimeline
from .vmf import VmfParams, make_rng, sample_vmf


def random_means(n_clusters, d, rng):
    """Independent uniformly random directions; nearly orthogonal when d is large."""
    g = rng.standard_normal((n_clusters, d))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def sample_mixture(means, kappas, weights, n, seed=0, rng=None):
    """
    Draw ``n`` labelled points from a vMF mixture.

    Labels are drawn i.i.d. from `weights`; points are then sampled
    component by component.

    Returns
    -------
    X : ndarray, shape (n, d)
    labels : ndarray of int, shape (n,)
    """
    means = np.atleast_2d(np.asarray(means, dtype=np.float64))
    kappas = np.asarray(kappas, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    k, d = means.shape
    if kappas.shape != (k,) or weights.shape != (k,):
        raise InvalidArgument("need one kappa and one weight per mean direction")
    if np.any(weights < 0) or not np.isclose(weights.sum(), 1.0, atol=1e-9):
        raise InvalidArgument("weights must be non-negative and sum to 1")
    if rng is None:
        rng = make_rng(seed)
    labels = rng.choice(k, size=n, p=weights / weights.sum())
    X = np.empty((n, d))
    for h in range(k):
        idx = np.flatnonzero(labels == h)
        if idx.size:
            X[idx] = sample_vmf(VmfParams(means[h], kappas[h]), idx.size, rng=rng)
    return X, labels


def synth_timeline(labels, names, rng, min_dur=0.5, max_dur=2.5, max_gap=0.3):
    """Back-to-back segments, one per label, with millisecond-rounded times."""
    segments = []
    t = 0.0
    for lab in labels:
        t = round(t + rng.uniform(0.0, max_gap), 3)
        end = round(t + rng.uniform(min_dur, max_dur), 3)
        segments.append(Segment(t, end, names[int(lab)]))
        t = end
    return SegmentTimeline(segments, duration=t)


def component_names(n_clusters, overlap=False):
    names = [f"spk{h}" for h in range(n_clusters)]
    if overlap:
        names[-1] = OVERLAP
    return names
