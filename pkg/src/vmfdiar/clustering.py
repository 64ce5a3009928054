"""
Hard-assignment EM for mixtures of von Mises-Fisher distributions.

Each iteration runs a maximization step on the current partition (weights
from cluster sizes, mean directions from normalized resultants,
concentrations from the mean resultant length), then a hardened expectation
step that moves every point to the component with the largest
``ln alpha_h + ln c_d(kappa_h) + kappa_h * mu_h.x``. Only the ``n`` integer
labels are carried between iterations.

Spherical K-means is provided as the baseline. Holding all weights equal and
all concentrations equal to one shared value (``mode="movmf_tied"``) makes the
movMF iteration reduce to it exactly.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateWeight, DimensionMismatch, InvalidArgument, TooFewPoints
from .vmf import KAPPA_MAX, VmfParams, estimate_kappa, log_norm_const, make_rng, solve_kappa

MODES = ("movmf", "spherical_kmeans", "movmf_tied")
KAPPA_MODES = ("approx", "exact")


@dataclass(frozen=True)
class MixtureModel:
    """Weights, mean directions (rows of ``means``) and concentrations."""

    weights: np.ndarray
    means: np.ndarray
    kappas: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        m = np.atleast_2d(np.asarray(self.means, dtype=np.float64))
        k = np.asarray(self.kappas, dtype=np.float64)
        if not (w.shape == k.shape == (m.shape[0],)):
            raise DimensionMismatch("weights, means and kappas disagree on the number of components")
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise InvalidArgument("mixture weights must be non-negative and sum to 1")
        if np.any(k < 0) or np.any(k > KAPPA_MAX):
            raise InvalidArgument(f"concentrations must lie in [0, {KAPPA_MAX}]")
        if np.any(np.abs(np.linalg.norm(m, axis=1) - 1.0) > 1e-12):
            raise InvalidArgument("mean directions must have unit norm")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "means", m)
        object.__setattr__(self, "kappas", k)

    @property
    def n_clusters(self):
        return self.weights.shape[0]

    @property
    def d(self):
        return self.means.shape[1]

    @property
    def components(self):
        return [VmfParams(mu, kappa) for mu, kappa in zip(self.means, self.kappas)]

    def log_offsets(self):
        """Per-component ``ln alpha_h + ln c_d(kappa_h)``; -inf for zero weight."""
        with np.errstate(divide="ignore"):
            log_w = np.log(self.weights)
        lc = np.array([log_norm_const(self.d, k) for k in self.kappas])
        return log_w + lc


@dataclass
class ClusterConfig:
    n_clusters: int
    max_iters: int = 200
    rel_tol: float = 1e-6
    seed: int = 0
    mode: str = "movmf"
    kappa_mode: str = "approx"
    # shared concentration for movmf_tied, and the value spherical K-means reports
    tied_kappa: float = 1.0
    record_history: bool = False

    def __post_init__(self):
        if self.n_clusters < 1:
            raise InvalidArgument("n_clusters must be >= 1")
        if self.max_iters < 1:
            raise InvalidArgument("max_iters must be >= 1")
        if not self.rel_tol > 0:
            raise InvalidArgument("rel_tol must be > 0")
        if self.mode not in MODES:
            raise InvalidArgument(f"mode must be one of {MODES}")
        if self.kappa_mode not in KAPPA_MODES:
            raise InvalidArgument(f"kappa_mode must be one of {KAPPA_MODES}")
        if not 0.0 < self.tied_kappa <= KAPPA_MAX:
            raise InvalidArgument("tied_kappa must lie in (0, KAPPA_MAX]")


@dataclass
class ClusteringResult:
    labels: np.ndarray
    model: MixtureModel
    objective_trace: list
    iterations: int
    converged: bool
    # labels after the initial assignment and after every iteration, if recorded
    label_history: list = field(default=None, repr=False)


def _check_points(X, n_clusters=None):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise DimensionMismatch("points must be a 2-D array (n, d)")
    if n_clusters is not None and X.shape[0] < n_clusters:
        raise TooFewPoints(f"{X.shape[0]} points cannot form {n_clusters} clusters")
    return X


# -- scores and objective -----------------------------------------------------------

def log_scores(model, X):
    """``(n, N_c)`` matrix of ``ln alpha_h + ln f_h(x_i)``."""
    X = _check_points(X)
    if X.shape[1] != model.d:
        raise DimensionMismatch(f"points have dimension {X.shape[1]}, model has {model.d}")
    return model.log_offsets() + (X @ model.means.T) * model.kappas


def e_step_hard(model, X):
    """
    Hard assignment of every point to its highest-scoring component.

    Components with zero weight never win. Exact ties go to the lowest index.
    """
    if not np.any(model.weights > 0):
        raise DegenerateWeight("every component has zero weight")
    return np.argmax(log_scores(model, X), axis=1)


def objective(model, X, labels):
    """Complete-data log-likelihood ``sum_i ln(alpha_z f_z(x_i))`` of a labelling."""
    X = _check_points(X)
    labels = np.asarray(labels)
    if X.shape[1] != model.d or labels.shape != (X.shape[0],):
        raise DimensionMismatch("labels, points and model are inconsistent")
    cos = np.einsum("ij,ij->i", X, model.means[labels])
    terms = model.log_offsets()[labels] + model.kappas[labels] * cos
    return math.fsum(terms.tolist())


def mixture_log_density(model, x):
    """Log of the mixture density, by the max-shifted log-sum-exp."""
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    s = log_scores(model, np.atleast_2d(x))
    top = s.max(axis=1, keepdims=True)
    out = top[:, 0] + np.log(np.exp(s - top).sum(axis=1))
    return float(out[0]) if single else out


# -- maximization step ------------------------------------------------------------

def _cluster_sums(X, labels, n_clusters):
    counts = np.bincount(labels, minlength=n_clusters)
    sums = np.zeros((n_clusters, X.shape[1]))
    for h in range(n_clusters):
        if counts[h]:
            sums[h] = X[labels == h].sum(axis=0)
    return counts, sums


def _directions(sums, counts, d):
    norms = np.linalg.norm(sums, axis=1)
    means = np.zeros((sums.shape[0], d))
    means[:, 0] = 1.0
    ok = norms > 0
    means[ok] = sums[ok] / norms[ok, None]
    means[ok] /= np.linalg.norm(means[ok], axis=1, keepdims=True)
    return means, norms


def _estimate(X, labels, n_clusters, kappa_mode, tied_kappa=None):
    n, d = X.shape
    counts, sums = _cluster_sums(X, labels, n_clusters)
    means, norms = _directions(sums, counts, d)
    if tied_kappa is not None:
        weights = np.full(n_clusters, 1.0 / n_clusters)
        kappas = np.full(n_clusters, float(tied_kappa))
        return MixtureModel(weights, means, kappas), counts
    weights = counts / n
    weights /= weights.sum()
    kappas = np.zeros(n_clusters)
    solve = solve_kappa if kappa_mode == "exact" else estimate_kappa
    for h in range(n_clusters):
        if counts[h]:
            kappas[h] = solve(norms[h] / counts[h], d)
    return MixtureModel(weights, means, kappas), counts


def _reseed_empty(labels, counts, own_scores):
    """Move the worst-fitting points into empty clusters, one per empty cluster.

    Only points from clusters with at least two members are eligible, so no
    new empty cluster is created.
    """
    labels = labels.copy()
    counts = counts.copy()
    order = np.argsort(own_scores, kind="stable")
    for h in np.flatnonzero(counts == 0):
        for i in order:
            if counts[labels[i]] >= 2:
                counts[labels[i]] -= 1
                labels[i] = h
                counts[h] = 1
                break
    return labels


def _m_step(X, labels, n_clusters, kappa_mode, tied_kappa=None):
    labels = np.asarray(labels)
    model, counts = _estimate(X, labels, n_clusters, kappa_mode, tied_kappa)
    if np.all(counts > 0):
        return model, labels
    own = log_scores(model, X)[np.arange(X.shape[0]), labels]
    labels = _reseed_empty(labels, counts, own)
    model, counts = _estimate(X, labels, n_clusters, kappa_mode, tied_kappa)
    return model, labels


def m_step(X, labels, n_clusters, kappa_mode="approx"):
    """
    Re-estimate all mixture parameters from a hard partition.

    An empty cluster is reseeded with the point that has the lowest log-score
    under its current component (taken from a cluster of size >= 2), giving
    it weight 1/n.
    """
    X = _check_points(X, n_clusters)
    if kappa_mode not in KAPPA_MODES:
        raise InvalidArgument(f"kappa_mode must be one of {KAPPA_MODES}")
    return _m_step(X, labels, n_clusters, kappa_mode)[0]


# -- initialization -----------------------------------------------------------------

def farthest_point_seeds(X, n_clusters, seed):
    """Indices of greedy farthest-point seeds in cosine distance.

    The first seed is drawn from ``seed``; each next one maximizes the cosine
    distance to its nearest chosen seed (lowest index on ties).
    """
    X = _check_points(X, n_clusters)
    n = X.shape[0]
    first = int(make_rng(seed).integers(n))
    chosen = [first]
    nearest = 1.0 - X @ X[first]
    nearest[first] = -np.inf
    for _ in range(1, n_clusters):
        nxt = int(np.argmax(nearest))
        chosen.append(nxt)
        nearest = np.minimum(nearest, 1.0 - X @ X[nxt])
        nearest[chosen] = -np.inf
    return np.array(chosen)


def _initial_labels(X, n_clusters, seed):
    seeds = farthest_point_seeds(X, n_clusters, seed)
    return np.argmax(X @ X[seeds].T, axis=1)


def init_model(X, n_clusters, seed=0, kappa_mode="approx"):
    """
    Deterministic starting model.

    Farthest-point seeds define a first partition by maximum cosine; one
    maximization step on that partition gives the weights, mean directions
    and concentrations.
    """
    X = _check_points(X, n_clusters)
    labels = _initial_labels(X, n_clusters, seed)
    return m_step(X, labels, n_clusters, kappa_mode)


# -- drivers ----------------------------------------------------------------------

def _stop(trace, new, old, rel_tol):
    if np.array_equal(new, old):
        return True
    prev, cur = trace[-2], trace[-1]
    return cur - prev <= rel_tol * abs(prev)


def _tie(model, kappa):
    k = model.n_clusters
    return MixtureModel(np.full(k, 1.0 / k), model.means, np.full(k, float(kappa)))


def fit_movmf(X, config, init=None):
    """
    Cluster unit vectors with hard-assignment EM for a vMF mixture.

    Parameters
    ----------
    X : ndarray, shape (n, d)
        Length-normalized embeddings.
    config : ClusterConfig
        ``mode`` must be ``"movmf"`` or ``"movmf_tied"``.
    init : MixtureModel, optional
        Starting model; defaults to :func:`init_model` with ``config.seed``.

    Returns
    -------
    ClusteringResult
        ``objective_trace[0]`` is the objective after the first assignment,
        then one entry per iteration.
    """
    if config.mode == "spherical_kmeans":
        return fit_spherical_kmeans(X, config)
    X = _check_points(X, config.n_clusters)
    nc = config.n_clusters
    tied = config.tied_kappa if config.mode == "movmf_tied" else None
    model = init if init is not None else init_model(X, nc, config.seed, config.kappa_mode)
    if model.d != X.shape[1] or model.n_clusters != nc:
        raise DimensionMismatch("initial model does not match the data or n_clusters")
    if tied is not None:
        model = _tie(model, tied)

    labels = e_step_hard(model, X)
    trace = [objective(model, X, labels)]
    history = [labels] if config.record_history else None
    converged = False
    it = 0
    while it < config.max_iters:
        it += 1
        model, _ = _m_step(X, labels, nc, config.kappa_mode, tied)
        new = e_step_hard(model, X)
        trace.append(objective(model, X, new))
        if history is not None:
            history.append(new)
        done = _stop(trace, new, labels, config.rel_tol)
        labels = new
        if done:
            converged = True
            break
    return ClusteringResult(labels, model, trace, it, converged, history)


def fit_spherical_kmeans(X, config, init=None):
    """
    Spherical K-means: max-cosine assignment, normalized-resultant centroids.

    Seeding and stopping rules are those of :func:`fit_movmf`. The returned
    model has uniform weights and every concentration set to
    ``config.tied_kappa``; nothing beyond the centroids is estimated. The
    objective trace is the mixture objective of that fixed model, an
    increasing affine function of the total within-cluster cosine.
    """
    X = _check_points(X, config.n_clusters)
    nc = config.n_clusters
    if init is None:
        centroids = init_model(X, nc, config.seed, "approx").means
    else:
        centroids = init.means
    kappa = config.tied_kappa

    def as_model(c):
        return MixtureModel(np.full(nc, 1.0 / nc), c, np.full(nc, kappa))

    labels = np.argmax(X @ centroids.T, axis=1)
    trace = [objective(as_model(centroids), X, labels)]
    history = [labels] if config.record_history else None
    converged = False
    it = 0
    while it < config.max_iters:
        it += 1
        centroids, _ = _update_centroids(X, labels, nc)
        new = np.argmax(X @ centroids.T, axis=1)
        trace.append(objective(as_model(centroids), X, new))
        if history is not None:
            history.append(new)
        done = _stop(trace, new, labels, config.rel_tol)
        labels = new
        if done:
            converged = True
            break
    return ClusteringResult(labels, as_model(centroids), trace, it, converged, history)


def _update_centroids(X, labels, nc):
    counts, sums = _cluster_sums(X, labels, nc)
    centroids, _ = _directions(sums, counts, X.shape[1])
    if np.all(counts > 0):
        return centroids, labels
    own = np.einsum("ij,ij->i", X, centroids[labels])
    labels = _reseed_empty(labels, counts, own)
    counts, sums = _cluster_sums(X, labels, nc)
    centroids, _ = _directions(sums, counts, X.shape[1])
    return centroids, labels


def fit(X, config, init=None):
    """Dispatch on ``config.mode``."""
    if config.mode == "spherical_kmeans":
        return fit_spherical_kmeans(X, config, init)
    return fit_movmf(X, config, init)


def within_cluster_cosine(X, labels, means):
    return float(np.einsum("ij,ij->i", np.asarray(X), np.asarray(means)[labels]).sum())

