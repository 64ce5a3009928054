import math

import mpmath
import numpy as np
import pytest

from oracles import log_c3
from vmfdiar.clustering import (
    ClusterConfig,
    MixtureModel,
    e_step_hard,
    farthest_point_seeds,
    fit_movmf,
    fit_spherical_kmeans,
    init_model,
    log_scores,
    m_step,
    mixture_log_density,
    objective,
    within_cluster_cosine,
)
from vmfdiar.errors import DegenerateWeight, DimensionMismatch, InvalidArgument, TooFewPoints
from vmfdiar.metrics import adjusted_rand_index
from vmfdiar.synth import random_means, sample_mixture
from vmfdiar.vmf import KAPPA_MAX, VmfParams, estimate_kappa, log_density, log_norm_const, make_rng


def mixture(d, nc, seed, n=300, kappa=(0.5, 4.0), weights=None):
    rng = make_rng(1000 + seed)
    means = random_means(nc, d, rng)
    kappas = rng.uniform(kappa[0] * d, kappa[1] * d, size=nc)
    if weights is None:
        weights = rng.dirichlet(np.full(nc, 2.0))
    return sample_mixture(means, kappas, weights, n, rng=rng)


def unit(*v):
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v)


# -- E-step ---------------------------------------------------------------------------

def test_e_step_picks_matching_mean():
    m = MixtureModel([0.5, 0.5], np.eye(3)[:2], [5.0, 5.0])
    assert e_step_hard(m, np.eye(3)[:1])[0] == 0
    assert e_step_hard(m, np.eye(3)[1:2])[0] == 1


def test_e_step_weight_breaks_equal_likelihood():
    x = unit(1.0, 1.0, 0.0)
    m = MixtureModel([0.7, 0.3], np.eye(3)[:2], [4.0, 4.0])
    # ln 0.7 > ln 0.3 with identical density terms
    assert e_step_hard(m, x[None])[0] == 0
    m = MixtureModel([0.3, 0.7], np.eye(3)[:2], [4.0, 4.0])
    assert e_step_hard(m, x[None])[0] == 1


def test_e_step_tie_goes_to_lowest_index():
    m = MixtureModel([0.5, 0.5], np.eye(3)[:2], [4.0, 4.0])
    assert e_step_hard(m, unit(1.0, 1.0, 0.0)[None])[0] == 0


def test_e_step_skips_zero_weight():
    m = MixtureModel([0.0, 1.0], np.eye(2), [10.0, 0.1])
    assert e_step_hard(m, np.eye(2)[:1])[0] == 1
    with pytest.raises(DimensionMismatch):
        e_step_hard(m, np.ones((1, 3)) / math.sqrt(3))


def test_all_zero_weights_rejected():
    with pytest.raises(InvalidArgument):
        MixtureModel([0.0, 0.0], np.eye(2), [1.0, 1.0])


def test_e_step_degenerate_weight():
    m = MixtureModel([1.0], np.eye(2)[:1], [1.0])
    object.__setattr__(m, "weights", np.zeros(1))
    with pytest.raises(DegenerateWeight):
        e_step_hard(m, np.eye(2))


def test_e_step_cost_is_n_times_nc_scores():
    X, _ = mixture(10, 4, 0, n=50)
    m = init_model(X, 4, 0)
    assert log_scores(m, X).shape == (50, 4)


# -- M-step ---------------------------------------------------------------------------

def test_m_step_identical_points():
    u = unit(1.0, 2.0, 3.0)
    m = m_step(np.tile(u, (4, 1)), np.zeros(4, dtype=int), 1)
    np.testing.assert_allclose(m.means[0], u, atol=1e-15)
    assert m.weights[0] == 1.0
    assert m.kappas[0] == KAPPA_MAX


def test_m_step_weights_count_members():
    X, _ = mixture(5, 2, 1, n=100)
    labels = np.array([0] * 30 + [1] * 70)
    m = m_step(X, labels, 2)
    np.testing.assert_allclose(m.weights, [0.3, 0.7], rtol=0, atol=1e-15)


def test_m_step_two_basis_vectors():
    m = m_step(np.eye(3)[:2], np.array([0, 0]), 1)
    h = math.sqrt(2) / 2
    np.testing.assert_allclose(m.means[0], [h, h, 0.0], atol=1e-15)
    assert m.kappas[0] == pytest.approx((3 * h - h**3) / (1 - h * h), rel=1e-12)
    assert m.kappas[0] == pytest.approx(3.53553, abs=1e-5)


def test_m_step_exact_mode_solves_ratio():
    X, _ = mixture(10, 1, 2, n=200)
    m = m_step(X, np.zeros(200, dtype=int), 1, "exact")
    from vmfdiar.vmf import bessel_ratio, mean_resultant

    assert bessel_ratio(10, m.kappas[0]) == pytest.approx(mean_resultant(X).rbar, rel=1e-12)


def test_m_step_reseeds_empty_cluster():
    X, _ = mixture(8, 2, 3, n=60)
    labels = np.zeros(60, dtype=int)
    full = m_step(X, labels, 1)
    worst = int(np.argmin(log_density(full.components[0], X)))
    m = m_step(X, labels, 3)
    assert np.all(m.weights > 0)
    np.testing.assert_allclose(m.weights[1:], [1 / 60, 1 / 60], atol=1e-15)
    # first empty cluster takes the worst-fitting point
    np.testing.assert_allclose(m.means[1], X[worst], atol=1e-12)
    assert m.kappas[1] == KAPPA_MAX


# -- objective and mixture density ----------------------------------------------------

def test_objective_uniform_model():
    X, _ = mixture(4, 1, 4, n=25)
    m = MixtureModel([1.0], np.eye(4)[:1], [0.0])
    assert objective(m, X, np.zeros(25, dtype=int)) == pytest.approx(25 * log_norm_const(4, 0.0), rel=1e-14)


def test_objective_single_point_at_mode():
    mu = unit(0.3, -0.2, 0.9, 0.1)
    m = MixtureModel([1.0], mu[None], [7.0])
    assert objective(m, mu[None], np.zeros(1, dtype=int)) == pytest.approx(log_norm_const(4, 7.0) + 7.0, rel=1e-14)


def test_objective_hand_computed_four_points():
    mus = np.array([[0.0, 0.0, 1.0], [1.0, 0.0, 0.0]])
    X = np.array([unit(0.0, 0.1, 1.0), unit(0.0, -0.2, 1.0), unit(1.0, 0.3, 0.0), unit(1.0, 0.0, 0.1)])
    labels = np.array([0, 0, 1, 1])
    m = MixtureModel([0.25, 0.75], mus, [3.0, 8.0])
    want = 0.0
    for x, z in zip(X, labels):
        kappa = (3.0, 8.0)[z]
        want += math.log((0.25, 0.75)[z]) + log_c3(kappa) + kappa * float(mus[z] @ x)
    assert objective(m, X, labels) == pytest.approx(want, rel=1e-12)


def test_mixture_log_density_single_component():
    mu = unit(1.0, 1.0, 1.0)
    m = MixtureModel([1.0], mu[None], [5.0])
    x = unit(0.2, 0.5, -1.0)
    assert mixture_log_density(m, x) == pytest.approx(log_density(VmfParams(mu, 5.0), x), rel=1e-14)


def test_mixture_log_density_identical_components():
    mu = unit(1.0, 0.0, 2.0)
    m = MixtureModel([0.2, 0.8], np.stack([mu, mu]), [3.0, 3.0])
    x = unit(0.5, 0.5, 0.5)
    assert mixture_log_density(m, x) == pytest.approx(log_density(VmfParams(mu, 3.0), x), rel=1e-13)


def test_mixture_log_density_high_precision_oracle():
    mus = np.array([unit(1.0, 2.0, 0.5, -1.0), unit(-0.5, 0.3, 1.0, 0.2)])
    m = MixtureModel([0.35, 0.65], mus, [40.0, 900.0])
    x = unit(0.1, 0.8, 0.9, -0.3)
    mpmath.mp.dps = 50
    total = mpmath.mpf(0)
    for a, mu, k in zip((0.35, 0.65), mus, (40.0, 900.0)):
        k = mpmath.mpf(k)
        c = k ** (mpmath.mpf(4) / 2 - 1) / ((2 * mpmath.pi) ** 2 * mpmath.besseli(1, k))
        total += mpmath.mpf(a) * c * mpmath.exp(k * mpmath.fsum(mpmath.mpf(p) * q for p, q in zip(mu, x)))
    assert mixture_log_density(m, x) == pytest.approx(float(mpmath.log(total)), rel=1e-12)


# -- initialization -------------------------------------------------------------------

def test_init_single_cluster():
    X, _ = mixture(6, 2, 5, n=80)
    m = init_model(X, 1, seed=3)
    s = X.sum(axis=0)
    np.testing.assert_allclose(m.means[0], s / np.linalg.norm(s), atol=1e-14)
    assert m.weights[0] == 1.0
    assert m.kappas[0] == pytest.approx(estimate_kappa(np.linalg.norm(s) / 80, 6), rel=1e-12)


def test_init_one_cluster_per_point():
    X, _ = mixture(6, 2, 6, n=12)
    m = init_model(X, 12, seed=0)
    assert np.all(m.kappas == KAPPA_MAX)
    assert sorted(np.argmax(X @ m.means.T, axis=0)) == list(range(12))


def test_init_deterministic():
    X, _ = mixture(10, 4, 7)
    a, b = init_model(X, 4, seed=5), init_model(X, 4, seed=5)
    for f in ("weights", "means", "kappas"):
        assert np.array_equal(getattr(a, f), getattr(b, f))


def test_farthest_point_seeds_distinct():
    X, _ = mixture(10, 4, 8)
    seeds = farthest_point_seeds(X, 6, seed=1)
    assert len(set(seeds.tolist())) == 6


def test_too_few_points():
    with pytest.raises(TooFewPoints):
        init_model(np.eye(3), 4)
    with pytest.raises(TooFewPoints):
        fit_movmf(np.eye(3), ClusterConfig(4))


def test_config_validation():
    with pytest.raises(InvalidArgument):
        ClusterConfig(0)
    with pytest.raises(InvalidArgument):
        ClusterConfig(2, mode="kmeans")
    with pytest.raises(InvalidArgument):
        ClusterConfig(2, rel_tol=0)


# -- fitting ----------------------------------------------------------------------------

def test_fit_single_cluster_converges_fast():
    X, _ = mixture(10, 3, 9)
    r = fit_movmf(X, ClusterConfig(1))
    assert r.converged and r.iterations <= 2
    s = X.sum(axis=0)
    np.testing.assert_allclose(r.model.means[0], s / np.linalg.norm(s), atol=1e-14)


def test_fit_recovers_four_components():
    rng = make_rng(21)
    X, truth = sample_mixture(random_means(4, 50, rng), [50.0] * 4, [0.25] * 4, 2000, rng=rng)
    r = fit_movmf(X, ClusterConfig(4, seed=0))
    assert adjusted_rand_index(truth, r.labels) >= 0.95


@pytest.mark.parametrize("seed", range(5))
def test_exact_kappa_trace_is_monotone(seed):
    X, _ = mixture(20, 4, seed, kappa=(0.05, 0.5))
    r = fit_movmf(X, ClusterConfig(4, seed=seed, kappa_mode="exact"))
    assert np.all(np.diff(r.objective_trace) >= -1e-9)


@pytest.mark.parametrize("seed", range(5))
def test_result_invariants(seed):
    X, _ = mixture(10, 3, seed)
    for mode in ("movmf", "movmf_tied", "spherical_kmeans"):
        r = fit_movmf(X, ClusterConfig(3, seed=seed, mode=mode))
        assert abs(r.model.weights.sum() - 1.0) <= 1e-12
        assert np.all((r.model.kappas >= 0) & (r.model.kappas <= KAPPA_MAX))
        assert r.iterations >= 1
        assert len(r.objective_trace) == r.iterations + 1


def test_fit_deterministic():
    X, _ = mixture(10, 4, 11)
    a = fit_movmf(X, ClusterConfig(4, seed=3))
    b = fit_movmf(X, ClusterConfig(4, seed=3))
    assert np.array_equal(a.labels, b.labels)
    assert a.objective_trace == b.objective_trace


def test_partition_invariant_under_shuffling():
    X, _ = mixture(20, 4, 12, kappa=(0.2, 1.0))
    cfg = ClusterConfig(4, seed=2)
    init = init_model(X, 4, seed=2)
    base = fit_movmf(X, cfg, init=init)
    perm = np.random.default_rng(0).permutation(X.shape[0])
    shuffled = fit_movmf(X[perm], cfg, init=init)
    assert np.array_equal(shuffled.labels, base.labels[perm])


@pytest.mark.parametrize("tied_kappa", [1.0, 25.0, 400.0])
@pytest.mark.parametrize("seed", range(4))
def test_tied_mode_matches_spherical_kmeans(seed, tied_kappa):
    X, _ = mixture(30, 5, seed, kappa=(0.1, 0.6))
    cfg = ClusterConfig(5, seed=seed, tied_kappa=tied_kappa, record_history=True)
    tied = fit_movmf(X, ClusterConfig(**{**cfg.__dict__, "mode": "movmf_tied"}))
    skm = fit_spherical_kmeans(X, cfg)
    assert len(tied.label_history) == len(skm.label_history)
    for a, b in zip(tied.label_history, skm.label_history):
        assert np.array_equal(a, b)


def test_spherical_kmeans_separates_antipodal_caps():
    rng = make_rng(5)
    mu = unit(1.0, -2.0, 0.5, 0.0, 1.0)
    a = np.array([1] * 40 + [0] * 40)
    X = np.vstack([
        np.asarray(sample_mixture(mu[None], [30.0], [1.0], 40, rng=rng)[0]),
        np.asarray(sample_mixture(-mu[None], [30.0], [1.0], 40, rng=rng)[0]),
    ])
    r = fit_spherical_kmeans(X, ClusterConfig(2, seed=1))
    assert adjusted_rand_index(a, r.labels) == 1.0
    assert np.all(r.model.weights == 0.5)


@pytest.mark.parametrize("seed", range(20))
def test_spherical_kmeans_cosine_objective_non_decreasing(seed):
    X, _ = mixture(15, 6, seed, kappa=(0.05, 0.4))
    r = fit_spherical_kmeans(X, ClusterConfig(6, seed=seed, record_history=True))
    # rebuild centroids from each labelling and evaluate the total cosine
    values = []
    for labels in r.label_history[1:]:
        means = np.zeros((6, 15))
        for h in range(6):
            s = X[labels == h].sum(axis=0)
            if np.linalg.norm(s) > 0:
                means[h] = s / np.linalg.norm(s)
        values.append(within_cluster_cosine(X, labels, means))
    assert np.all(np.diff(values) >= -1e-9)
