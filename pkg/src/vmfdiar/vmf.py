"""
von Mises-Fisher distribution on the unit hypersphere S^{d-1}.

Everything is evaluated in the log domain. The density of a d-variate vMF
with mean direction ``mu`` and concentration ``kappa`` is

    f(x | mu, kappa) = c_d(kappa) * exp(kappa * mu.x)
    c_d(kappa) = kappa^(d/2 - 1) / ((2 pi)^(d/2) * I_{d/2-1}(kappa))

where I_v is the modified Bessel function of the first kind. For the
concentrations met in speaker clustering (hundreds to 1e5) I_v(kappa)
overflows double precision, hence :func:`log_bessel_i`.
"""

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import gammaln

from .errors import DimensionMismatch, EmptyCluster, InvalidArgument

KAPPA_MAX = 1e5
RBAR_CLAMP = 1.0 - 1e-12

# orders at or above this use the uniform asymptotic expansion
DEBYE_MIN_ORDER = 1000.0

_LOG_2PI = math.log(2.0 * math.pi)


# -- Bessel functions ---------------------------------------------------------

def _log_bessel_series(v, x):
    """ln I_v(x) from the ascending series, summed in the log domain.

    The terms (x/2)^(2k) / (k! Gamma(k+v+1)) are unimodal in k with a peak
    near k* = (sqrt(v^2 + x^2) - v) / 2 and a width of order sqrt(k*), so
    only a window around the peak contributes at double precision.
    """
    half_log = math.log(0.5 * x)
    peak = 0.5 * (math.hypot(v, x) - v)
    width = int(10.0 * math.sqrt(peak + 1.0)) + 20
    lo = max(0, int(peak) - width)
    hi = int(peak) + width
    k = np.arange(lo, hi + 1, dtype=np.float64)
    logs = 2.0 * k * half_log - gammaln(k + 1.0) - gammaln(k + v + 1.0)
    i_max = int(np.argmax(logs))
    top = logs[i_max]
    rest = np.exp(np.delete(logs, i_max) - top)
    return v * half_log + top + math.log1p(float(rest.sum()))


def _log_bessel_debye(v, x):
    """ln I_v(x) from the uniform asymptotic expansion in large order."""
    z = x / v
    root = math.sqrt(1.0 + z * z)
    t = 1.0 / root
    eta = root + math.log(z) - math.log1p(root)
    t2 = t * t
    u1 = t * (3.0 - 5.0 * t2) / 24.0
    u2 = t2 * (81.0 - 462.0 * t2 + 385.0 * t2 * t2) / 1152.0
    u3 = t * t2 * (30375.0 - 369603.0 * t2 + 765765.0 * t2**2 - 425425.0 * t2**3) / 414720.0
    u4 = t2 * t2 * (
        4465125.0
        - 94121676.0 * t2
        + 349922430.0 * t2**2
        - 446185740.0 * t2**3
        + 185910725.0 * t2**4
    ) / 39813120.0
    corr = u1 / v + u2 / v**2 + u3 / v**3 + u4 / v**4
    return v * eta - 0.5 * math.log(2.0 * math.pi * v) + 0.5 * math.log(t) + math.log1p(corr)


def log_bessel_i(order, x):
    """
    Natural log of the modified Bessel function of the first kind.

    Parameters
    ----------
    order : float
        Non-negative order v.
    x : float
        Non-negative argument.

    Returns
    -------
    float
        ln I_v(x). ``-inf`` for ``x == 0`` and ``v > 0``.

    Notes
    -----
    Orders below 1000 use the power series, summed over the window of terms
    that matter; larger orders use the uniform (Debye) asymptotic expansion,
    whose truncation error there is below 1e-15. Both are finite for
    x <= 1e6, v <= 1e4.
    """
    v = float(order)
    x = float(x)
    if not (v >= 0.0 and x >= 0.0) or math.isinf(v) or math.isinf(x):
        raise InvalidArgument(f"log_bessel_i needs finite order >= 0 and x >= 0, got ({order}, {x})")
    if x == 0.0:
        return 0.0 if v == 0.0 else -math.inf
    if v >= DEBYE_MIN_ORDER:
        return _log_bessel_debye(v, x)
    return _log_bessel_series(v, x)


def bessel_ratio(d, kappa):
    """A_d(kappa) = I_{d/2}(kappa) / I_{d/2-1}(kappa), the expected cosine to the mean."""
    if d < 2 or not kappa > 0.0:
        raise InvalidArgument(f"bessel_ratio needs d >= 2 and kappa > 0, got d={d}, kappa={kappa}")
    nu = 0.5 * d
    return math.exp(log_bessel_i(nu, kappa) - log_bessel_i(nu - 1.0, kappa))


# -- density ------------------------------------------------------------------

def log_norm_const(d, kappa):
    """ln c_d(kappa); at kappa = 0 the log of the uniform density 1 / |S^{d-1}|."""
    if int(d) != d or d < 2:
        raise InvalidArgument(f"dimension must be an integer >= 2, got {d}")
    kappa = float(kappa)
    if not kappa >= 0.0:
        raise InvalidArgument(f"kappa must be >= 0, got {kappa}")
    half = 0.5 * d
    if kappa == 0.0:
        return math.lgamma(half) - math.log(2.0) - half * math.log(math.pi)
    return (half - 1.0) * math.log(kappa) - half * _LOG_2PI - log_bessel_i(half - 1.0, kappa)


@dataclass(frozen=True)
class VmfParams:
    """Mean direction and concentration of one vMF component."""

    mu: np.ndarray
    kappa: float

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=np.float64)
        if mu.ndim != 1 or mu.shape[0] < 2:
            raise InvalidArgument("mu must be a vector of dimension >= 2")
        if abs(np.linalg.norm(mu) - 1.0) > 1e-12:
            raise InvalidArgument("mu must have unit norm")
        if not 0.0 <= self.kappa <= KAPPA_MAX:
            raise InvalidArgument(f"kappa={self.kappa} outside [0, {KAPPA_MAX}]")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "kappa", float(self.kappa))

    @property
    def d(self):
        return self.mu.shape[0]


def log_density(params, x):
    """Log vMF density at one point ``(d,)`` or at each row of ``(n, d)``."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != params.d:
        raise DimensionMismatch(f"point dimension {x.shape[-1]} != {params.d}")
    lc = log_norm_const(params.d, params.kappa)
    out = lc + params.kappa * (x @ params.mu)
    return float(out) if np.ndim(out) == 0 else out


# -- concentration estimates ----------------------------------------------------

def estimate_kappa(rbar, d):
    """
    Closed-form concentration estimate from the mean resultant length.

    ``kappa = (rbar * d - rbar**3) / (1 - rbar**2)``, clamped to
    ``[0, KAPPA_MAX]``. Values of `rbar` within 1e-12 of 1 (singleton or
    coincident clusters) give ``KAPPA_MAX``.
    """
    r = float(rbar)
    if r >= RBAR_CLAMP:
        return KAPPA_MAX
    if r <= 0.0:
        return 0.0
    kappa = (r * d - r**3) / (1.0 - r * r)
    return min(max(kappa, 0.0), KAPPA_MAX)


def _bessel_ratio_slope(d, kappa, a):
    # dA/dkappa = 1 - A^2 - (d - 1) A / kappa
    return 1.0 - a * a - (d - 1.0) * a / kappa


@lru_cache(maxsize=None)
def _ratio_at_cap(d):
    return bessel_ratio(d, KAPPA_MAX)


def solve_kappa(rbar, d, tol=1e-11, max_iter=100):
    """
    Maximum-likelihood concentration: solve ``bessel_ratio(d, kappa) == rbar``.

    Safeguarded Newton iteration started from :func:`estimate_kappa`, falling
    back to bisection whenever a step leaves the current bracket.
    """
    r = float(rbar)
    if r <= 0.0:
        return 0.0
    if r >= RBAR_CLAMP or r >= _ratio_at_cap(d):
        return KAPPA_MAX
    lo, hi = 0.0, KAPPA_MAX
    kappa = min(max(estimate_kappa(r, d), 1e-8), KAPPA_MAX)
    for _ in range(max_iter):
        a = bessel_ratio(d, kappa)
        f = a - r
        if f > 0.0:
            hi = kappa
        else:
            lo = kappa
        if f == 0.0:
            return kappa
        slope = _bessel_ratio_slope(d, kappa, a)
        step = f / slope if slope > 0.0 else math.inf
        new = kappa - step
        if not lo < new < hi:
            new = 0.5 * (lo + hi)
        if abs(new - kappa) <= tol * max(kappa, 1.0):
            return new
        kappa = new
    return kappa


# -- resultants -------------------------------------------------------------------

@dataclass(frozen=True)
class ResultantSummary:
    resultant: np.ndarray
    count_mass: float
    rbar: float


def mean_resultant(points, weights=None):
    """
    Weighted resultant of unit vectors and its mean length.

    Raises
    ------
    EmptyCluster
        If the weights sum to zero.
    """
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if weights is None:
        weights = np.ones(points.shape[0])
    weights = np.asarray(weights, dtype=np.float64)
    if weights.shape != (points.shape[0],) or points.shape[0] < 1:
        raise DimensionMismatch("need one weight per point and at least one point")
    mass = float(weights.sum())
    if mass <= 0.0:
        raise EmptyCluster("resultant of an empty cluster")
    resultant = weights @ points
    rbar = float(np.linalg.norm(resultant)) / mass
    return ResultantSummary(resultant=resultant, count_mass=mass, rbar=rbar)


# -- sampling ---------------------------------------------------------------------

def make_rng(seed):
    """Counter-based generator used everywhere a seed is accepted."""
    return np.random.Generator(np.random.Philox(int(seed)))


def _sample_cosines(kappa, d, n, rng):
    # Wood (1994) rejection sampler for w = mu.x
    m = d - 1.0
    b = m / (math.sqrt(4.0 * kappa * kappa + m * m) + 2.0 * kappa)
    x0 = (1.0 - b) / (1.0 + b)
    c = kappa * x0 + m * math.log(1.0 - x0 * x0)
    out = np.empty(n)
    filled = 0
    while filled < n:
        want = n - filled
        batch = max(16, int(1.3 * want))
        z = rng.beta(0.5 * m, 0.5 * m, size=batch)
        u = rng.uniform(size=batch)
        w = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z)
        ok = kappa * w + m * np.log1p(-x0 * w) - c >= np.log(u)
        acc = w[ok][:want]
        out[filled:filled + acc.size] = acc
        filled += acc.size
    return out


def sample_vmf(params, n, seed=0, rng=None):
    """
    Draw ``n`` points from a vMF distribution.

    Identical ``(params, n, seed)`` give identical output. Pass `rng` instead
    of `seed` to draw from an existing generator.

    Returns
    -------
    ndarray, shape (n, d)
    """
    if n < 1:
        raise InvalidArgument("n must be >= 1")
    if rng is None:
        rng = make_rng(seed)
    d = params.d
    mu = params.mu
    w = _sample_cosines(params.kappa, d, n, rng)
    g = rng.standard_normal((n, d))
    g -= np.outer(g @ mu, mu)
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    x = w[:, None] * mu + np.sqrt(np.clip(1.0 - w * w, 0.0, None))[:, None] * g
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    return x
