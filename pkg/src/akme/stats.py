"""Welch t-tests, p-value combiners and default (JZS) Bayes factors."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize, special

from akme._backend import kernels
from akme.errors import InsufficientPointsError, InvalidParameterError

HARMONIC_EXACT_THRESHOLD = 0.01
HARMONIC_CLAMP = 1e-300
CAUCHY_CLAMP = 1e-15
DEFAULT_PRIOR_SCALE = np.sqrt(2.0) / 2.0
# 1 + digamma(1) - log(2/pi)
LANDAU_LOCATION_OFFSET = 1.0 + special.digamma(1.0) - np.log(2.0 / np.pi)
LANDAU_SCALE = np.pi / 2.0

# status codes for vectorised t-tests
OK, DEGENERATE_EQUAL, DEGENERATE_UNEQUAL = 0, 1, 2


@dataclass(frozen=True)
class SampleSummary:
    n: float
    mean: float
    variance: float

    def __post_init__(self):
        if self.n < 2:
            raise InsufficientPointsError(f"sample size must be >= 2, got {self.n}")
        if self.variance < 0:
            raise InvalidParameterError("variance must be non-negative")

    @classmethod
    def from_sample(cls, x) -> SampleSummary:
        x = np.asarray(x, dtype=float)
        if x.size < 2:
            raise InsufficientPointsError(f"sample size must be >= 2, got {x.size}")
        return cls(x.size, float(x.mean()), float(x.var(ddof=1)))


@dataclass(frozen=True)
class TTestResult:
    t: float
    df: float
    p: float
    status: str = "ok"

    @property
    def degenerate(self) -> bool:
        return self.status != "ok"


@dataclass(frozen=True)
class BayesFactorResult:
    bf10: float
    prior_scale: float


@dataclass(frozen=True)
class CombinedP:
    p: float
    method: str
    branch: str = ""
    clamped: bool = False

    def __float__(self):
        return self.p


def student_t_sf2(t, df):
    """Two-sided Student-t tail probability via the regularised incomplete beta."""
    t = np.asarray(t, dtype=float)
    df = np.asarray(df, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        x = df / (df + t * t)
    p = special.betainc(0.5 * df, 0.5, x)
    return np.clip(p, 0.0, 1.0)


def welch_arrays(mean_a, var_a, n_a, mean_b, var_b, n_b):
    """Vectorised Welch test. Returns ``(t, df, p, status)`` arrays.

    ``n_a``/``n_b`` may be non-integer effective sample sizes; they scale the
    standard error and enter the Welch-Satterthwaite degrees of freedom.
    """
    mean_a, var_a, mean_b, var_b = np.broadcast_arrays(
        *(np.asarray(v, dtype=float) for v in (mean_a, var_a, mean_b, var_b)))
    if np.any(np.asarray(n_a) < 2) or np.any(np.asarray(n_b) < 2):
        raise InsufficientPointsError("Welch test needs at least 2 observations per sample")
    va = var_a / n_a
    vb = var_b / n_b
    se2 = va + vb
    diff = mean_a - mean_b
    degenerate = se2 <= 0
    status = np.zeros(diff.shape, dtype=np.int8)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = diff / np.sqrt(se2)
        df = se2 * se2 / (va * va / (n_a - 1) + vb * vb / (n_b - 1))
    p = student_t_sf2(t, df)
    if np.any(degenerate):
        equal = degenerate & (diff == 0)
        unequal = degenerate & (diff != 0)
        status[equal] = DEGENERATE_EQUAL
        status[unequal] = DEGENERATE_UNEQUAL
        with np.errstate(invalid="ignore"):
            t = np.where(equal, 0.0, np.where(unequal, np.sign(diff) * np.inf, t))
        df = np.where(degenerate, np.asarray(n_a + n_b - 2.0) * np.ones_like(df), df)
        p = np.where(equal, 1.0, np.where(unequal, 0.0, p))
    return t, df, p, status


def welch_t_test(a: SampleSummary, b: SampleSummary) -> TTestResult:
    t, df, p, status = welch_arrays(a.mean, a.variance, a.n, b.mean, b.variance, b.n)
    label = {OK: "ok", DEGENERATE_EQUAL: "degenerate-equal",
             DEGENERATE_UNEQUAL: "degenerate-unequal"}[int(status)]
    return TTestResult(float(t), float(df), float(p), label)


def pooled_t(mean_a, var_a, n_a, mean_b, var_b, n_b):
    """Equal-variance two-sample t statistic (the statistic the JZS model uses)."""
    sp2 = ((n_a - 1) * np.asarray(var_a) + (n_b - 1) * np.asarray(var_b)) / (n_a + n_b - 2)
    with np.errstate(divide="ignore", invalid="ignore"):
        return (np.asarray(mean_a) - np.asarray(mean_b)) / np.sqrt(sp2 * (1.0 / n_a + 1.0 / n_b))


# -- Landau tail used by the harmonic mean p-value ---------------------------

def _zolotarev_log_v(theta):
    # alpha = 1, beta = 1 kernel: V = (2/pi) (pi/2 + theta)/cos(theta) exp((pi/2 + theta) tan(theta))
    a = np.pi / 2 + theta
    return np.log(2.0 / np.pi) + np.log(a) - np.log(np.cos(theta)) + a * np.tan(theta)


def stable1_sf(z: float) -> float:
    """Survival function of the standard totally skewed stable law with
    alpha = 1 (characteristic function exp(-|t| (1 + i (2/pi) sign(t) log|t|)))."""
    shift = -np.pi * z / 2.0

    def integrand(theta):
        with np.errstate(over="ignore"):
            return -np.expm1(-np.exp(shift + _zolotarev_log_v(theta)))

    eps = 1e-15
    lo, hi = -np.pi / 2 + eps, np.pi / 2 - eps
    # log V increases from -inf to +inf; the integrand drops from 1 to 0 around
    # log V = -shift, so split there (it is very narrow for large z)
    g = lambda th: _zolotarev_log_v(th) + shift
    pieces = [lo, hi]
    if g(lo) < 0 < g(hi):
        pieces = [lo, optimize.brentq(g, lo, hi, xtol=1e-15), hi]
    val = 0.0
    for a, b in zip(pieces, pieces[1:]):
        part, _ = integrate.quad(integrand, a, b, epsabs=1e-14, epsrel=1e-12, limit=200)
        val += part
    return float(min(max(val / np.pi, 0.0), 1.0))


def landau_sf(x: float, location: float, scale: float = LANDAU_SCALE) -> float:
    return stable1_sf((x - location) / scale)


def harmonic_h(x: float, D: int):
    """Map a harmonic mean of ``D`` p-values to a p-value. Returns ``(p, branch)``.

    Below ``HARMONIC_EXACT_THRESHOLD`` the harmonic mean is used as is; above
    it the asymptotic Landau tail of the mean of 1/p_i is evaluated.
    """
    if x < HARMONIC_EXACT_THRESHOLD:
        return x, "direct"
    loc = np.log(D) + LANDAU_LOCATION_OFFSET
    return min(1.0, landau_sf(1.0 / x, loc)), "landau"


def combine_harmonic(pvals) -> CombinedP:
    p = np.asarray(pvals, dtype=float).ravel()
    if p.size == 0:
        raise InvalidParameterError("no p-values to combine")
    if np.any((p < 0) | (p > 1)) or np.any(np.isnan(p)):
        raise InvalidParameterError("p-values must lie in [0, 1]")
    clamped = bool(np.any(p < HARMONIC_CLAMP))
    p = np.maximum(p, HARMONIC_CLAMP)
    hm = p.size / np.sum(1.0 / p)
    value, branch = harmonic_h(hm, p.size)
    return CombinedP(float(value), "harmonic", branch, clamped)


def _arccot_over_pi(y: float) -> float:
    # branch with values in (0, 1); written to keep precision for large |y|
    if y > 0:
        return float(np.arctan(1.0 / y) / np.pi)
    if y < 0:
        return float(1.0 - np.arctan(-1.0 / y) / np.pi)
    return 0.5


def combine_cauchy(pvals) -> CombinedP:
    p = np.asarray(pvals, dtype=float).ravel()
    if p.size == 0:
        raise InvalidParameterError("no p-values to combine")
    if np.any((p < 0) | (p > 1)) or np.any(np.isnan(p)):
        raise InvalidParameterError("p-values must lie in [0, 1]")
    if np.all(p == p[0]):
        # arccot(cot(pi p)) / pi == p exactly when all inputs agree
        return CombinedP(float(p[0]), "cauchy", "", False)
    lo, hi = CAUCHY_CLAMP, 1.0 - CAUCHY_CLAMP
    clamped = bool(np.any((p < lo) | (p > hi)))
    p = np.clip(p, lo, hi)
    # cot(pi p) = 1/tan(pi p); reflect p > 1/2 for accuracy near 1
    cot = np.where(p <= 0.5, 1.0 / np.tan(np.pi * p), -1.0 / np.tan(np.pi * (1.0 - p)))
    return CombinedP(_arccot_over_pi(float(np.mean(cot))), "cauchy", "", clamped)


def combine_bonferroni(pvals) -> CombinedP:
    p = np.asarray(pvals, dtype=float).ravel()
    if p.size == 0:
        raise InvalidParameterError("no p-values to combine")
    return CombinedP(float(min(1.0, p.size * p.min())), "bonferroni")


# -- Bayes factors -----------------------------------------------------------

def jzs_bayes_factor(t: float, n1: float, n2: float,
                     prior_scale: float = DEFAULT_PRIOR_SCALE) -> BayesFactorResult:
    """Two-sample JZS Bayes factor BF10 for a t statistic.

    Effect size delta ~ Cauchy(0, prior_scale), written as delta | g ~ N(0, g
    prior_scale^2) with g ~ InvGamma(1/2, 1/2); the g integral is done
    numerically on log g.
    """
    if n1 < 2 or n2 < 2:
        raise InsufficientPointsError("Bayes factor needs n1, n2 >= 2")
    if not np.isfinite(t):
        raise InvalidParameterError("t must be finite")
    if not prior_scale > 0:
        raise InvalidParameterError("prior_scale must be positive")
    bf = kernels.jzs_bf10(abs(float(t)), float(n1), float(n2), float(prior_scale))
    return BayesFactorResult(float(bf), float(prior_scale))


def mean_bayes_factor(bfs) -> float:
    b = np.asarray(bfs, dtype=float).ravel()
    if b.size == 0:
        raise InvalidParameterError("no Bayes factors to average")
    if np.any(b <= 0):
        raise InvalidParameterError("Bayes factors must be positive")
    return float(b.mean())
