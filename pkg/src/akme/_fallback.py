"""Pure numpy/scipy implementations of the hot kernels.

Selected automatically when the compiled ``_core`` extension is missing, or
when ``AKME_PURE_PYTHON=1`` is set.
"""

import numpy as np
from scipy import integrate
from scipy.spatial import cKDTree

BACKEND = "python"


def phase_features(points, freqs, coefs):
    phase = points @ freqs.T
    out = np.empty((points.shape[0], 2 * freqs.shape[0]))
    out[:, 0::2] = coefs * np.sin(phase)
    out[:, 1::2] = coefs * np.cos(phase)
    return out


def feature_moments(points, freqs, coefs):
    if points.shape[0] == 0:
        raise ValueError("no points")
    feats = phase_features(points, freqs, coefs)
    mean = feats.mean(axis=0)
    if points.shape[0] > 1:
        var = feats.var(axis=0, ddof=1)
    else:
        var = np.full(feats.shape[1], np.nan)
    return mean, var


def hardcore_retain(points, marks, r):
    keep = np.ones(points.shape[0], dtype=bool)
    if points.shape[0] < 2:
        return keep
    pairs = cKDTree(points).query_pairs(r, output_type="ndarray")
    # query_pairs is inclusive at distance r; the compiled kernel is strict
    d2 = ((points[pairs[:, 0]] - points[pairs[:, 1]]) ** 2).sum(axis=1)
    pairs = pairs[d2 < r * r]
    i, j = pairs[:, 0], pairs[:, 1]
    loser = np.where(marks[i] > marks[j], i, j)
    keep[loser] = False
    return keep


def _jzs_log_integrand(u, t2, nr2, nu):
    with np.errstate(over="ignore"):
        a = nr2 * np.exp(u)
        return (-0.5 * np.log1p(a)
                - 0.5 * (nu + 1.0) * (np.log1p(t2 / ((1.0 + a) * nu)) - np.log1p(t2 / nu))
                - 0.5 * np.log(2.0 * np.pi) - 0.5 * u - 0.5 * np.exp(-u))


def jzs_bf10(t, n1, n2, rscale, rtol=1e-10):
    t2 = float(t) ** 2
    nr2 = n1 * n2 / (n1 + n2) * rscale ** 2
    nu = n1 + n2 - 2.0
    grid = np.linspace(-12.0, 60.0, 721)
    logf = _jzs_log_integrand(grid, t2, nr2, nu)
    shift = logf.max()
    peak = grid[np.argmax(logf)]
    f = lambda u: np.exp(_jzs_log_integrand(u, t2, nr2, nu) - shift)
    left, _ = integrate.quad(f, -np.inf, peak, epsabs=0.0, epsrel=rtol, limit=200)
    right, _ = integrate.quad(f, peak, np.inf, epsabs=0.0, epsrel=rtol, limit=200)
    return float(np.exp(np.log(left + right) + shift))
