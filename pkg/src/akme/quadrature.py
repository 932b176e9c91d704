"""Radial Gauss-Hermite quadrature for the weight r*exp(-r**2/2) on [0, inf).

With u = r**2/2 the integral becomes a Gauss-Laguerre one:

    int_0^inf r e^{-r^2/2} f(r) dr = int_0^inf e^{-u} f(sqrt(2u)) du

so the radial rule is r_j = sqrt(2 u_j), w_j = Laguerre weight of u_j.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from akme.errors import InvalidParameterError

MAX_ELL = 64
_NEWTON_TOL = 1e-14
_NEWTON_MAXITER = 50


@dataclass(frozen=True)
class RadialQuadrature:
    ell: int
    roots: np.ndarray
    weights: np.ndarray

    def integrate(self, f):
        """Apply the rule to a vectorised callable ``f(r)``."""
        return float(np.dot(self.weights, f(self.roots)))


def _laguerre_and_derivative(n, u):
    """L_n(u) and L_n'(u) by the three-term recurrence."""
    p0 = np.ones_like(u)
    p1 = 1.0 - u
    if n == 1:
        return p1, -np.ones_like(u)
    for k in range(1, n):
        p0, p1 = p1, ((2 * k + 1 - u) * p1 - k * p0) / (k + 1)
    # u L_n' = n (L_n - L_{n-1})
    return p1, n * (p1 - p0) / u


def gauss_laguerre(n):
    """Nodes and weights of the n-point Gauss-Laguerre rule (weight e^{-u}).

    Golub-Welsch eigenvalues give starting nodes; Newton polishes them and
    weights come from w = 1 / (u L_n'(u)^2).
    """
    k = np.arange(n, dtype=float)
    jacobi = np.diag(2 * k + 1) + np.diag(k[1:], 1) + np.diag(k[1:], -1)
    u = np.linalg.eigvalsh(jacobi)
    for _ in range(_NEWTON_MAXITER):
        p, dp = _laguerre_and_derivative(n, u)
        step = p / dp
        u = u - step
        if np.all(np.abs(step) < _NEWTON_TOL * np.maximum(u, 1.0)):
            break
    _, dp = _laguerre_and_derivative(n, u)
    w = 1.0 / (u * dp * dp)
    return u, w


@lru_cache(maxsize=None)
def _rule(ell):
    u, w = gauss_laguerre(ell)
    roots = np.sqrt(2.0 * u)
    roots.flags.writeable = False
    w.flags.writeable = False
    return roots, w


def radial_gauss_hermite(ell: int) -> RadialQuadrature:
    if isinstance(ell, bool) or int(ell) != ell or not 1 <= ell <= MAX_ELL:
        raise InvalidParameterError(f"ell must be an integer in [1, {MAX_ELL}], got {ell!r}")
    roots, weights = _rule(int(ell))
    return RadialQuadrature(int(ell), roots, weights)
