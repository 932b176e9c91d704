"""Seeded simulators for the point processes used in the experiments.

Every sampler is a pure function of its parameters and a seed. Seeds may be
ints, ``numpy.random.SeedSequence`` objects or ``Generator`` instances; child
streams are derived with :func:`child_seed`, which never mutates its input.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from akme._backend import kernels
from akme.embedding import PointPattern, Window
from akme.errors import CalibrationError, InvalidParameterError

log = logging.getLogger(__name__)

INTENSITY_VARIANTS = ("constant", "linear", "sine")
PROCESS_KINDS = ("poisson", "matern2", "cluster")
RETENTIONS = ("none", "exp_linear")


def child_seed(seed, *keys) -> np.random.SeedSequence:
    """Counter-based child stream: same (seed, keys) -> same stream."""
    if isinstance(seed, np.random.SeedSequence):
        base = seed
    else:
        base = np.random.SeedSequence(seed)
    return np.random.SeedSequence(base.entropy, spawn_key=tuple(base.spawn_key) + tuple(keys))


def make_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(seed)
    return np.random.Generator(np.random.PCG64(seed))


@dataclass(frozen=True)
class IntensityModel:
    """Unnormalised location density in the window-normalised abscissa u:
    constant 1, linear exp(-gamma u), sine exp(-gamma sin(2 pi u))."""

    variant: str = "constant"
    gamma: float = 0.0

    def __post_init__(self):
        if self.variant not in INTENSITY_VARIANTS:
            raise InvalidParameterError(f"unknown intensity variant {self.variant!r}")
        object.__setattr__(self, "gamma", float(self.gamma))

    def density(self, u):
        u = np.asarray(u, dtype=float)
        if self.variant == "linear":
            return np.exp(-self.gamma * u)
        if self.variant == "sine":
            return np.exp(-self.gamma * np.sin(2.0 * np.pi * u))
        return np.ones_like(u)

    @property
    def supremum(self) -> float:
        if self.variant == "linear":
            return float(max(1.0, np.exp(-self.gamma)))
        if self.variant == "sine":
            return float(np.exp(abs(self.gamma)))
        return 1.0


@dataclass(frozen=True)
class ProcessSpec:
    """One simulated process class.

    ``expected_n`` is the mean count of the base process before any thinning.
    """

    kind: str = "poisson"
    expected_n: float = 100.0
    model: IntensityModel = field(default_factory=IntensityModel)
    r: float = 0.0
    mu: float = 0.0
    radius: float = 0.0
    window: Window = field(default_factory=Window.unit)
    thinning: str = "none"

    def __post_init__(self):
        if self.kind not in PROCESS_KINDS:
            raise InvalidParameterError(f"unknown process kind {self.kind!r}")
        if self.thinning not in RETENTIONS:
            raise InvalidParameterError(f"unknown retention {self.thinning!r}")
        if not self.expected_n > 0:
            raise InvalidParameterError("expected_n must be positive")
        if self.kind == "matern2" and not self.r > 0:
            raise InvalidParameterError("Matern II needs r > 0")
        if self.kind == "cluster" and not (self.mu > 0 and self.radius > 0):
            raise InvalidParameterError("Matern cluster needs mu > 0 and radius > 0")

    def to_dict(self):
        d = asdict(self)
        d["window"] = self.window.to_dict()
        return d

    @classmethod
    def from_dict(cls, d) -> ProcessSpec:
        d = dict(d)
        if "model" in d and not isinstance(d["model"], IntensityModel):
            d["model"] = IntensityModel(**d["model"])
        if "window" in d and not isinstance(d["window"], Window):
            d["window"] = Window(**d["window"])
        return cls(**d)

    @property
    def label(self) -> str:
        if self.kind == "poisson":
            base = "CSR" if self.model.variant == "constant" else f"{self.model.variant}({self.model.gamma:g})"
        elif self.kind == "matern2":
            base = f"hardcore(r={self.r:g})"
        else:
            base = f"cluster(mu={self.mu:g},R={self.radius:g})"
        return base + ("+thin" if self.thinning != "none" else "")


def _normalised_abscissa(x, window: Window):
    return (np.asarray(x) - window.xmin) / window.width


def sample_poisson(spec: ProcessSpec, seed) -> PointPattern:
    """Inhomogeneous Poisson pattern by rejection against the density supremum."""
    if spec.kind != "poisson":
        raise InvalidParameterError("sample_poisson needs a Poisson spec")
    rng = make_rng(seed)
    w = spec.window
    n = int(rng.poisson(spec.expected_n))
    sup = spec.model.supremum
    out = np.empty((0, 2))
    proposed = 0
    while out.shape[0] < n:
        need = n - out.shape[0]
        batch = int(need * sup * 1.2) + 16
        cand = np.column_stack([rng.uniform(w.xmin, w.xmax, batch),
                                rng.uniform(w.ymin, w.ymax, batch)])
        acc = rng.uniform(0.0, sup, batch) < spec.model.density(_normalised_abscissa(cand[:, 0], w))
        out = np.vstack([out, cand[acc]])
        proposed += batch
    if proposed:
        log.debug("poisson rejection acceptance %.3f", out.shape[0] / proposed)
    return PointPattern(out[:n], w)


def matern2_primary_intensity(expected_n: float, r: float, window: Window) -> float:
    """Primary intensity whose Matern II thinning retains ``expected_n`` points
    on average: solves lambda * p_ret(lambda) * |A| = expected_n with
    p_ret(lambda) = (1 - exp(-lambda pi r^2)) / (lambda pi r^2)."""
    disc = np.pi * r * r
    target = expected_n * disc / window.area  # = 1 - exp(-lambda disc)
    if not target < 1.0:
        raise CalibrationError(
            f"Matern II with r={r} cannot reach {expected_n} points in {window}: "
            f"capacity is {window.area / disc:.1f}")
    return float(-np.log1p(-target) / disc)


def sample_matern_ii(r: float, expected_n: float, window: Window, seed) -> PointPattern:
    if not r > 0:
        raise InvalidParameterError("r must be positive")
    rng = make_rng(seed)
    lam = matern2_primary_intensity(expected_n, r, window)
    big = window.dilate(r)
    n = int(rng.poisson(lam * big.area))
    pts = np.column_stack([rng.uniform(big.xmin, big.xmax, n), rng.uniform(big.ymin, big.ymax, n)])
    marks = rng.uniform(size=n)
    keep = kernels.hardcore_retain(np.ascontiguousarray(pts), marks, float(r))
    pts = pts[keep]
    return PointPattern(pts[window.contains(pts)], window)


def cluster_parent_intensity(expected_n: float, mu: float, window: Window) -> float:
    # parents live on the dilated window, so offspring intensity in A is kappa * mu
    return float(expected_n / (mu * window.area))


def sample_matern_cluster(kappa: float, mu: float, radius: float, window: Window, seed) -> PointPattern:
    if not (kappa > 0 and mu > 0 and radius > 0):
        raise InvalidParameterError("kappa, mu and radius must be positive")
    rng = make_rng(seed)
    big = window.dilate(radius)
    n_par = int(rng.poisson(kappa * big.area))
    parents = np.column_stack([rng.uniform(big.xmin, big.xmax, n_par),
                               rng.uniform(big.ymin, big.ymax, n_par)])
    counts = rng.poisson(mu, n_par)
    total = int(counts.sum())
    rad = radius * np.sqrt(rng.uniform(size=total))
    ang = rng.uniform(0.0, 2.0 * np.pi, total)
    pts = np.repeat(parents, counts, axis=0) + np.column_stack([rad * np.cos(ang), rad * np.sin(ang)])
    return PointPattern(pts[window.contains(pts)], window)


def retention_probability(retention: str, u):
    if retention == "exp_linear":
        return np.exp(-np.asarray(u, dtype=float))
    if retention == "none":
        return np.ones_like(np.asarray(u, dtype=float))
    raise InvalidParameterError(f"unknown retention {retention!r}")


def mean_retention(retention: str) -> float:
    """Average retention probability over a uniform abscissa."""
    return 1.0 - np.exp(-1.0) if retention == "exp_linear" else 1.0


def thin(pat: PointPattern, retention: str, seed) -> PointPattern:
    """Independent thinning with probability exp(-u), u the normalised abscissa."""
    if retention == "none":
        return pat
    rng = make_rng(seed)
    prob = retention_probability(retention, _normalised_abscissa(pat.points[:, 0], pat.window))
    keep = rng.uniform(size=pat.n) < prob
    return PointPattern(pat.points[keep], pat.window)


def simulate(spec: ProcessSpec, seed) -> PointPattern:
    """Draw one realisation of ``spec`` (base process, then optional thinning)."""
    if spec.kind == "poisson":
        pat = sample_poisson(spec, child_seed(seed, 0))
    elif spec.kind == "matern2":
        pat = sample_matern_ii(spec.r, spec.expected_n, spec.window, child_seed(seed, 0))
    else:
        kappa = cluster_parent_intensity(spec.expected_n, spec.mu, spec.window)
        pat = sample_matern_cluster(kappa, spec.mu, spec.radius, spec.window, child_seed(seed, 0))
    return thin(pat, spec.thinning, child_seed(seed, 1))


def effective_sample_size(n: float, mu: float) -> float:
    """Number of parents behind ``n`` clustered points: n (1 - e^-mu) / mu."""
    if not mu > 0:
        raise InvalidParameterError("mu must be positive")
    return float(n * -np.expm1(-mu) / mu)
