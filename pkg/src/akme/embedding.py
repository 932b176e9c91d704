"""Approximate feature map for the 2-D Gaussian kernel and pattern embeddings.

The map uses ``m`` equally spaced projection directions and the ``ell``-node
radial quadrature. For each bandwidth ``sigma`` the coordinates are

    sqrt(w_j / m) * sin(r_j v_i.x / sigma),  sqrt(w_j / m) * cos(r_j v_i.x / sigma)

ordered by sigma (ascending), then direction i, then node j, sine first.
Within one sigma block phi(x).phi(y) approximates exp(-|x-y|^2 / (2 sigma^2))
and phi(x).phi(x) == 1; across the full concatenated map the dot product is
the sum of the per-sigma kernels.
"""

from __future__ import annotations

import hashlib
import json
import warnings
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from akme._backend import kernels
from akme.errors import (
    EmptyPatternError,
    InsufficientPointsError,
    InvalidParameterError,
)
from akme.quadrature import RadialQuadrature, radial_gauss_hermite

DEFAULT_M = 4
DEFAULT_ELL = 4
DEFAULT_SIGMA_FRACTIONS = (Fraction(1, 16), Fraction(1, 8), Fraction(1, 4))


class OutOfWindowWarning(UserWarning):
    pass


@dataclass(frozen=True)
class Window:
    xmin: float
    ymin: float
    xmax: float
    ymax: float

    def __post_init__(self):
        vals = (self.xmin, self.ymin, self.xmax, self.ymax)
        if not all(np.isfinite(v) for v in vals):
            raise InvalidParameterError(f"non-finite window bounds {vals}")
        if not (self.xmax > self.xmin and self.ymax > self.ymin):
            raise InvalidParameterError(f"degenerate window {vals}")
        for name, v in zip(("xmin", "ymin", "xmax", "ymax"), vals):
            object.__setattr__(self, name, float(v))

    @classmethod
    def unit(cls) -> Window:
        return cls(0.0, 0.0, 1.0, 1.0)

    @property
    def width(self) -> float:
        return self.xmax - self.xmin

    @property
    def height(self) -> float:
        return self.ymax - self.ymin

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def longest_side(self) -> float:
        return max(self.width, self.height)

    @property
    def diameter(self) -> float:
        return float(np.hypot(self.width, self.height))

    def contains(self, points) -> np.ndarray:
        p = np.atleast_2d(np.asarray(points, dtype=float))
        return ((p[:, 0] >= self.xmin) & (p[:, 0] <= self.xmax)
                & (p[:, 1] >= self.ymin) & (p[:, 1] <= self.ymax))

    def dilate(self, r: float) -> Window:
        return Window(self.xmin - r, self.ymin - r, self.xmax + r, self.ymax + r)

    def as_tuple(self):
        return (self.xmin, self.ymin, self.xmax, self.ymax)

    def to_dict(self):
        return dict(zip(("xmin", "ymin", "xmax", "ymax"), self.as_tuple()))


@dataclass(frozen=True, eq=False)
class PointPattern:
    """An observed realisation: an ``(n, 2)`` array of points and its window."""

    points: np.ndarray
    window: Window

    def __post_init__(self):
        pts = np.array(self.points, dtype=np.float64).reshape(-1, 2)
        if not np.all(np.isfinite(pts)):
            raise InvalidParameterError("pattern contains non-finite coordinates")
        if not np.all(self.window.contains(pts)):
            bad = int(np.sum(~self.window.contains(pts)))
            raise InvalidParameterError(f"{bad} point(s) fall outside {self.window}")
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    def __len__(self):
        return self.n

    def __eq__(self, other):
        if not isinstance(other, PointPattern):
            return NotImplemented
        return self.window == other.window and np.array_equal(self.points, other.points)

    __hash__ = None

    def scaled(self, window: Window) -> PointPattern:
        """Affine map of this pattern's window onto ``window``."""
        src = self.window
        sx = window.width / src.width
        sy = window.height / src.height
        pts = np.column_stack([
            window.xmin + (self.points[:, 0] - src.xmin) * sx,
            window.ymin + (self.points[:, 1] - src.ymin) * sy,
        ])
        return PointPattern(np.clip(pts, [window.xmin, window.ymin], [window.xmax, window.ymax]), window)


@dataclass(frozen=True)
class EmbeddingConfig:
    m: int
    ell: int
    sigmas: tuple
    window: Window

    def __post_init__(self):
        for name in ("m", "ell"):
            v = getattr(self, name)
            if isinstance(v, bool) or int(v) != v or v < 1:
                raise InvalidParameterError(f"{name} must be a positive integer, got {v!r}")
            object.__setattr__(self, name, int(v))
        sig = tuple(float(s) for s in np.atleast_1d(self.sigmas))
        if not sig:
            raise InvalidParameterError("at least one bandwidth is required")
        if any(not (s > 0 and np.isfinite(s)) for s in sig):
            raise InvalidParameterError(f"bandwidths must be positive, got {sig}")
        if any(b <= a for a, b in zip(sig, sig[1:])):
            raise InvalidParameterError(f"bandwidths must be strictly increasing, got {sig}")
        object.__setattr__(self, "sigmas", sig)
        radial_gauss_hermite(self.ell)  # validates ell range

    @classmethod
    def default(cls, window: Window | None = None, m=DEFAULT_M, ell=DEFAULT_ELL) -> EmbeddingConfig:
        """``m=4, ell=4`` and sigmas of 1/16, 1/8, 1/4 of the longest window side."""
        window = window or Window.unit()
        L = window.longest_side
        return cls(m, ell, tuple(float(f) * L for f in DEFAULT_SIGMA_FRACTIONS), window)

    @property
    def dimension(self) -> int:
        return 2 * self.m * self.ell * len(self.sigmas)

    def to_dict(self):
        return {"m": self.m, "ell": self.ell, "sigmas": list(self.sigmas),
                "window": self.window.to_dict()}

    @classmethod
    def from_dict(cls, d) -> EmbeddingConfig:
        return cls(d["m"], d["ell"], tuple(d["sigmas"]), Window(**d["window"]))

    def config_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass(frozen=True, eq=False)
class FeatureMap:
    config: EmbeddingConfig
    directions: np.ndarray
    quadrature: RadialQuadrature
    freqs: np.ndarray = field(repr=False)
    coefs: np.ndarray = field(repr=False)

    @property
    def dimension(self) -> int:
        return 2 * self.freqs.shape[0]

    @property
    def block_size(self) -> int:
        return 2 * self.config.m * self.config.ell

    def block(self, sigma_index: int) -> slice:
        b = self.block_size
        return slice(sigma_index * b, (sigma_index + 1) * b)


def build_feature_map(config: EmbeddingConfig) -> FeatureMap:
    m, ell = config.m, config.ell
    quad = radial_gauss_hermite(ell)
    theta = np.arange(m) * np.pi / m
    dirs = np.column_stack([np.cos(theta), np.sin(theta)])
    freqs = np.empty((len(config.sigmas) * m * ell, 2))
    coefs = np.empty(freqs.shape[0])
    q = 0
    for sigma in config.sigmas:
        for i in range(m):
            for j in range(ell):
                freqs[q] = quad.roots[j] * dirs[i] / sigma
                coefs[q] = np.sqrt(quad.weights[j] / m)
                q += 1
    for a in (dirs, freqs, coefs):
        a.flags.writeable = False
    return FeatureMap(config, dirs, quad, freqs, coefs)


@dataclass(frozen=True, eq=False)
class AkmeVector:
    values: np.ndarray
    n: int
    config: EmbeddingConfig

    @property
    def config_hash(self) -> str:
        return self.config.config_hash()

    def to_dict(self):
        return {"config": self.config.to_dict(), "config_hash": self.config_hash,
                "n": self.n, "values": [float(v) for v in self.values]}

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, d) -> AkmeVector:
        return cls(np.asarray(d["values"], dtype=float), int(d["n"]),
                   EmbeddingConfig.from_dict(d["config"]))


def _as_points(x) -> np.ndarray:
    return np.ascontiguousarray(np.asarray(x, dtype=np.float64).reshape(-1, 2))


def _canonical(points) -> np.ndarray:
    # fixed summation order so that pattern statistics are permutation invariant bit for bit
    pts = _as_points(points)
    return np.ascontiguousarray(pts[np.lexsort((pts[:, 1], pts[:, 0]))])


def embed_point(fm: FeatureMap, x) -> np.ndarray:
    pts = _as_points(x)
    if pts.shape[0] != 1:
        raise InvalidParameterError("embed_point takes a single (x, y) pair")
    if not fm.config.window.contains(pts)[0]:
        warnings.warn(f"point {tuple(pts[0])} lies outside {fm.config.window}",
                      OutOfWindowWarning, stacklevel=2)
    return kernels.phase_features(pts, fm.freqs, fm.coefs)[0]


def embed_points_matrix(fm: FeatureMap, pat: PointPattern) -> np.ndarray:
    """Row k is the feature vector of point k."""
    if pat.n < 2:
        raise InsufficientPointsError(f"need at least 2 points, got {pat.n}")
    return kernels.phase_features(_as_points(pat.points), fm.freqs, fm.coefs)


def pattern_moments(fm: FeatureMap, pat: PointPattern):
    """Column means and unbiased column variances of the feature matrix."""
    if pat.n == 0:
        raise EmptyPatternError("cannot embed an empty pattern")
    return kernels.feature_moments(_canonical(pat.points), fm.freqs, fm.coefs)


def embed_pattern(fm: FeatureMap, pat: PointPattern) -> AkmeVector:
    """Sample-mean embedding of a pattern (unbiased for the location density)."""
    if pat.n == 0:
        raise EmptyPatternError("cannot embed an empty pattern")
    feats = kernels.phase_features(_canonical(pat.points), fm.freqs, fm.coefs)
    return AkmeVector(feats.mean(axis=0), pat.n, fm.config)


def kernel_exact(x, y, sigma: float) -> float:
    if not sigma > 0:
        raise InvalidParameterError(f"sigma must be positive, got {sigma}")
    d = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
    return float(np.exp(-np.dot(d, d) / (2.0 * sigma * sigma)))


def kernel_approx(fm: FeatureMap, x, y, sigma_index: int = 0) -> float:
    blk = fm.block(sigma_index)
    pts = _as_points([x, y])
    feats = kernels.phase_features(pts, fm.freqs[blk.start // 2:blk.stop // 2],
                                   fm.coefs[blk.start // 2:blk.stop // 2])
    return float(np.dot(feats[0], feats[1]))


def _gram(a, b, sigma):
    d2 = ((a[:, None, :] - b[None, :, :]) ** 2).sum(axis=-1)
    return np.exp(-d2 / (2.0 * sigma * sigma))


def mmd2_exact(X: PointPattern, Y: PointPattern, sigma: float, biased: bool = True) -> float:
    """Kernel-trick MMD^2 estimate with the Gaussian kernel of width ``sigma``."""
    if not sigma > 0:
        raise InvalidParameterError(f"sigma must be positive, got {sigma}")
    nx, ny = X.n, Y.n
    need = 1 if biased else 2
    if nx < need or ny < need:
        raise InsufficientPointsError(
            f"{'biased' if biased else 'unbiased'} estimator needs n >= {need} per pattern")
    kxx = _gram(X.points, X.points, sigma)
    kyy = _gram(Y.points, Y.points, sigma)
    kxy = _gram(X.points, Y.points, sigma)
    if biased:
        return float(kxx.mean() + kyy.mean() - 2.0 * kxy.mean())
    sxx = (kxx.sum() - np.trace(kxx)) / (nx * (nx - 1))
    syy = (kyy.sum() - np.trace(kyy)) / (ny * (ny - 1))
    return float(sxx + syy - 2.0 * kxy.mean())


def mmd2_akme(X: PointPattern, Y: PointPattern, fm: FeatureMap) -> float:
    diff = embed_pattern(fm, X).values - embed_pattern(fm, Y).values
    return float(np.dot(diff, diff))
