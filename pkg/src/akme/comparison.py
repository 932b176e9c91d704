"""Single-pattern and replicated-pattern comparison tests.

Both tests reduce to one Welch t-test per embedding coordinate followed by a
p-value combination. In the single-pattern test the samples are the feature
vectors of individual points (valid under the Poisson assumption); in the
replicated test they are the per-pattern mean embeddings.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from akme import stats
from akme.embedding import (
    EmbeddingConfig,
    FeatureMap,
    PointPattern,
    build_feature_map,
    embed_pattern,
    pattern_moments,
)
from akme.errors import EmptyPatternError, InsufficientPointsError, InvalidParameterError, WindowMismatchError


@dataclass
class ComparisonResult:
    per_dim_p: np.ndarray
    p_harmonic: float
    p_cauchy: float
    p_bonferroni: float
    D: int
    harmonic_branch: str = ""
    per_dim_bf: np.ndarray | None = None
    mean_bf: float | None = None
    flags: list = field(default_factory=list)
    n_effective_used: tuple | None = None
    sizes: tuple = ()
    config: EmbeddingConfig | None = None

    def to_dict(self):
        d = {
            "D": self.D,
            "p_harmonic": self.p_harmonic,
            "harmonic_branch": self.harmonic_branch,
            "p_cauchy": self.p_cauchy,
            "p_bonferroni": self.p_bonferroni,
            "mean_bf": self.mean_bf,
            "per_dim_p": [float(v) for v in self.per_dim_p],
            "per_dim_bf": None if self.per_dim_bf is None else [float(v) for v in self.per_dim_bf],
            "flags": list(self.flags),
            "n_effective_used": None if self.n_effective_used is None else list(self.n_effective_used),
            "sizes": list(self.sizes),
        }
        if self.config is not None:
            d["config"] = self.config.to_dict()
        return d

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def _check_window(config: EmbeddingConfig, *patterns: PointPattern):
    for pat in patterns:
        if pat.window != config.window:
            raise WindowMismatchError(f"pattern window {pat.window} differs from config window {config.window}")


def _assemble(mean_a, var_a, n_a, mean_b, var_b, n_b, compute_bf, prior_scale, config,
              extra_flags=()):
    t, df, p, status = stats.welch_arrays(mean_a, var_a, n_a, mean_b, var_b, n_b)
    flags = list(extra_flags)
    for i in np.flatnonzero(status):
        kind = "degenerate-equal" if status[i] == stats.DEGENERATE_EQUAL else "degenerate-unequal"
        flags.append(f"{kind}:{i}")
    h = stats.combine_harmonic(p)
    c = stats.combine_cauchy(p)
    b = stats.combine_bonferroni(p)
    if h.clamped:
        flags.append("clamped:harmonic")
    if c.clamped:
        flags.append("clamped:cauchy")
    per_bf = mean_bf = None
    if compute_bf:
        tp = stats.pooled_t(mean_a, var_a, n_a, mean_b, var_b, n_b)
        per_bf = np.full(p.shape, np.nan)
        for i in np.flatnonzero(status == stats.OK):
            per_bf[i] = stats.jzs_bayes_factor(tp[i], n_a, n_b, prior_scale).bf10
        usable = per_bf[status == stats.OK]
        mean_bf = stats.mean_bayes_factor(usable) if usable.size else None
    return ComparisonResult(
        per_dim_p=p, p_harmonic=h.p, p_cauchy=c.p, p_bonferroni=b.p, D=int(p.size),
        harmonic_branch=h.branch, per_dim_bf=per_bf, mean_bf=mean_bf, flags=flags,
        config=config,
    )


def single_pattern_test(X: PointPattern, Y: PointPattern, config: EmbeddingConfig | None = None,
                        ess_override=None, compute_bf: bool = False,
                        prior_scale: float = stats.DEFAULT_PRIOR_SCALE,
                        feature_map: FeatureMap | None = None) -> ComparisonResult:
    """Compare two single patterns assumed to come from Poisson processes.

    ``ess_override=(nX, nY)`` replaces the point counts in the standard error
    and degrees of freedom (effective sample size correction); means and
    variances are still computed from all points.
    """
    if config is None:
        config = feature_map.config if feature_map is not None else EmbeddingConfig.default(X.window)
    _check_window(config, X, Y)
    if X.n < 2 or Y.n < 2:
        raise InsufficientPointsError(f"single-pattern test needs >= 2 points per pattern, got {X.n} and {Y.n}")
    fm = feature_map if feature_map is not None else build_feature_map(config)
    mean_x, var_x = pattern_moments(fm, X)
    mean_y, var_y = pattern_moments(fm, Y)
    n_x, n_y = float(X.n), float(Y.n)
    if ess_override is not None:
        n_x, n_y = (float(v) for v in ess_override)
        if n_x < 2 or n_y < 2:
            raise InsufficientPointsError(f"effective sample sizes must be >= 2, got {ess_override}")
    res = _assemble(mean_x, var_x, n_x, mean_y, var_y, n_y, compute_bf, prior_scale, config)
    res.sizes = (X.n, Y.n)
    if ess_override is not None:
        res.n_effective_used = (n_x, n_y)
    return res


def replicated_embeddings(fm: FeatureMap, group) -> np.ndarray:
    rows = []
    for k, pat in enumerate(group):
        if pat.n == 0:
            raise EmptyPatternError(f"pattern {k} of a replicated group is empty")
        rows.append(embed_pattern(fm, pat).values)
    return np.vstack(rows)


def replicated_test(groupA, groupB, config: EmbeddingConfig | None = None,
                    compute_bf: bool = False, prior_scale: float = stats.DEFAULT_PRIOR_SCALE,
                    feature_map: FeatureMap | None = None) -> ComparisonResult:
    """Compare two groups of replicated patterns; each pattern contributes one
    equally weighted mean embedding."""
    groupA, groupB = list(groupA), list(groupB)
    if len(groupA) < 2 or len(groupB) < 2:
        raise InsufficientPointsError(
            f"replicated test needs >= 2 patterns per group, got {len(groupA)} and {len(groupB)}")
    if config is None:
        config = feature_map.config if feature_map is not None else EmbeddingConfig.default(groupA[0].window)
    _check_window(config, *groupA, *groupB)
    fm = feature_map if feature_map is not None else build_feature_map(config)
    ea = replicated_embeddings(fm, groupA)
    eb = replicated_embeddings(fm, groupB)
    res = _assemble(ea.mean(axis=0), ea.var(axis=0, ddof=1), float(len(groupA)),
                    eb.mean(axis=0), eb.var(axis=0, ddof=1), float(len(groupB)),
                    compute_bf, prior_scale, config)
    res.sizes = (len(groupA), len(groupB))
    return res


def group_by_count(patterns, n_groups: int):
    """Split patterns into ``n_groups`` groups of (nearly) equal size by
    ascending point count; ties are broken by input order."""
    patterns = list(patterns)
    if n_groups < 2:
        raise InvalidParameterError("need at least two groups")
    counts = np.array([p.n for p in patterns])
    order = np.argsort(counts, kind="stable")
    return [[patterns[i] for i in chunk] for chunk in np.array_split(order, n_groups)]


def group_and_test(patterns, config: EmbeddingConfig | None = None, n_groups: int = 4,
                   combiner: str = "harmonic"):
    """Pairwise replicated tests between count-quantile groups.

    Returns an ``n_groups x n_groups`` symmetric matrix of combined p-values
    with ones on the diagonal. Small off-diagonal values suggest that the
    location density changes with the number of events.
    """
    groups = group_by_count(patterns, n_groups)
    fm = build_feature_map(config or EmbeddingConfig.default(groups[0][0].window))
    out = np.ones((n_groups, n_groups))
    for a in range(n_groups):
        for b in range(a + 1, n_groups):
            res = replicated_test(groups[a], groups[b], feature_map=fm)
            out[a, b] = out[b, a] = {"harmonic": res.p_harmonic, "cauchy": res.p_cauchy,
                                     "bonferroni": res.p_bonferroni}[combiner]
    return out
