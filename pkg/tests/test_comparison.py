import json

import numpy as np
import pytest

from akme import (
    EmbeddingConfig,
    PointPattern,
    Window,
    build_feature_map,
    group_and_test,
    replicated_test,
    single_pattern_test,
)
from akme.comparison import group_by_count
from akme.errors import EmptyPatternError, InsufficientPointsError, InvalidParameterError, WindowMismatchError
from akme.pointprocess import IntensityModel, ProcessSpec, child_seed, simulate

from conftest import uniform_pattern

CSR = ProcessSpec("poisson", 100.0)


def test_identical_patterns(rng):
    X = uniform_pattern(rng, 80)
    res = single_pattern_test(X, X)
    assert np.all(res.per_dim_p == 1.0)
    assert res.p_cauchy == 1.0
    assert res.p_harmonic > 0.99
    assert res.D == 96 and res.per_dim_p.size == 96


def test_label_symmetry_and_determinism(rng):
    X, Y = uniform_pattern(rng, 60), uniform_pattern(rng, 90)
    a, b = single_pattern_test(X, Y, compute_bf=True), single_pattern_test(Y, X, compute_bf=True)
    assert (a.p_harmonic, a.p_cauchy, a.p_bonferroni) == (b.p_harmonic, b.p_cauchy, b.p_bonferroni)
    assert a.mean_bf == b.mean_bf
    again = single_pattern_test(X, Y, compute_bf=True)
    assert again.to_json() == a.to_json()


def test_power_on_strong_alternative():
    A = simulate(ProcessSpec("poisson", 800.0, IntensityModel("linear", 1.0)), 1)
    B = simulate(ProcessSpec("poisson", 800.0, IntensityModel("linear", 3.0)), 2)
    res = single_pattern_test(A, B)
    assert res.p_harmonic < 1e-6 and res.p_cauchy < 1e-6


def test_ess_override(rng):
    X, Y = uniform_pattern(rng, 100), uniform_pattern(rng, 100)
    full = single_pattern_test(X, Y)
    eff = single_pattern_test(X, Y, ess_override=(40.0, 40.0))
    assert eff.n_effective_used == (40.0, 40.0)
    assert full.n_effective_used is None
    assert np.all(eff.per_dim_p >= full.per_dim_p - 1e-12)
    with pytest.raises(InsufficientPointsError):
        single_pattern_test(X, Y, ess_override=(1.0, 40.0))


def test_errors(rng):
    X = uniform_pattern(rng, 10)
    other = PointPattern(X.points * 2, Window(0, 0, 2, 2))
    with pytest.raises(WindowMismatchError):
        single_pattern_test(X, other)
    with pytest.raises(InsufficientPointsError):
        single_pattern_test(X, PointPattern([[0.5, 0.5]], Window.unit()))


def test_degenerate_coordinates_are_flagged():
    X = PointPattern([[0.5, 0.5]] * 3, Window.unit())
    res = single_pattern_test(X, X, compute_bf=True)
    assert len(res.flags) == 96
    assert all(f.startswith("degenerate-equal:") for f in res.flags)
    assert np.all(res.per_dim_p == 1.0)
    assert res.mean_bf is None


def test_bayes_factor_and_json(rng):
    X, Y = uniform_pattern(rng, 70), uniform_pattern(rng, 50)
    res = single_pattern_test(X, Y, compute_bf=True)
    assert res.per_dim_bf.shape == (96,) and np.all(res.per_dim_bf > 0)
    assert res.mean_bf == pytest.approx(res.per_dim_bf.mean())
    d = json.loads(res.to_json())
    assert d["config"]["m"] == 4 and len(d["per_dim_p"]) == 96
    assert d["sizes"] == [70, 50]


def test_custom_config_and_feature_map(rng):
    X, Y = uniform_pattern(rng, 40), uniform_pattern(rng, 40)
    cfg = EmbeddingConfig(2, 3, (0.2,), Window.unit())
    a = single_pattern_test(X, Y, cfg)
    b = single_pattern_test(X, Y, feature_map=build_feature_map(cfg))
    assert a.D == 12 and a.p_harmonic == b.p_harmonic


def test_replicated_identical_groups(rng):
    group = [uniform_pattern(rng, 30) for _ in range(5)]
    res = replicated_test(group, group)
    assert np.all(res.per_dim_p == 1.0)
    assert res.sizes == (5, 5)


def test_replicated_detects_thinning():
    A = [simulate(CSR, child_seed(1, k)) for k in range(20)]
    B = [simulate(ProcessSpec("poisson", 160.0, thinning="exp_linear"), child_seed(2, k)) for k in range(20)]
    assert replicated_test(A, B).p_harmonic < 1e-3


def test_replicated_errors(rng):
    g = [uniform_pattern(rng, 10) for _ in range(3)]
    with pytest.raises(InsufficientPointsError):
        replicated_test(g[:1], g)
    with pytest.raises(EmptyPatternError):
        replicated_test(g + [PointPattern(np.empty((0, 2)), Window.unit())], g)


def test_group_by_count_order(rng):
    pats = [uniform_pattern(rng, n) for n in (5, 50, 20, 10, 40, 30)]
    groups = group_by_count(pats, 3)
    assert [[p.n for p in g] for g in groups] == [[5, 10], [20, 30], [40, 50]]
    with pytest.raises(InvalidParameterError):
        group_by_count(pats, 1)


def test_group_and_test_identical_groups():
    pat = simulate(CSR, 3)
    assert np.array_equal(group_and_test([pat] * 8, n_groups=2, combiner="cauchy"), np.ones((2, 2)))
    assert group_and_test([pat] * 8, n_groups=2)[0, 1] == pytest.approx(1.0, abs=0.02)


def test_group_and_test_detects_count_dependent_density():
    # sparse days uniform, busy days concentrated on the left
    sparse = [simulate(ProcessSpec("poisson", 40.0), child_seed(4, k)) for k in range(20)]
    busy = [simulate(ProcessSpec("poisson", 200.0, IntensityModel("linear", 3.0)), child_seed(5, k))
            for k in range(20)]
    mat = group_and_test(sparse + busy, n_groups=2)
    assert mat[0, 1] == mat[1, 0] < 1e-3
    assert mat[0, 0] == 1.0


@pytest.mark.slow
def test_group_and_test_null_is_calibrated():
    pvals = []
    for rep in range(200):
        pats = [simulate(ProcessSpec("poisson", 60.0), child_seed(6, rep, k)) for k in range(40)]
        pvals.append(group_and_test(pats, n_groups=4)[0, 3])
    rate = np.mean(np.array(pvals) <= 0.05)
    assert 0.01 <= rate <= 0.11
