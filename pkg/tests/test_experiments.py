import csv
import json
import math
import time

import numpy as np
import pytest

from akme import experiments as ex
from akme.pointprocess import IntensityModel, ProcessSpec


def poisson(variant, gamma, n):
    return ProcessSpec("poisson", float(n), IntensityModel(variant, gamma))


def small_scenario(**kw):
    spec = poisson("linear", 1.0, 100)
    return ex.Scenario.simple("tiny", spec, spec, **{"reps": 30, "seed": 4, **kw})


def within_3se(rate, target, reps):
    return abs(rate - target) <= 3 * math.sqrt(target * (1 - target) / reps)


def test_scenario_validation():
    spec = poisson("constant", 0, 50)
    with pytest.raises(ValueError):
        ex.Scenario.simple("x", spec, spec, reps=0)
    with pytest.raises(ValueError):
        ex.Scenario.simple("x", spec, spec, alphas=(0.05, 1.0))
    with pytest.raises(ValueError):
        ex.Scenario.simple("x", spec, spec, test_kind="paired")


def test_scenario_round_trip():
    s = ex.table_scenarios(4, reps=7, seed=3)[0]
    back = ex.Scenario.from_dict(json.loads(json.dumps(s.to_dict())))
    assert back.to_dict() == s.to_dict()
    simple = {"name": "n", "specA": poisson("sine", 2.0, 100).to_dict(),
              "specB": poisson("sine", 3.0, 100).to_dict(), "reps": 5}
    s = ex.Scenario.from_dict(simple)
    assert s.specB.model.gamma == 3.0 and s.reps == 5


def test_run_scenario_deterministic_and_parallel_safe():
    s = small_scenario()
    a = ex.run_scenario(s, workers=1)
    b = ex.run_scenario(s, workers=1)
    c = ex.run_scenario(s, workers=2)
    assert np.array_equal(a.pvalues, b.pvalues)
    assert np.array_equal(a.pvalues, c.pvalues)


def test_rejection_table_fields():
    t = ex.run_scenario(small_scenario())
    for name in ex.COMBINERS:
        r = t.rates[name]
        assert np.all((0 <= r) & (r <= 1))
        np.testing.assert_allclose(t.se[name], np.sqrt(r * (1 - r) / t.reps))
    assert t.rate(0.05) == t.rates["harmonic"][1]
    assert t.runtime > 0


def test_table_grids_match_reference_rows():
    sizes = {1: 36, 2: 6, 3: 3, 4: 2}
    for tid, n in sizes.items():
        names = [s.name for s in ex.table_scenarios(tid, reps=1)]
        assert len(names) == n == len(set(names))
        assert all((tid, name) in ex.PAPER_VALUES for name in names)
    t3 = ex.table_scenarios(3, reps=1)
    assert all(s.ess_correction for s in t3)
    assert not any(s.ess_correction for s in ex.table_scenarios(2, reps=1))


def test_replicated_classes():
    homog, inhom = ex.replicated_classes()
    assert len(homog) == len(inhom) == 7
    assert all(s.thinning == "none" for s in homog)
    assert all(s.thinning == "exp_linear" for s in inhom)
    assert inhom[0].expected_n * (1 - math.exp(-1)) == pytest.approx(100.0)


def test_table_output_is_byte_reproducible(tmp_path):
    a = ex.run_table(3, reps=12, seed=9, outdir=tmp_path / "a")
    ex.run_table(3, reps=12, seed=9, outdir=tmp_path / "b")
    for name in ("table3.csv", "table3.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    with open(tmp_path / "a" / "table3.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert list(rows[0]) == ["scenario", "alpha", "combiner", "rate", "se", "paper_value"]
    assert len(rows) == 3 * 3 * 3
    harm = [r for r in rows if r["combiner"] == "harmonic" and r["scenario"] == "Cluster-1"]
    assert [r["paper_value"] for r in harm] == ["0.011", "0.051", "0.086"]
    assert a.rows()[0][0] == "Cluster-1"


def test_histogram_output(tmp_path):
    spec = poisson("constant", 0, 60)
    s = ex.Scenario.simple("null", spec, spec, reps=40, seed=2)
    h = ex.run_calibration_histogram(s, bins=8)
    assert h["harmonic"]["counts"].sum() == 40
    edges = h["mean_bf"]["edges"]
    np.testing.assert_allclose(np.diff(np.log10(edges)), np.diff(np.log10(edges))[0])
    ex.write_histogram_csv(h, tmp_path / "h.csv")
    with open(tmp_path / "h.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert {"bin_left", "bin_right", "count"} <= set(rows[0])
    assert len(rows) == 24


@pytest.mark.slow
def test_size_linear_null_n100():
    t = ex.run_scenario(ex.Scenario.simple("n", poisson("linear", 1.0, 100), poisson("linear", 1.0, 100),
                                           reps=2000, seed=21))
    assert within_3se(t.rate(0.05), 0.056, 2000)


@pytest.mark.slow
def test_homogeneous_null_size():
    t = ex.run_scenario(ex.Scenario.simple("csr", poisson("constant", 0, 100), poisson("constant", 0, 100),
                                           reps=2000, seed=22))
    assert 0.035 <= t.rate(0.05) <= 0.075


@pytest.mark.slow
def test_power_sine_2_3_n400():
    t = ex.run_scenario(ex.Scenario.simple("p", poisson("sine", 2.0, 400), poisson("sine", 3.0, 400),
                                           reps=500, seed=23))
    assert abs(t.rate(0.01) - 0.81) <= 0.06


@pytest.mark.slow
def test_power_linear_1_3_n800_saturates():
    t = ex.run_scenario(ex.Scenario.simple("p", poisson("linear", 1.0, 800), poisson("linear", 3.0, 800),
                                           reps=500, seed=24))
    assert t.rate(0.01) >= 0.99


@pytest.mark.slow
def test_consistency_trend():
    rates = []
    for n in (100, 400, 800):
        t = ex.run_scenario(ex.Scenario.simple("c", poisson("linear", 1.0, n), poisson("linear", 2.0, n),
                                               reps=500, seed=25))
        rates.append(t.rate(0.05))
    assert rates[0] <= rates[1] <= rates[2]


@pytest.mark.slow
@pytest.mark.parametrize("na,nb", [(100, 400), (400, 800)])
def test_null_holds_across_counts(na, nb):
    t = ex.run_scenario(ex.Scenario.simple("mixed", poisson("linear", 2.0, na), poisson("linear", 2.0, nb),
                                           reps=1000, seed=26))
    assert within_3se(t.rate(0.05), 0.05, 1000)


@pytest.mark.slow
def test_robustness_rows():
    t2 = {s.name: s for s in ex.table_scenarios(2, reps=1000, seed=27)}
    hard = ex.run_scenario(t2["Hardcore-3"])
    assert hard.rate(0.05) < 0.03
    clus = ex.run_scenario(t2["Cluster-3"])
    assert abs(clus.rate(0.05) - 0.686) <= 0.05
    t3 = {s.name: s for s in ex.table_scenarios(3, reps=1000, seed=27)}
    ess = ex.run_scenario(t3["Cluster-1"])
    assert within_3se(ess.rate(0.05), 0.051, 1000)


@pytest.mark.slow
def test_runtime_scales_linearly():
    spec = poisson("linear", 2.0, 100)
    times = []
    for reps in (100, 200, 400):
        t0 = time.perf_counter()
        ex.run_scenario(ex.Scenario.simple("t", spec, spec, reps=reps, seed=28))
        times.append(time.perf_counter() - t0)
    assert 2.0 <= times[2] / times[0] <= 8.0
