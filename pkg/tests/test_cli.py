import json
import subprocess
import sys

import numpy as np
import pytest
from scipy.spatial.distance import pdist

from akme import EmbeddingConfig, PointPattern, Window, build_feature_map, embed_pattern, single_pattern_test
from akme.cli import main, parse_sigmas
from akme.csvio import read_points, read_replicated


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def two_files(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run(capsys, "simulate", "--process", "linear", "--gamma", 1, "--n", 200, "--seed", 1, "-o", a)[0] == 0
    assert run(capsys, "simulate", "--process", "linear", "--gamma", 3, "--n", 200, "--seed", 2, "-o", b)[0] == 0
    return a, b


def test_simulate_reproducible_and_round_trips(tmp_path, capsys):
    f1, f2 = tmp_path / "1.csv", tmp_path / "2.csv"
    for f in (f1, f2):
        assert run(capsys, "simulate", "--process", "csr", "--n", 100, "--seed", 1, "-o", f)[0] == 0
    assert f1.read_bytes() == f2.read_bytes()
    pts, window = read_points(f1)
    from akme.pointprocess import ProcessSpec, child_seed, simulate
    assert PointPattern(pts, window) == simulate(ProcessSpec("poisson", 100.0), child_seed(1, 0))


def test_simulate_hardcore_distance(tmp_path, capsys):
    f = tmp_path / "h.csv"
    run(capsys, "simulate", "--process", "matern2", "--r", 0.04, "--seed", 3, "-o", f)
    pts, _ = read_points(f)
    assert pdist(pts).min() >= 0.04


def test_simulate_cluster_mean_count(tmp_path, capsys):
    f = tmp_path / "c.csv"
    run(capsys, "simulate", "--process", "cluster", "--mu", 4, "--n", 100, "--replicates", 300, "--seed", 4, "-o", f)
    groups, _ = read_replicated(f)
    n = np.array([len(v) for v in groups.values()])
    # empty realisations have no rows; count them as zeros
    n = np.concatenate([n, np.zeros(300 - n.size)])
    assert abs(n.mean() - 100) < 3 * n.std() / np.sqrt(300)


def test_test_single_output(two_files, capsys):
    a, b = two_files
    code, out, _ = run(capsys, "test-single", a, b)
    assert code == 0
    assert "p_harmonic" in out and "mean_bf" in out and "D             96" in out
    code, out, _ = run(capsys, "test-single", a, b, "--json")
    d = json.loads(out)
    assert d["D"] == 96 and d["p_harmonic"] < 0.01 and d["mean_bf"] > 1


def test_test_single_matches_library(two_files, capsys):
    a, b = two_files
    _, out, _ = run(capsys, "test-single", a, b, "--json", "--no-normalize")
    (pa, w), (pb, _) = read_points(a), read_points(b)
    res = single_pattern_test(PointPattern(pa, w), PointPattern(pb, w), compute_bf=True)
    assert json.loads(out)["p_harmonic"] == res.p_harmonic


def test_same_file_twice(two_files, capsys):
    a, _ = two_files
    _, out, _ = run(capsys, "test-single", a, a, "--json")
    d = json.loads(out)
    assert d["p_harmonic"] > 0.99 and d["p_cauchy"] == 1.0


def test_normalisation_and_window_inference(tmp_path, capsys):
    rng = np.random.default_rng(0)
    for name in ("x", "y"):
        pts = rng.uniform([0, 0], [10, 5], size=(60, 2))
        (tmp_path / f"{name}.csv").write_text("x,y\n" + "\n".join(f"{float(p[0])!r},{float(p[1])!r}" for p in pts) + "\n")
    _, out, _ = run(capsys, "test-single", tmp_path / "x.csv", tmp_path / "y.csv", "--json")
    d = json.loads(out)
    w = d["config"]["window"]
    assert w["xmin"] == 0.0 and w["xmax"] == 1.0 and w["ymax"] == pytest.approx(0.5, abs=0.05)
    # with an origin-anchored window, normalising is a pure rescaling and leaves p unchanged
    args = ("test-single", tmp_path / "x.csv", tmp_path / "y.csv", "--json", "--window", "0,0,10,5")
    _, norm, _ = run(capsys, *args)
    _, raw, _ = run(capsys, *args, "--no-normalize")
    assert json.loads(norm)["config"]["window"]["ymax"] == 0.5
    assert json.loads(raw)["p_harmonic"] == pytest.approx(json.loads(norm)["p_harmonic"], rel=1e-9)


def test_window_mismatch_needs_normalize(tmp_path, capsys):
    (tmp_path / "a.csv").write_text("# window=0,0,1,1\nx,y\n0.1,0.1\n0.5,0.5\n")
    (tmp_path / "b.csv").write_text("# window=0,0,2,2\nx,y\n0.2,0.1\n1.5,0.5\n")
    code, _, err = run(capsys, "test-single", tmp_path / "a.csv", tmp_path / "b.csv", "--no-normalize")
    assert code == 2 and "window" in err
    code, _, _ = run(capsys, "test-single", tmp_path / "a.csv", tmp_path / "b.csv", "--min-points", 2)
    assert code == 0


def test_parse_errors_have_line_numbers(tmp_path, two_files, capsys):
    a, _ = two_files
    bad = tmp_path / "bad.csv"
    bad.write_text("x,y\n0.1,0.2\n0.3\n")
    code, _, err = run(capsys, "test-single", bad, a)
    assert code == 2 and "bad.csv:3" in err
    (tmp_path / "nohdr.csv").write_text("0.1,0.2\n")
    assert run(capsys, "test-single", tmp_path / "nohdr.csv", a)[0] == 2
    assert run(capsys, "test-single", tmp_path / "missing.csv", a)[0] == 2


def test_min_points_warning_and_strict(tmp_path, two_files, capsys):
    a, _ = two_files
    small = tmp_path / "s.csv"
    small.write_text("x,y\n" + "\n".join(f"{0.1 * k},{0.05 * k}" for k in range(1, 6)) + "\n")
    code, _, err = run(capsys, "test-single", small, a, "--window", "0,0,1,1")
    assert code == 0 and "warning" in err
    code, _, _ = run(capsys, "test-single", small, a, "--window", "0,0,1,1", "--strict")
    assert code == 3


def test_degeneracy_exit_code(tmp_path, two_files, capsys):
    a, _ = two_files
    one = tmp_path / "one.csv"
    one.write_text("x,y\n0.5,0.5\n")
    assert run(capsys, "test-single", one, a, "--window", "0,0,1,1")[0] == 3


def test_replicated_command(tmp_path, capsys):
    f = tmp_path / "g.csv"
    run(capsys, "simulate", "--process", "csr", "--replicates", 6, "--seed", 5, "-o", f)
    code, out, _ = run(capsys, "test-replicated", f, f, "--json")
    d = json.loads(out)
    assert code == 0 and d["p_cauchy"] == 1.0 and d["groups"]["A"]["patterns"] == 6
    g = tmp_path / "h.csv"
    run(capsys, "simulate", "--process", "csr", "--n", 180, "--thin", "exp", "--replicates", 6, "--seed", 6, "-o", g)
    code, out, _ = run(capsys, "test-replicated", f, g)
    assert code == 0 and "points/pattern" in out
    one = tmp_path / "one.csv"
    one.write_text("pattern_id,x,y\na,0.1,0.1\na,0.2,0.3\n")
    assert run(capsys, "test-replicated", one, f)[0] == 3


def test_embed_command(tmp_path, capsys):
    f = tmp_path / "o.csv"
    f.write_text("x,y\n0,0\n")
    code, out, _ = run(capsys, "embed", f)
    v = np.array(json.loads(out)["values"])
    assert code == 0 and np.all(v[0::2] == 0.0)
    rng = np.random.default_rng(1)
    pts = rng.uniform(size=(30, 2))
    g, h = tmp_path / "g.csv", tmp_path / "h.csv"
    g.write_text("x,y\n" + "".join(f"{float(p[0])!r},{float(p[1])!r}\n" for p in pts))
    h.write_text("x,y\n" + "".join(f"{float(p[0])!r},{float(p[1])!r}\n" for p in pts[::-1]))
    _, out_g, _ = run(capsys, "embed", g)
    _, out_h, _ = run(capsys, "embed", h)
    assert out_g == out_h
    lib = embed_pattern(build_feature_map(EmbeddingConfig.default()), PointPattern(pts, Window.unit()))
    assert json.loads(out_g)["values"] == [float(x) for x in lib.values]


def test_config_file_and_flag_precedence(tmp_path, two_files, capsys):
    a, b = two_files
    cfg = tmp_path / "c.cfg"
    cfg.write_text("# test\nell = 2\nsigmas = 1/8w\nbf = false\n")
    _, out, _ = run(capsys, "test-single", a, b, "--config", cfg, "--json")
    d = json.loads(out)
    assert d["D"] == 2 * 4 * 2 and d["mean_bf"] is None
    _, out, _ = run(capsys, "test-single", a, b, "--config", cfg, "--ell", 3, "--json")
    assert json.loads(out)["D"] == 2 * 4 * 3
    cfg.write_text("nonsense = 1\n")
    assert run(capsys, "test-single", a, b, "--config", cfg)[0] == 2


def test_parse_sigmas():
    w = Window(0, 0, 4, 2)
    assert parse_sigmas("1/16w,1/8w,1/4w", w) == (0.25, 0.5, 1.0)
    assert parse_sigmas("0.3,0.1", w) == (0.1, 0.3)
    with pytest.raises(ValueError):
        parse_sigmas("abc", w)


def test_experiment_command(tmp_path, capsys):
    out = tmp_path / "out"
    code, text, _ = run(capsys, "experiment", "--table", 3, "--reps", 8, "--seed", 1, "--outdir", out)
    assert code == 0 and (out / "table3.csv").exists() and (out / "table3.json").exists()
    scen = tmp_path / "s.json"
    spec = {"kind": "poisson", "expected_n": 60.0}
    scen.write_text(json.dumps({"name": "null", "specA": spec, "specB": spec, "reps": 20}))
    code, text, _ = run(capsys, "experiment", "--scenario", scen, "--histogram", "--outdir", out)
    assert code == 0 and (out / "histogram.csv").exists()
    assert run(capsys, "experiment", "--outdir", out)[0] == 2


def test_console_entry_point(two_files):
    a, b = two_files
    proc = subprocess.run([sys.executable, "-m", "akme.cli", "test-single", str(a), str(b)],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and "p_cauchy" in proc.stdout
