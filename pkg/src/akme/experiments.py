"""Monte-Carlo harness for size/power tables and null calibration histograms.

Replication ``k`` of a scenario draws its patterns from streams
``child_seed(scenario.seed, k, side, j)`` so results do not depend on how
replications are scheduled. ``AKME_THREADS`` caps the number of worker
processes (default 1, i.e. serial).
"""

from __future__ import annotations

import csv
import json
import os
import platform
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats as sps

from akme._backend import BACKEND
from akme.comparison import replicated_test, single_pattern_test
from akme.embedding import EmbeddingConfig, build_feature_map
from akme.pointprocess import (
    IntensityModel,
    ProcessSpec,
    child_seed,
    effective_sample_size,
    make_rng,
    mean_retention,
    simulate,
)

COMBINERS = ("harmonic", "cauchy", "bonferroni")
DEFAULT_ALPHAS = (0.01, 0.05, 0.1)
DEFAULT_REPS = 500

# Rejection rates reported in the source tables (harmonic mean p-value),
# keyed by (table, row) -> rates at alpha = 0.01, 0.05, 0.1.
PAPER_VALUES = {
    (1, "Size Linear 1-1 n=100"): (0.011, 0.056, 0.109),
    (1, "Size Linear 1-1 n=400"): (0.016, 0.059, 0.109),
    (1, "Size Linear 1-1 n=800"): (0.008, 0.054, 0.094),
    (1, "Size Linear 2-2 n=100"): (0.008, 0.056, 0.108),
    (1, "Size Linear 2-2 n=400"): (0.014, 0.056, 0.098),
    (1, "Size Linear 2-2 n=800"): (0.008, 0.048, 0.108),
    (1, "Size Linear 3-3 n=100"): (0.010, 0.052, 0.100),
    (1, "Size Linear 3-3 n=400"): (0.011, 0.050, 0.098),
    (1, "Size Linear 3-3 n=800"): (0.016, 0.062, 0.101),
    (1, "Size Sine 1-1 n=100"): (0.015, 0.062, 0.106),
    (1, "Size Sine 1-1 n=400"): (0.014, 0.057, 0.102),
    (1, "Size Sine 1-1 n=800"): (0.010, 0.056, 0.104),
    (1, "Size Sine 2-2 n=100"): (0.010, 0.059, 0.104),
    (1, "Size Sine 2-2 n=400"): (0.008, 0.048, 0.087),
    (1, "Size Sine 2-2 n=800"): (0.011, 0.052, 0.092),
    (1, "Size Sine 3-3 n=100"): (0.010, 0.060, 0.106),
    (1, "Size Sine 3-3 n=400"): (0.014, 0.056, 0.104),
    (1, "Size Sine 3-3 n=800"): (0.008, 0.053, 0.088),
    (1, "Power Linear 1-2 n=100"): (0.082, 0.218, 0.320),
    (1, "Power Linear 1-2 n=400"): (0.656, 0.826, 0.886),
    (1, "Power Linear 1-2 n=800"): (0.976, 0.996, 0.998),
    (1, "Power Linear 1-3 n=100"): (0.602, 0.780, 0.839),
    (1, "Power Linear 1-3 n=400"): (1.000, 1.000, 1.000),
    (1, "Power Linear 1-3 n=800"): (1.000, 1.000, 1.000),
    (1, "Power Linear 2-3 n=100"): (0.069, 0.184, 0.266),
    (1, "Power Linear 2-3 n=400"): (0.527, 0.740, 0.809),
    (1, "Power Linear 2-3 n=800"): (0.932, 0.976, 0.988),
    (1, "Power Sine 1-2 n=100"): (0.412, 0.636, 0.734),
    (1, "Power Sine 1-2 n=400"): (1.000, 1.000, 1.000),
    (1, "Power Sine 1-2 n=800"): (1.000, 1.000, 1.000),
    (1, "Power Sine 1-3 n=100"): (0.964, 0.990, 0.994),
    (1, "Power Sine 1-3 n=400"): (1.000, 1.000, 1.000),
    (1, "Power Sine 1-3 n=800"): (1.000, 1.000, 1.000),
    (1, "Power Sine 2-3 n=100"): (0.088, 0.232, 0.345),
    (1, "Power Sine 2-3 n=400"): (0.812, 0.923, 0.952),
    (1, "Power Sine 2-3 n=800"): (0.996, 1.000, 1.000),
    (2, "Hardcore-1"): (0.012, 0.046, 0.090),
    (2, "Hardcore-2"): (0.008, 0.035, 0.073),
    (2, "Hardcore-3"): (0.002, 0.009, 0.020),
    (2, "Cluster-1"): (0.056, 0.164, 0.271),
    (2, "Cluster-2"): (0.160, 0.372, 0.508),
    (2, "Cluster-3"): (0.413, 0.686, 0.780),
    (3, "Cluster-1"): (0.011, 0.051, 0.086),
    (3, "Cluster-2"): (0.014, 0.048, 0.086),
    (3, "Cluster-3"): (0.015, 0.050, 0.078),
    (4, "Size"): (0.008, 0.045, 0.090),
    (4, "Power"): (0.764, 0.900, 0.938),
}

HARDCORE_R = {1: 0.01, 2: 0.02, 3: 0.04}
CLUSTER_MU = {1: 1.0, 2: 2.0, 3: 4.0}
CLUSTER_RADIUS = 0.1
# spawn-key slot for class assignment, disjoint from pattern indices
CLASS_DRAW_KEY = 2**31


@dataclass
class Scenario:
    """A comparison protocol.

    ``pairs`` lists (specA, specB) process pairs; replication k uses
    ``pairs[k % len(pairs)]``. For replicated tests either side may be a
    tuple of specs (a class pool): each of the ``group_sizes`` patterns then
    picks its class uniformly at random from the pool.
    """

    name: str
    pairs: list
    reps: int = DEFAULT_REPS
    alphas: tuple = DEFAULT_ALPHAS
    test_kind: str = "single"
    group_sizes: tuple = (40, 40)
    ess_correction: bool = False
    compute_bf: bool = False
    seed: int = 0
    config: EmbeddingConfig | None = None

    def __post_init__(self):
        if self.reps < 1:
            raise ValueError("reps must be >= 1")
        if not all(0 < a < 1 for a in self.alphas):
            raise ValueError("alphas must lie in (0, 1)")
        if self.test_kind not in ("single", "replicated"):
            raise ValueError(f"unknown test kind {self.test_kind!r}")
        if not self.pairs:
            raise ValueError("scenario needs at least one process pair")

    @classmethod
    def simple(cls, name, specA: ProcessSpec, specB: ProcessSpec, **kw) -> Scenario:
        return cls(name, [(specA, specB)], **kw)

    @property
    def specA(self) -> ProcessSpec:
        return _pool(self.pairs[0][0])[0]

    @property
    def specB(self) -> ProcessSpec:
        return _pool(self.pairs[0][1])[0]

    def to_dict(self):
        return {
            "name": self.name,
            "pairs": [[_side_to_dict(a), _side_to_dict(b)] for a, b in self.pairs],
            "reps": self.reps,
            "alphas": list(self.alphas),
            "test_kind": self.test_kind,
            "group_sizes": list(self.group_sizes),
            "ess_correction": self.ess_correction,
            "compute_bf": self.compute_bf,
            "seed": self.seed,
            "config": None if self.config is None else self.config.to_dict(),
        }

    @classmethod
    def from_dict(cls, d) -> Scenario:
        d = dict(d)
        if "pairs" in d:
            pairs = [(_side_from_dict(a), _side_from_dict(b)) for a, b in d.pop("pairs")]
        else:
            pairs = [(ProcessSpec.from_dict(d.pop("specA")), ProcessSpec.from_dict(d.pop("specB")))]
        cfg = d.pop("config", None)
        cfg = EmbeddingConfig.from_dict(cfg) if cfg else None
        for key in ("alphas", "group_sizes"):
            if key in d:
                d[key] = tuple(d[key])
        return cls(pairs=pairs, config=cfg, **d)


def _pool(side):
    return tuple(side) if isinstance(side, (tuple, list)) else (side,)


def _side_to_dict(side):
    if isinstance(side, (tuple, list)):
        return [spec.to_dict() for spec in side]
    return side.to_dict()


def _side_from_dict(d):
    if isinstance(d, list):
        return tuple(ProcessSpec.from_dict(x) for x in d)
    return ProcessSpec.from_dict(d)


@dataclass
class RejectionTable:
    scenario: str
    alphas: tuple
    reps: int
    rates: dict
    se: dict
    runtime: float
    pvalues: np.ndarray = field(repr=False, default=None)
    mean_bf: np.ndarray | None = field(repr=False, default=None)

    def rate(self, alpha, combiner="harmonic") -> float:
        return float(self.rates[combiner][list(self.alphas).index(alpha)])


def _ess(pat, spec: ProcessSpec):
    if spec.kind == "cluster":
        return effective_sample_size(pat.n, spec.mu)
    return float(pat.n)


def _one_rep(scenario: Scenario, fm, k: int):
    specA, specB = scenario.pairs[k % len(scenario.pairs)]
    if scenario.test_kind == "single":
        if isinstance(specA, (tuple, list)) or isinstance(specB, (tuple, list)):
            raise ValueError("class pools are only supported for replicated scenarios")
        X = simulate(specA, child_seed(scenario.seed, k, 0))
        Y = simulate(specB, child_seed(scenario.seed, k, 1))
        ess = (_ess(X, specA), _ess(Y, specB)) if scenario.ess_correction else None
        res = single_pattern_test(X, Y, ess_override=ess, compute_bf=scenario.compute_bf, feature_map=fm)
    else:
        A = _draw_group(scenario, k, 0, _pool(specA), scenario.group_sizes[0])
        B = _draw_group(scenario, k, 1, _pool(specB), scenario.group_sizes[1])
        res = replicated_test(A, B, compute_bf=scenario.compute_bf, feature_map=fm)
    bf = np.nan if res.mean_bf is None else res.mean_bf
    return res.p_harmonic, res.p_cauchy, res.p_bonferroni, bf


def _draw_group(scenario, k, side, pool, m):
    if len(pool) == 1:
        classes = np.zeros(m, dtype=int)
    else:
        rng = make_rng(child_seed(scenario.seed, k, side, CLASS_DRAW_KEY))
        classes = rng.integers(len(pool), size=m)
    return [simulate(pool[c], child_seed(scenario.seed, k, side, j)) for j, c in enumerate(classes)]


def _run_chunk(args):
    scenario, ks = args
    fm = build_feature_map(scenario.config or EmbeddingConfig.default(scenario.specA.window))
    return [_one_rep(scenario, fm, k) for k in ks]


def worker_count() -> int:
    try:
        n = int(os.environ.get("AKME_THREADS", "1"))
    except ValueError:
        n = 1
    return max(1, min(n, os.cpu_count() or 1))


def simulate_pvalues(scenario: Scenario, workers: int | None = None):
    """Per-replication (p_harmonic, p_cauchy, p_bonferroni, mean_bf) rows."""
    workers = workers or worker_count()
    ks = np.arange(scenario.reps)
    if workers == 1:
        rows = _run_chunk((scenario, ks))
    else:
        chunks = [(scenario, c) for c in np.array_split(ks, workers * 4) if c.size]
        with ProcessPoolExecutor(workers) as ex:
            rows = [r for part in ex.map(_run_chunk, chunks) for r in part]
    return np.asarray(rows, dtype=float)


def run_scenario(scenario: Scenario, workers: int | None = None) -> RejectionTable:
    t0 = time.perf_counter()
    rows = simulate_pvalues(scenario, workers)
    runtime = time.perf_counter() - t0
    rates, se = {}, {}
    for c, name in enumerate(COMBINERS):
        r = np.array([np.mean(rows[:, c] <= a) for a in scenario.alphas])
        rates[name] = r
        se[name] = np.sqrt(r * (1 - r) / scenario.reps)
    bf = rows[:, 3] if scenario.compute_bf else None
    return RejectionTable(scenario.name, tuple(scenario.alphas), scenario.reps, rates, se,
                          runtime, rows[:, :3], bf)


def uniformity_pvalue(counts) -> float:
    """Chi-square goodness of fit of histogram counts to equal bins."""
    return float(sps.chisquare(np.asarray(counts)).pvalue)


def run_calibration_histogram(scenario: Scenario, bins: int = 20, workers: int | None = None):
    """Null histograms of p^H, p^C (linear bins on [0, 1]) and of the mean
    Bayes factor (log-spaced bins)."""
    if not scenario.compute_bf:
        scenario = Scenario(**{**scenario.__dict__, "compute_bf": True})
    table = run_scenario(scenario, workers)
    edges = np.linspace(0.0, 1.0, bins + 1)
    out = {"scenario": scenario.name, "reps": scenario.reps}
    for c, name in enumerate(("harmonic", "cauchy")):
        counts, _ = np.histogram(table.pvalues[:, c], bins=edges)
        out[name] = {"edges": edges, "counts": counts, "values": table.pvalues[:, c]}
    bf = table.mean_bf[np.isfinite(table.mean_bf)]
    lo, hi = np.log10(bf.min()), np.log10(bf.max())
    if hi - lo < 1e-9:
        lo, hi = lo - 0.5, hi + 0.5
    bf_edges = np.logspace(lo, hi, bins + 1)
    counts, _ = np.histogram(bf, bins=bf_edges)
    out["mean_bf"] = {"edges": bf_edges, "counts": counts, "values": bf}
    out["cauchy_uniformity_p"] = uniformity_pvalue(out["cauchy"]["counts"])
    out["harmonic_top_bin_ratio"] = float(out["harmonic"]["counts"][-1] / (scenario.reps / bins))
    out["fraction_bf_below_one"] = float(np.mean(bf < 1.0))
    return out


def write_histogram_csv(hist, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["quantity", "bin_left", "bin_right", "count"])
        for q in ("harmonic", "cauchy", "mean_bf"):
            e, c = hist[q]["edges"], hist[q]["counts"]
            for i in range(len(c)):
                w.writerow([q, repr(float(e[i])), repr(float(e[i + 1])), int(c[i])])


# -- table grids ---------------------------------------------------------------

def _poisson(variant, gamma, n):
    return ProcessSpec("poisson", float(n), IntensityModel(variant, float(gamma)))


def table_scenarios(table_id: int, reps: int = DEFAULT_REPS, seed: int = 0):
    """The scenario grid behind one of the four rejection-rate tables."""
    out = []

    def add(name, pairs, **kw):
        idx = len(out)
        out.append(Scenario(name, pairs, reps=reps, seed=_scenario_seed(seed, table_id, idx), **kw))

    if table_id == 1:
        for block, combos in (("Size", ((1, 1), (2, 2), (3, 3))), ("Power", ((1, 2), (1, 3), (2, 3)))):
            for variant in ("linear", "sine"):
                for g1, g2 in combos:
                    for n in (100, 400, 800):
                        name = f"{block} {variant.capitalize()} {g1}-{g2} n={n}"
                        add(name, [(_poisson(variant, g1, n), _poisson(variant, g2, n))])
    elif table_id in (2, 3):
        csr = _poisson("constant", 0, 100)
        if table_id == 2:
            for k, r in HARDCORE_R.items():
                add(f"Hardcore-{k}", [(csr, ProcessSpec("matern2", 100.0, r=r))])
        for k, mu in CLUSTER_MU.items():
            add(f"Cluster-{k}", [(csr, ProcessSpec("cluster", 100.0, mu=mu, radius=CLUSTER_RADIUS))],
                ess_correction=(table_id == 3))
    elif table_id == 4:
        homog, inhom = (tuple(c) for c in replicated_classes())
        add("Size", [(homog, homog), (inhom, inhom)], test_kind="replicated")
        add("Power", [(homog, inhom)], test_kind="replicated")
    else:
        raise ValueError(f"unknown table {table_id}")
    return out


def replicated_classes(expected_n: float = 100.0):
    """Seven process classes (CSR, Hardcore-1..3, Cluster-1..3), homogeneous
    and exp(-x)-thinned; thinned bases are inflated so both average ~expected_n."""
    def classes(thinning):
        n = expected_n / mean_retention(thinning)
        out = [ProcessSpec("poisson", n, thinning=thinning)]
        out += [ProcessSpec("matern2", n, r=r, thinning=thinning) for r in HARDCORE_R.values()]
        out += [ProcessSpec("cluster", n, mu=mu, radius=CLUSTER_RADIUS, thinning=thinning)
                for mu in CLUSTER_MU.values()]
        return out
    return classes("none"), classes("exp_linear")


def _scenario_seed(seed, table_id, idx) -> int:
    return int(np.random.SeedSequence([seed, table_id, idx]).generate_state(1)[0])


def null_poisson_scenario(reps: int = 2000, seed: int = 0, n: int = 100) -> Scenario:
    """Null single-pattern comparison between two inhomogeneous Poisson
    patterns of the same (Linear, gamma=2) model."""
    spec = _poisson("linear", 2, n)
    return Scenario.simple(f"Null Linear 2-2 n={n}", spec, spec, reps=reps, seed=seed, compute_bf=True)


@dataclass
class TableRun:
    table_id: int
    reps: int
    seed: int
    results: list
    runtime: float

    def rows(self):
        """Flat rows: scenario, alpha, combiner, rate, se, paper_value."""
        out = []
        for res in self.results:
            paper = PAPER_VALUES.get((self.table_id, res.scenario))
            for c in COMBINERS:
                for i, a in enumerate(res.alphas):
                    pv = paper[i] if (paper is not None and c == "harmonic") else None
                    out.append((res.scenario, a, c, float(res.rates[c][i]), float(res.se[c][i]), pv))
        return out


def run_table(table_id: int, reps: int = DEFAULT_REPS, seed: int = 0, outdir=None,
              workers: int | None = None) -> TableRun:
    t0 = time.perf_counter()
    results = [run_scenario(s, workers) for s in table_scenarios(table_id, reps, seed)]
    run = TableRun(table_id, reps, seed, results, time.perf_counter() - t0)
    if outdir is not None:
        write_table(run, outdir)
    return run


def write_table(run: TableRun, outdir, include_runtime: bool = False):
    """``table<k>.csv`` plus a JSON manifest. Runtimes go to a separate
    ``table<k>_timing.json`` so the result files are reproducible byte for byte."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    with open(outdir / f"table{run.table_id}.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["scenario", "alpha", "combiner", "rate", "se", "paper_value"])
        for scen, a, c, rate, se, pv in run.rows():
            w.writerow([scen, a, c, f"{rate:.6f}", f"{se:.6f}", "" if pv is None else f"{pv:.3f}"])
    manifest = {
        "table": run.table_id,
        "reps": run.reps,
        "seed": run.seed,
        "backend": BACKEND,
        "paper_values_note": "paper_value column: rates reported in the source tables (harmonic combiner)",
        "scenarios": [s.to_dict() for s in table_scenarios(run.table_id, run.reps, run.seed)],
    }
    (outdir / f"table{run.table_id}.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))
    timing = {"runtime_s": run.runtime, "per_scenario_s": {r.scenario: r.runtime for r in run.results},
              "python": platform.python_version(), "backend": BACKEND}
    (outdir / f"table{run.table_id}_timing.json").write_text(json.dumps(timing, indent=2))
