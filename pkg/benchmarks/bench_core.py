"""Compare the compiled kernels with the pure-Python fallback.

    python benchmarks/bench_core.py [--repeat 5]

Prints the best-of-N wall time per kernel for both backends and the speedup.
The end-to-end row times one default single-pattern test (D = 96, n = 400
per pattern, Bayes factors included).
"""

import argparse
import timeit

import numpy as np

from akme import _fallback
from akme._backend import BACKEND, kernels


def cases():
    rng = np.random.default_rng(0)
    from akme import EmbeddingConfig, build_feature_map
    fm = build_feature_map(EmbeddingConfig.default())
    out = []
    for n in (100, 1000, 10000):
        pts = np.ascontiguousarray(rng.uniform(size=(n, 2)))
        out.append((f"feature_moments n={n}", "feature_moments", (pts, fm.freqs, fm.coefs)))
    pts = np.ascontiguousarray(rng.uniform(-0.04, 1.04, size=(2500, 2)))
    out.append(("hardcore_retain n=2500 r=0.04", "hardcore_retain", (pts, rng.uniform(size=2500), 0.04)))
    out.append(("jzs_bf10 x96", "jzs_many", None))
    return out


def _call(mod, name, args):
    if name == "jzs_many":
        ts = np.linspace(0.0, 4.0, 96)
        return lambda: [mod.jzs_bf10(t, 400.0, 380.0, np.sqrt(2) / 2) for t in ts]
    fn = getattr(mod, name)
    return lambda: fn(*args)


def end_to_end(repeat):
    from akme import single_pattern_test
    from akme.pointprocess import IntensityModel, ProcessSpec, simulate
    X = simulate(ProcessSpec("poisson", 400.0, IntensityModel("linear", 1.0)), 1)
    Y = simulate(ProcessSpec("poisson", 400.0, IntensityModel("linear", 2.0)), 2)
    return min(timeit.repeat(lambda: single_pattern_test(X, Y, compute_bf=True), number=1, repeat=repeat))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if BACKEND != "compiled":
        print("compiled extension not available; only the fallback can be timed")
    print(f"{'kernel':<32}{'compiled ms':>12}{'python ms':>12}{'speedup':>9}")
    for label, name, data in cases():
        py = min(timeit.repeat(_call(_fallback, name, data), number=1, repeat=args.repeat))
        if BACKEND == "compiled":
            c = min(timeit.repeat(_call(kernels, name, data), number=1, repeat=args.repeat))
            print(f"{label:<32}{c * 1e3:>12.3f}{py * 1e3:>12.3f}{py / c:>8.1f}x")
        else:
            print(f"{label:<32}{'-':>12}{py * 1e3:>12.3f}{'-':>9}")
    print(f"{'single test, D=96, BF (' + BACKEND + ')':<32}{end_to_end(args.repeat) * 1e3:>12.3f}")


if __name__ == "__main__":
    main()
