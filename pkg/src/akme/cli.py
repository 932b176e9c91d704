"""Command-line interface: ``akme <command> ...``.

Exit codes: 0 success, 2 parse or configuration error, 3 statistical
degeneracy (too few points or patterns).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from akme import __version__
from akme.comparison import replicated_test, single_pattern_test
from akme.csvio import (
    bounding_window,
    normalized_window,
    parse_window,
    read_points,
    read_replicated,
    write_patterns,
)
from akme.embedding import EmbeddingConfig, PointPattern, Window, build_feature_map, embed_pattern
from akme.errors import AkmeError, DegeneracyError, InsufficientPointsError, WindowMismatchError
from akme.pointprocess import IntensityModel, ProcessSpec, child_seed, simulate

log = logging.getLogger("akme")

EXIT_OK, EXIT_USAGE, EXIT_DEGENERATE = 0, 2, 3
DEFAULT_SIGMAS = "1/16w,1/8w,1/4w"
_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


class ConfigError(AkmeError, ValueError):
    pass


# -- helpers -----------------------------------------------------------------

def parse_sigmas(text: str, window: Window) -> tuple:
    """Comma-separated bandwidths; a trailing ``w`` means a fraction of the
    window's longest side. Values may be written as fractions (``1/16w``)."""
    out = []
    for tok in (t.strip() for t in text.split(",")):
        if not tok:
            continue
        rel = tok.endswith("w")
        try:
            v = float(Fraction(tok[:-1] if rel else tok))
        except (ValueError, ZeroDivisionError):
            raise ConfigError(f"bad bandwidth {tok!r}") from None
        out.append(v * window.longest_side if rel else v)
    if not out:
        raise ConfigError("no bandwidths given")
    return tuple(sorted(out))


def _resolve_window(args, point_sets, declared):
    """Explicit --window, else the declared windows, else the tight bounding box."""
    if args.window is not None:
        window = parse_window(args.window)
    else:
        decl = {w for w in declared if w is not None}
        if len(decl) > 1:
            if not args.normalize:
                raise WindowMismatchError(
                    f"input files declare different windows {sorted(w.as_tuple() for w in decl)}; "
                    "pass --window or --normalize")
            window = Window(min(w.xmin for w in decl), min(w.ymin for w in decl),
                            max(w.xmax for w in decl), max(w.ymax for w in decl))
        elif decl:
            window = decl.pop()
        else:
            window = bounding_window(*point_sets)
    return window


def _patterns_in(window: Window, normalize: bool, point_sets):
    pats = [PointPattern(p, window) for p in point_sets]
    if normalize:
        target = normalized_window(window)
        pats = [p.scaled(target) for p in pats]
    return pats


def _check_min_points(args, labelled):
    small = [(label, n) for label, n in labelled if n < args.min_points]
    if not small:
        return
    msg = ", ".join(f"{label} has {n}" for label, n in small)
    if args.strict:
        raise InsufficientPointsError(f"below --min-points={args.min_points}: {msg}")
    print(f"warning: below --min-points={args.min_points}: {msg}", file=sys.stderr)


def _config(args, window: Window) -> EmbeddingConfig:
    return EmbeddingConfig(args.m, args.ell, parse_sigmas(args.sigmas, window), window)


def _fmt(v):
    return "NA" if v is None else f"{v:.6g}"


def _print_result(res, extra=()):
    print(f"D             {res.D}")
    print(f"p_harmonic    {_fmt(res.p_harmonic)} ({res.harmonic_branch})")
    print(f"p_cauchy      {_fmt(res.p_cauchy)}")
    print(f"p_bonferroni  {_fmt(res.p_bonferroni)}")
    print(f"mean_bf       {_fmt(res.mean_bf)}")
    for k, v in extra:
        print(f"{k:<13} {v}")
    print(f"flags         {', '.join(res.flags) if res.flags else 'none'}")


# -- commands ------------------------------------------------------------------

def cmd_test_single(args) -> int:
    (px, wx), (py, wy) = read_points(args.x), read_points(args.y)
    window = _resolve_window(args, [px, py], [wx, wy])
    X, Y = _patterns_in(window, args.normalize, [px, py])
    _check_min_points(args, [(str(args.x), X.n), (str(args.y), Y.n)])
    ess = None
    if args.ess is not None:
        try:
            ess = tuple(float(v) for v in args.ess.split(","))
        except ValueError:
            raise ConfigError(f"--ess needs two numbers, got {args.ess!r}") from None
        if len(ess) != 2:
            raise ConfigError(f"--ess needs two numbers, got {args.ess!r}")
    res = single_pattern_test(X, Y, _config(args, X.window), ess_override=ess, compute_bf=args.bf)
    if args.json:
        print(res.to_json(indent=2))
    else:
        _print_result(res, [("sizes", f"{X.n}, {Y.n}")])
    return EXIT_OK


def cmd_test_replicated(args) -> int:
    (ga, wa), (gb, wb) = read_replicated(args.a), read_replicated(args.b)
    sets = list(ga.values()) + list(gb.values())
    window = _resolve_window(args, sets, [wa, wb])
    pats = _patterns_in(window, args.normalize, sets)
    A, B = pats[:len(ga)], pats[len(ga):]
    _check_min_points(args, [(f"pattern {pid}", p.n) for pid, p in zip(list(ga) + list(gb), pats)])
    res = replicated_test(A, B, _config(args, pats[0].window), compute_bf=args.bf)
    groups = {
        "A": {"patterns": len(A), "mean_points": float(np.mean([p.n for p in A]))},
        "B": {"patterns": len(B), "mean_points": float(np.mean([p.n for p in B]))},
    }
    if args.json:
        d = res.to_dict()
        d["groups"] = groups
        print(json.dumps(d, indent=2))
    else:
        _print_result(res, [(f"group {k}", f"{g['patterns']} patterns, {g['mean_points']:.1f} points/pattern")
                            for k, g in groups.items()])
    return EXIT_OK


def cmd_embed(args) -> int:
    pts, declared = read_points(args.file)
    if args.window is not None:
        window = parse_window(args.window)
    elif declared is not None:
        window = declared
    elif pts.size and Window.unit().contains(pts).all():
        window = Window.unit()
    else:
        window = bounding_window(pts)
    (pat,) = _patterns_in(window, args.normalize, [pts])
    vec = embed_pattern(build_feature_map(_config(args, pat.window)), pat)
    print(vec.to_json(indent=2 if args.pretty else None))
    return EXIT_OK


_PROCESSES = ("csr", "linear", "sine", "matern2", "cluster")


def spec_from_args(args) -> ProcessSpec:
    window = parse_window(args.window)
    thinning = "exp_linear" if args.thin == "exp" else "none"
    if args.process in ("csr", "linear", "sine"):
        model = IntensityModel("constant" if args.process == "csr" else args.process,
                               0.0 if args.process == "csr" else args.gamma)
        return ProcessSpec("poisson", args.n, model, window=window, thinning=thinning)
    if args.process == "matern2":
        return ProcessSpec("matern2", args.n, r=args.r, window=window, thinning=thinning)
    return ProcessSpec("cluster", args.n, mu=args.mu, radius=args.radius, window=window, thinning=thinning)


def cmd_simulate(args) -> int:
    spec = spec_from_args(args)
    if args.replicates < 1:
        raise ConfigError("--replicates must be >= 1")
    if args.replicates == 1:
        payload, replicated = simulate(spec, child_seed(args.seed, 0)), False
    else:
        payload = {f"p{k}": simulate(spec, child_seed(args.seed, k)) for k in range(args.replicates)}
        replicated = True
    if args.out is None or args.out == "-":
        write_patterns(sys.stdout, payload, replicated=replicated)
    else:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            write_patterns(fh, payload, replicated=replicated)
    return EXIT_OK


def cmd_experiment(args) -> int:
    from akme import experiments

    outdir = Path(args.outdir)
    if (args.table is None) == (args.scenario is None):
        raise ConfigError("give exactly one of --table or --scenario")
    if args.table is not None:
        run = experiments.run_table(args.table, reps=args.reps, seed=args.seed, outdir=outdir)
        summary = [(r.scenario, r.rates["harmonic"]) for r in run.results]
    else:
        try:
            d = json.loads(Path(args.scenario).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read scenario file: {exc}") from None
        d.setdefault("seed", args.seed)
        if args.reps is not None:
            d["reps"] = args.reps
        try:
            scen = experiments.Scenario.from_dict(d)
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"bad scenario file: {exc}") from None
        if args.histogram:
            hist = experiments.run_calibration_histogram(scen, bins=args.bins)
            experiments.write_histogram_csv(hist, outdir / "histogram.csv")
            print(f"cauchy uniformity p  {hist['cauchy_uniformity_p']:.4g}")
            print(f"harmonic top-bin     {hist['harmonic_top_bin_ratio']:.3g} x uniform")
            print(f"mean BF < 1          {hist['fraction_bf_below_one']:.3f}")
            print(f"wrote {outdir / 'histogram.csv'}")
            return EXIT_OK
        table = experiments.run_scenario(scen)
        run = experiments.TableRun(0, scen.reps, scen.seed, [table], table.runtime)
        experiments.write_table(run, outdir)
        summary = [(table.scenario, table.rates["harmonic"])]
    for name, rates in summary:
        print(f"{name:<28} " + " ".join(f"{v:.3f}" for v in rates))
    print(f"wrote results to {outdir}")
    return EXIT_OK


# -- parser --------------------------------------------------------------------

def _common(p, test=False):
    p.add_argument("--config", help="flat key=value file mirroring the long options; flags win")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json", action="store_true", help="machine-readable output")
    p.add_argument("-v", "--verbose", action="store_true")


def _embedding_opts(p, normalize_default):
    p.add_argument("--window", help="xmin,ymin,xmax,ymax (default: declared in file, else bounding box)")
    p.add_argument("--normalize", action=argparse.BooleanOptionalAction, default=normalize_default,
                   help="rescale the window so its longest side is 1")
    p.add_argument("--m", type=int, default=4, help="number of projection directions")
    p.add_argument("--ell", type=int, default=4, help="number of radial nodes")
    p.add_argument("--sigmas", default=DEFAULT_SIGMAS,
                   help="bandwidths; suffix w = fraction of longest side (default %(default)s)")


def _test_opts(p):
    _embedding_opts(p, True)
    p.add_argument("--bf", action=argparse.BooleanOptionalAction, default=True,
                   help="compute the mean Bayes factor")
    p.add_argument("--min-points", type=int, default=15)
    p.add_argument("--strict", action="store_true", help="treat --min-points as an error")


def build_parser():
    parser = argparse.ArgumentParser(prog="akme", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    subs = {}

    p = sub.add_parser("test-single", help="compare two single patterns")
    p.add_argument("x", type=Path)
    p.add_argument("y", type=Path)
    _test_opts(p)
    p.add_argument("--ess", help="effective sample sizes nX,nY")
    p.set_defaults(func=cmd_test_single)
    subs["test-single"] = p

    p = sub.add_parser("test-replicated", help="compare two groups of replicated patterns")
    p.add_argument("a", type=Path)
    p.add_argument("b", type=Path)
    _test_opts(p)
    p.set_defaults(func=cmd_test_replicated)
    subs["test-replicated"] = p

    p = sub.add_parser("embed", help="emit the mean embedding of a pattern as JSON")
    p.add_argument("file", type=Path)
    _embedding_opts(p, False)
    p.add_argument("--pretty", action="store_true")
    p.set_defaults(func=cmd_embed)
    subs["embed"] = p

    p = sub.add_parser("simulate", help="draw a seeded pattern")
    p.add_argument("--process", choices=_PROCESSES, default="csr")
    p.add_argument("--n", type=float, default=100.0, help="expected count before thinning")
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--r", type=float, default=0.02, help="hardcore distance")
    p.add_argument("--mu", type=float, default=2.0, help="mean offspring per cluster")
    p.add_argument("--radius", type=float, default=0.1, help="cluster radius")
    p.add_argument("--thin", choices=("none", "exp"), default="none")
    p.add_argument("--window", default="0,0,1,1")
    p.add_argument("--replicates", type=int, default=1)
    p.add_argument("--out", "-o")
    p.set_defaults(func=cmd_simulate)
    subs["simulate"] = p

    p = sub.add_parser("experiment", help="run a Monte-Carlo table or scenario")
    p.add_argument("--table", type=int, choices=(1, 2, 3, 4))
    p.add_argument("--scenario", type=Path, help="scenario JSON file")
    p.add_argument("--reps", type=int, default=None)
    p.add_argument("--outdir", default="akme_out")
    p.add_argument("--histogram", action="store_true", help="emit null calibration histograms")
    p.add_argument("--bins", type=int, default=20)
    p.set_defaults(func=cmd_experiment)
    subs["experiment"] = p

    for p in subs.values():
        _common(p)
    return parser, subs


def read_config_file(path) -> dict:
    out = {}
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    for lineno, line in enumerate(lines, start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        k, v = (s.strip() for s in line.split("=", 1))
        out[k.lstrip("-").replace("-", "_")] = v
    return out


def _apply_config(sub: argparse.ArgumentParser, cfg: dict):
    actions = {a.dest: a for a in sub._actions}
    defaults = {}
    for key, raw in cfg.items():
        if key in ("config", "help") or key not in actions:
            raise ConfigError(f"unknown config key {key!r}")
        act = actions[key]
        if act.nargs == 0:
            low = raw.lower()
            if low not in _TRUE | _FALSE:
                raise ConfigError(f"config key {key!r} needs a boolean, got {raw!r}")
            defaults[key] = low in _TRUE
        else:
            defaults[key] = raw
    sub.set_defaults(**defaults)


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, subs = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.config:
            _apply_config(subs[args.command], read_config_file(args.config))
            args = parser.parse_args(argv)
        if args.command == "experiment" and args.table is not None and args.reps is None:
            from akme.experiments import DEFAULT_REPS
            args.reps = DEFAULT_REPS
        logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        return args.func(args)
    except DegeneracyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (AkmeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except argparse.ArgumentError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
