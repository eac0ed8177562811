"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .dynamics import dgp_catalog, get_dgp, simulate_ms
from .estimation import EstimationConfig, fit_ms
from .exceptions import (EmptySeries, InsufficientData, LengthMismatch, MSFuzzyError,
                         ParseError, UnknownLabel, ValidationError, WindowTooLarge)
from .experiments import default_grid, emit_density_grid, run_gdp_case_study, run_monte_carlo
from .fuzzy import FuzzyConfig, fuzzy_kmeans, write_membership_csv
from .indices import INDEX_NAMES, SelectConfig, homogeneity_test, select_k
from .io import load_csv

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3
DATA_ERRORS = (ParseError, EmptySeries, ValidationError, UnknownLabel, LengthMismatch,
               InsufficientData, WindowTooLarge, FileNotFoundError, IsADirectoryError)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _add_input(p, required=True):
    p.add_argument("--input", required=required, help="CSV file with a header row")
    p.add_argument("--column", default=None, help="value column (default: the only numeric one)")
    p.add_argument("--transform", choices=["none", "growth", "pct_annualized_growth"],
                   default="none")
    p.add_argument("--start", default=None, help="first label to keep (inclusive)")
    p.add_argument("--end", default=None, help="last label to keep (inclusive)")


def _series(args):
    return load_csv(args.input, args.column, args.transform, args.start, args.end)


def _emit_json(obj, out=None):
    text = json.dumps(obj, indent=2, default=float) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_simulate(args):
    y, s = simulate_ms(get_dgp(args.dgp).spec, args.T, args.seed)
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "y", "state"])
        for t in range(len(y)):
            w.writerow([t + 1, repr(float(y.values[t])), int(s.states[t])])


def cmd_estimate(args):
    cfg = EstimationConfig.from_file(args.config) if args.config else EstimationConfig()
    if args.se:
        cfg = EstimationConfig(**{**cfg.to_dict(), "std_errors": True})
    est = fit_ms(_series(args), args.k, args.ar, cfg)
    _emit_json(est.to_dict(), args.out)


def cmd_fuzzy(args):
    y = _series(args)
    res = fuzzy_kmeans(y, args.k, args.m, FuzzyConfig(seed=args.seed))
    if args.out:
        write_membership_csv(args.out, res, y.labels)
    _emit_json({"centroids": res.centroids.tolist(), "objective": res.objective,
                "iterations": res.iterations, "converged": res.converged})


def cmd_select_k(args):
    cfg = SelectConfig(k_max=args.kmax, m=args.m, lam=args.lam, fuzzy=FuzzyConfig(seed=args.seed))
    rep = select_k(_series(args), config=cfg)
    if args.out:
        rep.to_csv(args.out)
    _emit_json({"selected_k": rep.selected_k, "best_value": rep.best_value,
                "values": {n: rep.values[n].tolist() for n in INDEX_NAMES}, "ks": list(rep.ks)})


def cmd_homogeneity(args):
    y = _series(args)
    cfg = SelectConfig(k_max=args.kmax, fuzzy=FuzzyConfig(seed=args.seed))
    rep = select_k(y, config=cfg)
    pv = homogeneity_test(y, rep.best_value, n_sim=args.nsim, rng_seed=args.seed, config=cfg)
    _emit_json({"best_value": rep.best_value, "selected_k": rep.selected_k, "p_values": pv})


def cmd_montecarlo(args):
    if args.dgps.strip().lower() == "all":
        labels = [e.label for e in dgp_catalog()]
    else:
        labels = [lab for lab in args.dgps.split(",") if lab.strip()]
    report = run_monte_carlo(labels, args.reps, args.T, args.seed, args.jobs)
    report.write(args.out)
    print(f"wrote {len(report.replications)} replications to {args.out}")


def cmd_gdp(args):
    bundle = run_gdp_case_study(_series(args), seed=args.seed, n_sim=args.nsim,
                                k_max=args.kmax, out_dir=args.out)
    print(f"{bundle['n_obs']} observations; selected k: {bundle['selected_k']}")
    print(f"wrote case-study files to {args.out}")


def cmd_density(args):
    grid = None
    if args.points:
        grid = default_grid(args.dgp, args.points)
    emit_density_grid(args.dgp, grid, args.out)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="msfuzzy", description="Regime-count detection for Markov-switching "
                                                  "series by fuzzy clustering.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("simulate", help="simulate a catalog model")
    p.add_argument("--dgp", required=True)
    p.add_argument("--T", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("estimate", help="maximum-likelihood fit of an MS(k)-AR(p) model")
    _add_input(p)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--ar", type=int, choices=[0, 1], required=True)
    p.add_argument("--config", default=None, help="JSON estimation settings")
    p.add_argument("--se", action="store_true", help="add robust standard errors")
    p.add_argument("--out", default=None, help="JSON output path (default stdout)")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("fuzzy", help="fuzzy k-means clustering")
    _add_input(p)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--m", type=float, default=2.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="membership CSV path")
    p.set_defaults(func=cmd_fuzzy)

    p = sub.add_parser("select-k", help="validity-index scan over the number of clusters")
    _add_input(p)
    p.add_argument("--kmax", type=int, default=6)
    p.add_argument("--m", type=float, default=2.0)
    p.add_argument("--lam", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="index table CSV path")
    p.set_defaults(func=cmd_select_k)

    p = sub.add_parser("homogeneity", help="simulation test against a clusterless Normal null")
    _add_input(p)
    p.add_argument("--nsim", type=int, default=2000)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--kmax", type=int, default=6)
    p.set_defaults(func=cmd_homogeneity)

    p = sub.add_parser("montecarlo", help="simulation study over catalog models")
    p.add_argument("--dgps", required=True, help="comma-separated labels or 'all'")
    p.add_argument("--reps", type=int, required=True)
    p.add_argument("--T", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_montecarlo)

    p = sub.add_parser("gdp", help="full case study on a GDP levels or growth file")
    _add_input(p)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--nsim", type=int, default=2000)
    p.add_argument("--kmax", type=int, default=6)
    p.set_defaults(func=cmd_gdp)

    p = sub.add_parser("density", help="ergodic mixture density of a catalog model")
    p.add_argument("--dgp", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--points", type=int, default=None)
    p.set_defaults(func=cmd_density)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    try:
        args.func(args)
    except DATA_ERRORS as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (MSFuzzyError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
