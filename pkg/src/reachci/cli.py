"""Command-line front end for the experiment harness.

Subcommands map one-to-one onto the harness operations plus a single-cell
``estimate`` and a ``selftest``.  Experiments are configured either by a
TOML manifest (``--manifest``) or by flags; flags override manifest
values.  Failures emit a one-line JSON error record on stderr and a
nonzero exit code: 2 for configuration problems, 3 for runtime failures.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from typing import List, Optional

from .engine import SAMPLERS, StoppingRule, default_sampler, sequential_estimate
from .harness import (
    BORDER_GRID,
    CONFIDENCE_GRID,
    DEFAULT_METHODS,
    ExperimentManifest,
    ResultRow,
    cell_seed,
    format_rows_csv,
    load_manifest,
    run_border_sweep,
    run_convergence,
    run_discrepancy,
    run_probability_sweep,
    selftest,
)
from .models import BernoulliOracle

__all__ = ["main"]

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3

# default grid for prob-sweep: symmetric about 1/2, spanning (0, 1)
PROB_SWEEP_GRID = (0.05, 0.1, 0.2, 0.35, 0.5, 0.65, 0.8, 0.9, 0.95)

_KIND_OF = {
    "border-sweep": "border-sweep",
    "prob-sweep": "probability-sweep",
    "convergence": "convergence",
    "discrepancy": "discrepancy",
}

_DEFAULT_GRID = {
    "border-sweep": BORDER_GRID,
    "probability-sweep": PROB_SWEEP_GRID,
    "convergence": (0.1,),
    "discrepancy": (0.5,),
}

_RUNNER = {
    "border-sweep": run_border_sweep,
    "probability-sweep": run_probability_sweep,
    "convergence": run_convergence,
    "discrepancy": run_discrepancy,
}


class _CliParser(argparse.ArgumentParser):
    """argparse that raises instead of exiting, so errors become records."""

    def error(self, message):
        raise _ConfigError(message)


class _ConfigError(Exception):
    pass


def _add_experiment_flags(sub: argparse.ArgumentParser, default_runs: int) -> None:
    sub.add_argument("--manifest", help="TOML manifest file (flags override it)")
    sub.add_argument("--seed", type=int, help="master seed")
    sub.add_argument("--out-dir", help="output directory for CSV/SVG")
    sub.add_argument("--runs", type=int, default=None,
                     help=f"independent runs per cell (default {default_runs})")
    sub.add_argument("--confidence", type=float, action="append",
                     help="confidence level; repeatable (default: full grid)")
    sub.add_argument("--half-width", type=float, help="target interval half-width")
    sub.add_argument("--method", action="append",
                     help="interval method; repeatable (default: all)")
    sub.add_argument("--sampler", choices=sorted(SAMPLERS),
                     help="force one sampler for every method")


def _build_parser() -> _CliParser:
    parser = _CliParser(prog="reachci", description=__doc__)
    subs = parser.add_subparsers(dest="command", required=True)

    for name, blurb, runs in (
        ("border-sweep", "averaged intervals over a near-zero probability grid", 10),
        ("prob-sweep", "sample counts across the whole probability range", 10),
        ("convergence", "MC vs QMC running-mean error traces", 10),
        ("discrepancy", "exact star discrepancy of low-discrepancy point sets", 20),
    ):
        sub = subs.add_parser(name, help=blurb)
        _add_experiment_flags(sub, runs)
        sub.set_defaults(default_runs=runs)

    est = subs.add_parser("estimate", help="one sequential estimate, CSV on stdout")
    est.add_argument("p_true", type=float, help="true success probability in (0, 1)")
    est.add_argument("--confidence", type=float, default=0.99)
    est.add_argument("--half-width", type=float, default=5e-3)
    est.add_argument("--method", default="clt")
    est.add_argument("--sampler", choices=sorted(SAMPLERS))
    est.add_argument("--seed", type=int, default=0)

    subs.add_parser("selftest", help="run the built-in equivalence checks")
    return parser


def _manifest_for(args: argparse.Namespace) -> ExperimentManifest:
    kind = _KIND_OF[args.command]
    if args.manifest is not None:
        manifest = load_manifest(args.manifest)
        if manifest.kind != kind:
            raise _ConfigError(
                f"manifest kind {manifest.kind!r} does not match subcommand {args.command!r}"
            )
    else:
        manifest = ExperimentManifest(
            kind=kind,
            probabilities=_DEFAULT_GRID[kind],
            runs=args.default_runs,
        )
    updates = {}
    if args.seed is not None:
        updates["master_seed"] = args.seed
    if args.out_dir is not None:
        updates["out_dir"] = args.out_dir
    if args.runs is not None:
        updates["runs"] = args.runs
    if args.confidence:
        updates["confidences"] = tuple(args.confidence)
    if args.half_width is not None:
        updates["half_width"] = args.half_width
    if args.method:
        updates["methods"] = tuple(args.method)
    if args.sampler is not None:
        updates["sampler"] = args.sampler
    return replace(manifest, **updates) if updates else manifest


def _run_estimate(args: argparse.Namespace) -> int:
    if not (0.0 < args.p_true < 1.0):
        raise _ConfigError(f"p_true must lie in (0, 1), got {args.p_true!r}")
    sampler = args.sampler or default_sampler(args.method)
    rule = StoppingRule(confidence=args.confidence, half_width=args.half_width)
    seed = cell_seed(args.seed, "estimate", "bernoulli", args.p_true,
                     args.confidence, args.method, sampler)
    report = sequential_estimate(
        BernoulliOracle(p_true=args.p_true), args.method, rule,
        sampler=args.sampler, seed=seed,
    )
    row = ResultRow(
        experiment="estimate",
        model="bernoulli",
        p_true=args.p_true,
        confidence=args.confidence,
        method=args.method,
        sampler=report.sampler,
        run_index=0,
        lo=report.interval.lo,
        hi=report.interval.hi,
        center=0.5 * (report.interval.lo + report.interval.hi),
        n_used=report.n_used,
        seed=seed,
    )
    sys.stdout.write(format_rows_csv([row]))
    if not report.converged:
        _emit_error("runtime", f"estimate hit the sample cap at n={report.n_used}")
        return EXIT_RUNTIME
    return EXIT_OK


def _run_selftest() -> int:
    failures = selftest()
    if failures:
        _emit_error("runtime", "selftest failures", failures=failures)
        return EXIT_RUNTIME
    sys.stdout.write("selftest: all checks passed\n")
    return EXIT_OK


def _emit_error(kind: str, message: str, **extra) -> None:
    record = {"error": kind, "message": message}
    record.update(extra)
    sys.stderr.write(json.dumps(record, sort_keys=True) + "\n")


def main(argv: Optional[List[str]] = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _ConfigError as exc:
        _emit_error("config", str(exc))
        return EXIT_CONFIG

    try:
        if args.command == "selftest":
            return _run_selftest()
        if args.command == "estimate":
            return _run_estimate(args)
        manifest = _manifest_for(args)
        artifacts = _RUNNER[manifest.kind](manifest)
        sys.stdout.write(f"{artifacts.csv_path}\n")
        if artifacts.svg_path is not None:
            sys.stdout.write(f"{artifacts.svg_path}\n")
        return EXIT_OK
    except (_ConfigError, ValueError, FileNotFoundError) as exc:
        _emit_error("config", str(exc))
        return EXIT_CONFIG
    except Exception as exc:  # runtime failure: report, do not traceback
        _emit_error("runtime", f"{type(exc).__name__}: {exc}")
        return EXIT_RUNTIME


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
