"""Command-line entry point: ``colored-mardia {test,simulate,table1,detect,verify}``.

Exit codes: 0 normality not rejected (or all checks passed), 2 normality
rejected (or a check failed), 1 usage or runtime error.
"""
from __future__ import annotations

import argparse
import json
import secrets
import sys

import numpy as np

from . import __version__
from .engine import run_test
from .errors import MardiaError
from .generators import Family, ProcessSpec, SeededRng, generate
from .harness import (
    ExperimentConfig,
    run_detection_curve,
    run_rejection_experiment,
    run_table1,
    write_results,
)
from .null_moments import Model
from .oracle import MAX_HALF_ORDER
from .stats import read_csv, write_csv
from .verify import CASES, run_checks

EXIT_ACCEPT = 0
EXIT_ERROR = 1
EXIT_REJECT = 2

MODE_ALIASES = {
    "iid": Model.IID,
    "scalar": Model.SCALAR_COLORED,
    "bivariate": Model.BIVARIATE_COLORED,
    "embedded": Model.EMBEDDED_BIVARIATE,
    **{m.value: m for m in Model},
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """Argument parser whose usage errors exit with code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _max_lag(text: str):
    if text == "auto":
        return "auto"
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer or 'auto', got {text!r}") from None
    if v < 0:
        raise argparse.ArgumentTypeError(f"max lag must be >= 0, got {v}")
    return v


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return v


def _seed(args) -> int:
    if args.seed is None:
        args.seed = secrets.randbits(32)
        print(f"seed: {args.seed}", file=sys.stderr)
    return args.seed


def _add_seed(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=None,
                   help="master seed; when omitted a random seed is drawn and printed to stderr")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="colored-mardia",
                     description="Mardia kurtosis normality test for colored processes.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    t = sub.add_parser("test", help="test a CSV record for normality",
                       description="Test a CSV record (one column per component) for normality. "
                                   "Exit 0 = not rejected, 2 = rejected, 1 = error.")
    t.add_argument("--input", "-i", required=True, help="CSV file, one column per component, '-' for stdin")
    t.add_argument("--mode", default="iid", choices=sorted(MODE_ALIASES),
                   help="null model (default: iid)")
    t.add_argument("--alpha", type=float, default=0.05, help="significance level (default: 0.05)")
    t.add_argument("--delta", type=_positive_int, default=None,
                   help="embedding stride for a 1-column input in embedded mode")
    t.add_argument("--max-lag", type=_max_lag, default="auto",
                   help="plug-in covariance window, integer or 'auto' (default: auto)")
    t.add_argument("--no-center", action="store_true", help="treat the data as zero mean")
    t.add_argument("--json", action="store_true", help="print the report as JSON")
    t.set_defaults(func=cmd_test)

    s = sub.add_parser("simulate", help="generate a synthetic record as CSV",
                       description="Generate a record from a process family and write it as CSV.")
    s.add_argument("--spec", default=None, help="JSON file describing the process; overrides family flags")
    s.add_argument("--family", default="ar1-gaussian", choices=[f.value for f in Family if f is not Family.EMBEDDED],
                   help="process family (default: ar1-gaussian)")
    s.add_argument("--a", type=float, default=0.8, help="AR(1) coefficient of the marginals (default: 0.8)")
    s.add_argument("--r12", type=float, default=0.8, help="Gaussian copula correlation (default: 0.8)")
    s.add_argument("--theta", type=float, default=None, help="Clayton or Gumbel parameter")
    s.add_argument("--k", type=float, default=None, help="corruption amplitude of the detection mixture")
    s.add_argument("--snr-db", type=float, default=None, help="SNR of the detection mixture in dB")
    s.add_argument("--p", type=_positive_int, default=1, help="dimension of iid-gaussian data (default: 1)")
    s.add_argument("--delta", type=_positive_int, default=None, help="embed the scalar output with this stride")
    s.add_argument("--coupling", default="conditional", choices=["conditional", "frailty"],
                   help="copula coupling of the colored uniforms (default: conditional)")
    s.add_argument("-N", "--length", type=_positive_int, default=1000, help="number of samples (default: 1000)")
    s.add_argument("--output", "-o", default="-", help="output CSV path, '-' for stdout (default)")
    _add_seed(s)
    s.set_defaults(func=cmd_simulate)

    tb = sub.add_parser("table1", help="rejection rates on the copula scenarios",
                        description="Rejection rates of B1_iid, B1_colored and B2 on the Gaussian, "
                                    "Clayton and Gumbel copula scenarios.")
    tb.add_argument("--config", default=None,
                    help="JSON ExperimentConfig; runs that single experiment, explicit flags override it")
    tb.add_argument("-M", "--replications", type=_positive_int, default=None,
                    help="replications per scenario (default: 500)")
    tb.add_argument("--full", action="store_true", help="use 2000 replications")
    tb.add_argument("-N", "--length", type=_positive_int, default=None, help="samples per record (default: 1000)")
    tb.add_argument("--alphas", type=float, nargs="+", default=None, help="levels (default: 0.05 0.10)")
    tb.add_argument("--coupling", default="conditional", choices=["conditional", "frailty"],
                    help="copula coupling (default: conditional)")
    tb.add_argument("--covariance", default=None, choices=["plug-in", "known"],
                    help="covariance source for the colored nulls on Gaussian data (default: plug-in)")
    tb.add_argument("--max-lag", type=_max_lag, default=None, help="plug-in window (default: auto)")
    tb.add_argument("--workers", type=_positive_int, default=None, help="worker processes (default: 1)")
    tb.add_argument("--output-csv", default=None, help="write rates as CSV")
    tb.add_argument("--output-json", default=None, help="write rates and config as JSON")
    _add_seed(tb)
    tb.set_defaults(func=cmd_table1)

    d = sub.add_parser("detect", help="detection curve over an SNR grid",
                       description="Rejection rate versus SNR for an embedded AR(1) carrier corrupted "
                                   "by Laplace-driven AR(2) noise.")
    d.add_argument("--snr-min", type=float, default=-30.0, help="lowest SNR in dB (default: -30)")
    d.add_argument("--snr-max", type=float, default=20.0, help="highest SNR in dB (default: 20)")
    d.add_argument("--snr-points", type=_positive_int, default=30, help="grid points (default: 30)")
    d.add_argument("-M", "--replications", type=_positive_int, default=200,
                   help="replications per grid point (default: 200)")
    d.add_argument("--alpha", type=float, default=0.05, help="significance level (default: 0.05)")
    d.add_argument("-N", "--length", type=_positive_int, default=1000, help="embedded samples (default: 1000)")
    d.add_argument("--delta", type=_positive_int, default=2, help="embedding stride (default: 2)")
    d.add_argument("--max-lag", type=_max_lag, default="auto", help="plug-in window (default: auto)")
    d.add_argument("--workers", type=_positive_int, default=1, help="worker processes (default: 1)")
    d.add_argument("--output-csv", default=None, help="write rates as CSV")
    d.add_argument("--output-json", default=None, help="write rates and config as JSON")
    _add_seed(d)
    d.set_defaults(func=cmd_detect)

    v = sub.add_parser("verify", help="self-checks of the moment oracle and closed forms",
                       description="Run oracle self-checks. Exit 0 iff every check passes.")
    v.add_argument("--case", default="all", choices=["all", *CASES], help="check to run (default: all)")
    v.add_argument("--order", type=int, default=MAX_HALF_ORDER, choices=range(1, MAX_HALF_ORDER + 1),
                   metavar=f"{{1..{MAX_HALF_ORDER}}}",
                   help=f"largest half-order for pairing and catalog checks (default: {MAX_HALF_ORDER})")
    v.add_argument("--seed", type=int, default=0, help="seed of the random covariance draws (default: 0)")
    v.set_defaults(func=cmd_verify)
    return parser


def cmd_test(args) -> int:
    if not 0.0 < args.alpha < 1.0:
        raise UsageError(f"--alpha must lie in (0, 1), got {args.alpha}")
    if args.input == "-":
        from .stats import parse_csv

        x = parse_csv(sys.stdin.read(), "<stdin>")
    else:
        x = read_csv(args.input)
    report = run_test(x, MODE_ALIASES[args.mode], args.alpha, max_lag=args.max_lag,
                      delta=args.delta, assume_zero_mean=args.no_center)
    print(report.to_json() if args.json else report.to_text())
    return EXIT_REJECT if report.reject else EXIT_ACCEPT


def _spec_from_args(args) -> ProcessSpec:
    if args.spec is not None:
        with open(args.spec) as fh:
            return ProcessSpec.from_dict(json.load(fh))
    fam = Family(args.family)
    kw: dict = {"coupling": args.coupling}
    if fam in (Family.AR1_GAUSSIAN, Family.GAUSSIAN_COPULA, Family.CLAYTON_COPULA, Family.GUMBEL_COPULA):
        kw["a"] = args.a
    if fam is Family.GAUSSIAN_COPULA:
        kw["r12"] = args.r12
    if fam in (Family.CLAYTON_COPULA, Family.GUMBEL_COPULA):
        if args.theta is None:
            raise UsageError(f"--theta is required for {fam.value}")
        kw["theta"] = args.theta
    if fam is Family.DETECTION_MIXTURE:
        if (args.k is None) == (args.snr_db is None):
            raise UsageError("give exactly one of --k and --snr-db for detection-mixture")
        kw.update(k=args.k, snr_db=args.snr_db)
    if fam is Family.IID_GAUSSIAN:
        kw["p"] = args.p
    spec = ProcessSpec(fam, **kw)
    if args.delta is not None:
        spec = ProcessSpec(Family.EMBEDDED, delta=args.delta, inner=spec)
    return spec


def cmd_simulate(args) -> int:
    spec = _spec_from_args(args)
    seed = _seed(args)
    x = generate(spec, args.length, SeededRng(seed).generator())
    write_csv(x, sys.stdout if args.output == "-" else args.output)
    return EXIT_ACCEPT


def _write_outputs(table, args) -> None:
    if args.output_csv:
        write_results(table, args.output_csv, "csv")
    if args.output_json:
        write_results(table, args.output_json, "json")


def cmd_table1(args) -> int:
    if args.config is not None:
        cfg = ExperimentConfig.from_json(args.config)
        overrides = {"M": 2000 if args.full else args.replications, "N": args.length,
                     "alphas": tuple(args.alphas) if args.alphas else None, "seed": args.seed,
                     "covariance": args.covariance, "max_lag": args.max_lag, "workers": args.workers}
        d = cfg.to_dict()
        d.update({k: v for k, v in overrides.items() if v is not None})
        if args.seed is None:
            args.seed = d["seed"]
        cfg = ExperimentConfig.from_dict(d)
        table = run_rejection_experiment(cfg)
    else:
        seed = _seed(args)
        M = 2000 if args.full else (args.replications or 500)
        table = run_table1(M, args.length or 1000, seed, tuple(args.alphas or (0.05, 0.10)),
                           coupling=args.coupling, covariance=args.covariance or "plug-in",
                           max_lag=args.max_lag or "auto", workers=args.workers or 1)
    print(table.format())
    _write_outputs(table, args)
    return EXIT_ACCEPT


def cmd_detect(args) -> int:
    if not 0.0 < args.alpha < 1.0:
        raise UsageError(f"--alpha must lie in (0, 1), got {args.alpha}")
    if args.snr_max < args.snr_min:
        raise UsageError("--snr-max must not be below --snr-min")
    seed = _seed(args)
    grid = np.linspace(args.snr_min, args.snr_max, args.snr_points)
    curve = run_detection_curve(grid, args.replications, args.alpha, args.length, seed,
                                delta=args.delta, max_lag=args.max_lag, workers=args.workers)
    print(curve.format())
    for stat in ("B1_iid", "B1_colored", "B2"):
        print(f"50% power SNR {stat:<11}{curve.half_power_snr(stat):.3f} dB")
    _write_outputs(curve, args)
    return EXIT_ACCEPT


def cmd_verify(args) -> int:
    results = run_checks(args.case, args.order, args.seed)
    for r in results:
        print(r.line())
    failed = sum(not r.passed for r in results)
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return EXIT_ACCEPT if failed == 0 else EXIT_REJECT


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (MardiaError, UsageError, ValueError, OSError) as exc:
        print(f"colored-mardia {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
