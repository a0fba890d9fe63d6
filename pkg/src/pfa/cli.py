"""Command-line interface.

Subcommands::

    screen    X, Y, noise sd      -> z.csv, sigma.csv
    estimate  z, Sigma, t         -> fdp_report.json, hypotheses.csv
    adjust    z, Sigma            -> adjusted.csv
    control   Sigma, p1, alpha    -> control.json
    variance  Sigma, t            -> variance.json
    simulate  experiment config   -> replicates.csv, summary.json

Exit status is 0 on success, 1 on usage errors and 2 on data errors; errors
are printed to standard error as one JSON object with a ``code`` field.
"""

import argparse
import json
import os
import sys

import numpy as np

from . import __version__
from .adjust import adjusted_pvalues
from .comparators import STOREY_LAMBDA, efron_A_hat, efron_fdp, storey_fdp, storey_p0
from .control import McConfig, find_threshold, variance_of_v
from .errors import DimensionMismatch, PfaError, UsageError
from .factors import DEFAULT_FRACTION, estimate_factors
from .fdp import estimate_fdp, pvalues
from .io import (
    ADJUST_FIELDS,
    HYPOTHESIS_FIELDS,
    SIM_ROW_FIELDS,
    parse_config,
    parse_matrix_csv,
    parse_vector_csv,
    write_json,
    write_matrix_csv,
    write_rows_csv,
    write_vector_csv,
)
from .screening import Design, marginal_z
from .sim import METHODS, DgpSpec, Experiment, replicate_rows, summarize
from .spectral import DEFAULT_EPSILON, build_factor_model


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _flag(value):
    return str(value).strip().lower() in ("1", "true", "yes", "on")


def _floats(text):
    return [float(x) for x in str(text).replace(";", ",").split(",") if x.strip()]


def _words(text):
    return [x.strip() for x in str(text).split(",") if x.strip()]


def _beta(text):
    return "uniform" if str(text).strip().lower() == "uniform" else float(text)


def _common(sub):
    sub.add_argument("--config", help="key=value file; its values override flags")
    sub.add_argument("--header", action="store_true", help="input CSV files start with a header row")
    sub.add_argument("--out-dir", default=".", help="directory for output files (default: .)")


def _model_opts(sub):
    sub.add_argument("--sigma-matrix", help="correlation matrix CSV (p rows x p columns)")
    sub.add_argument("--epsilon", type=float, default=DEFAULT_EPSILON,
                     help="tail tolerance for choosing the number of factors")
    sub.add_argument("--k", type=int, default=None, help="number of factors (overrides --epsilon)")


def build_parser():
    parser = _Parser(prog="pfa", description="Principal factor approximation of the false discovery proportion.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subs = parser.add_subparsers(dest="command", parser_class=_Parser)

    s = subs.add_parser("screen", help="marginal regressions: z-statistics and their correlation")
    _common(s)
    s.add_argument("--x", help="design matrix CSV (n rows x p columns)")
    s.add_argument("--y", help="response CSV (n values)")
    s.add_argument("--noise-sd", type=float, help="known noise standard deviation")

    s = subs.add_parser("estimate", help="estimate the realized FDP at a threshold")
    _common(s)
    _model_opts(s)
    s.add_argument("--z", help="z-statistics CSV")
    s.add_argument("--t", type=float, help="p-value threshold")
    s.add_argument("--fraction", type=float, default=DEFAULT_FRACTION, help="calibration fraction")
    s.add_argument("--p1", type=int, default=None, help="known number of false nulls (Storey oracle mode)")

    s = subs.add_parser("adjust", help="dependence-adjusted p-values and ranking")
    _common(s)
    _model_opts(s)
    s.add_argument("--z", help="z-statistics CSV")
    s.add_argument("--fraction", type=float, default=DEFAULT_FRACTION, help="calibration fraction")

    s = subs.add_parser("control", help="threshold whose approximate FDR equals alpha")
    _common(s)
    _model_opts(s)
    s.add_argument("--alpha", type=float, help="target FDR")
    s.add_argument("--p1", type=int, help="number of false nulls")
    s.add_argument("--seed", type=int, help="Monte-Carlo seed (required)")
    s.add_argument("--n-draws", type=int, default=McConfig.n_draws)
    s.add_argument("--tolerance", type=float, default=McConfig.tolerance)

    s = subs.add_parser("variance", help="Monte-Carlo variance of the number of false discoveries")
    _common(s)
    _model_opts(s)
    s.add_argument("--t", type=float, help="p-value threshold")
    s.add_argument("--null-mask", help="optional CSV of 0/1 flags (1 = true null) restricting the sum")
    s.add_argument("--seed", type=int, default=0, help="Monte-Carlo seed (default: 0)")
    s.add_argument("--n-draws", type=int, default=McConfig.n_draws)

    s = subs.add_parser("simulate", help="replicate experiment on a synthetic dependence structure")
    _common(s)
    s.add_argument("--structure", default="EqualCorrelation")
    s.add_argument("--n", type=int, default=100)
    s.add_argument("--p", type=int, default=2000)
    s.add_argument("--p1", type=int, default=10)
    s.add_argument("--beta", type=_beta, default=1.0, help="nonzero coefficient, or 'uniform'")
    s.add_argument("--noise-sd", type=float, default=2.0)
    s.add_argument("--seed", type=int, help="experiment seed (required)")
    s.add_argument("--replicates", type=int, default=100)
    s.add_argument("--thresholds", type=_floats, default=[0.001])
    s.add_argument("--methods", type=_words, default=["pfa", "storey", "efron"],
                   help=f"comma list from {','.join(METHODS)}")
    s.add_argument("--epsilon", type=float, default=DEFAULT_EPSILON)
    s.add_argument("--k", type=int, default=None)
    s.add_argument("--fraction", type=float, default=DEFAULT_FRACTION)
    s.add_argument("--jobs", type=int, default=1, help="replicates run in this many threads")
    return parser


def _apply_config(parser, args):
    if not args.config:
        return args
    sub = parser._subparsers._group_actions[0].choices[args.command]
    actions = {a.dest: a for a in sub._actions if a.dest not in ("help", "config")}
    for key, text in parse_config(args.config).items():
        if key not in actions:
            raise UsageError(f"unknown config key {key!r} for {args.command}")
        action = actions[key]
        if isinstance(action, argparse._StoreTrueAction):
            value = _flag(text)
        elif action.type is not None:
            try:
                value = action.type(text)
            except (TypeError, ValueError):
                raise UsageError(f"config key {key!r}: bad value {text!r}") from None
        else:
            value = text
        setattr(args, key, value)
    return args


def _require(args, *names):
    missing = [n for n in names if getattr(args, n) is None]
    if missing:
        flags = ", ".join("--" + n.replace("_", "-") for n in missing)
        raise UsageError(f"{args.command}: missing required option(s) {flags}")


def _out(args, name):
    return os.path.join(args.out_dir, name)


def _model(args):
    sigma = parse_matrix_csv(args.sigma_matrix, args.header)
    return build_factor_model(sigma, epsilon=args.epsilon, k=args.k)


def _load_z(args, model):
    z = parse_vector_csv(args.z, args.header)
    if z.shape[0] != model.p:
        raise DimensionMismatch(f"{z.shape[0]} z-statistics for a {model.p} x {model.p} matrix")
    return z


def cmd_screen(args):
    _require(args, "x", "y", "noise_sd")
    X = parse_matrix_csv(args.x, args.header)
    Y = parse_vector_csv(args.y, args.header)
    z, sigma = marginal_z(Design(X, Y, args.noise_sd))
    write_vector_csv(_out(args, "z.csv"), z.z)
    write_matrix_csv(_out(args, "sigma.csv"), sigma)


def cmd_estimate(args):
    _require(args, "z", "sigma_matrix", "t")
    model = _model(args)
    z = _load_z(args, model)
    fit = estimate_factors(z, model, args.fraction)
    report = estimate_fdp(z, model, fit, args.t)
    P = pvalues(z)
    eta_hat = model.eta(fit.w_hat)
    if args.p1 is not None:
        p0, mode = float(model.p - args.p1), "oracle"
    else:
        p0, mode = storey_p0(P), f"lambda={STOREY_LAMBDA}"
    a_hat = efron_A_hat(eta_hat, model.communalities, model.p)
    report.comparators.update({
        "storey_fdp": storey_fdp(P, args.t, p0),
        "storey_p0": p0,
        "efron_A_hat": a_hat,
        "efron_fdp": efron_fdp(args.t, report.R, model.p, a_hat),
        "efron_fdp_raw": efron_fdp(args.t, report.R, model.p, a_hat, clamp=False),
        "efron_variant": "Efron-via-PFA",
    })
    out = report.to_dict()
    out["storey_mode"] = mode
    write_json(_out(args, "fdp_report.json"), out)
    rows = (
        {"index": i, "z": z[i], "p": P[i], "eta_hat": eta_hat[i], "rejected": bool(P[i] <= args.t)}
        for i in range(model.p)
    )
    write_rows_csv(_out(args, "hypotheses.csv"), HYPOTHESIS_FIELDS, rows)


def cmd_adjust(args):
    _require(args, "z", "sigma_matrix")
    model = _model(args)
    z = _load_z(args, model)
    fit = estimate_factors(z, model, args.fraction)
    res = adjusted_pvalues(z, model, fit)
    P = pvalues(z)
    ranks = res.ranks()
    rows = (
        {"index": i, "z": z[i], "adjusted_z": res.adjusted_z[i], "p": P[i],
         "adjusted_p": res.adjusted_p[i], "rank": ranks[i]}
        for i in range(model.p)
    )
    write_rows_csv(_out(args, "adjusted.csv"), ADJUST_FIELDS, rows)


def cmd_control(args):
    _require(args, "sigma_matrix", "alpha", "p1", "seed")
    model = _model(args)
    mc = McConfig(args.n_draws, args.seed, args.tolerance)
    res = find_threshold(model, args.p1, args.alpha, mc)
    out = res.to_dict()
    out.update(alpha=args.alpha, p1=args.p1, k_used=model.k)
    write_json(_out(args, "control.json"), out)


def cmd_variance(args):
    _require(args, "sigma_matrix", "t")
    model = _model(args)
    subset = None
    if args.null_mask:
        subset = parse_vector_csv(args.null_mask, args.header) != 0
        if subset.shape[0] != model.p:
            raise DimensionMismatch("null mask length does not match the matrix")
    res = variance_of_v(model, subset, args.t, McConfig(args.n_draws, args.seed))
    out = res.to_dict()
    p0 = model.p if subset is None else int(subset.sum())
    out.update(
        k_used=model.k,
        subset="all" if subset is None else "null_mask",
        independence_variance=p0 * args.t * (1 - args.t),
    )
    write_json(_out(args, "variance.json"), out)


def cmd_simulate(args):
    _require(args, "seed")
    spec = DgpSpec(args.structure, args.n, args.p, args.p1, args.beta, args.noise_sd, args.seed)
    if args.jobs < 1:
        raise UsageError("--jobs must be at least 1")
    exp = Experiment(spec, epsilon=args.epsilon, k=args.k, fraction=args.fraction)
    reps = exp.run(args.thresholds, args.methods, args.replicates, args.jobs)
    write_rows_csv(_out(args, "replicates.csv"), SIM_ROW_FIELDS,
                   replicate_rows(reps, args.thresholds, args.methods))
    summary = summarize(reps, args.thresholds, args.methods)
    summary["spec"] = {
        "structure": spec.structure, "n": spec.n, "p": spec.p, "p1": spec.p1,
        "beta": spec.beta, "sigma": spec.sigma, "seed": spec.seed,
        "epsilon": args.epsilon, "k_override": args.k, "fraction": args.fraction,
    }
    summary["k_used"] = exp.model.k
    write_json(_out(args, "summary.json"), summary)


COMMANDS = {
    "screen": cmd_screen,
    "estimate": cmd_estimate,
    "adjust": cmd_adjust,
    "control": cmd_control,
    "variance": cmd_variance,
    "simulate": cmd_simulate,
}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("a subcommand is required; see pfa --help")
        args = _apply_config(parser, args)
        COMMANDS[args.command](args)
    except PfaError as exc:
        sys.stderr.write(json.dumps({"code": exc.code, "message": str(exc)}) + "\n")
        return 1 if isinstance(exc, UsageError) else 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
