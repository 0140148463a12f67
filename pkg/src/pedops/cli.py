"""Command-line front end for the L_n^(alpha) operators."""

import argparse
import sys

import numpy as np

from . import report
from .analysis import (
    LipschitzClass,
    calibrate_C,
    convergence_experiment,
    estimate_lipschitz_M,
    lipschitz_bound,
    local_bound,
    rate_bound,
    weighted_bound,
)
from .analysis.bounds import DEFAULT_CAP, check_growth, operator_domain
from .errors import (
    ClassMembershipError,
    EvaluationError,
    ExpressionSyntaxError,
    MomentUndefinedError,
    ParameterError,
    RangeError,
    RatioUndefinedError,
)
from .functions import function_spec
from .moments import fit_remark_constants, moment_report
from .operator import (
    SPECIAL_KINDS,
    AlphaRule,
    OperatorFamily,
    TruncationPolicy,
    apply,
    parse_alpha,
    special_case_family,
    weight_series,
)
from .verify import SUITES, run_suite

EXIT_OK, EXIT_VALIDATION, EXIT_VERIFICATION, EXIT_NUMERIC = 0, 1, 2, 3

COLUMNS = {
    "weights": ("k", "weight", "cumulative"),
    "apply": ("x", "Lf", "f", "abs_error", "tail_deficit"),
    "bounds": ("theorem_id", "x", "bound_value", "measured_error", "holds", "tail_deficit"),
    "converge": ("x", "n", "abs_error", "tail_deficit", "slope"),
}

EPILOG = """\
CSV column orders (frozen):
  weights   k,weight,cumulative
  apply     x,Lf,f,abs_error,tail_deficit
  bounds    theorem_id,x,bound_value,measured_error,holds,tail_deficit
            (x is the point, or lo:hi for interval reports)
  converge  x,n,abs_error,tail_deficit,slope
moments and verify always emit JSON.

Exit codes: 0 ok, 1 usage or validation error, 2 verification failure,
3 numeric failure.
"""


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def parse_grid(text):
    """'a:b:m' -> m evenly spaced points from a to b."""
    parts = text.split(":")
    if len(parts) != 3:
        raise ParameterError(f"grid must look like start:stop:count, got {text!r}")
    try:
        a, b, m = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise ParameterError(f"grid must look like start:stop:count, got {text!r}") from None
    if m < 1:
        raise ParameterError("grid count must be >= 1")
    if m == 1:
        return [a]
    return [float(v) for v in np.linspace(a, b, m)]


def parse_int_list(text):
    try:
        values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ParameterError(f"expected a comma-separated list of integers, got {text!r}") from None
    if not values:
        raise ParameterError("empty integer list")
    return values


# -- argument groups -------------------------------------------------------


def _add_params(sp):
    g = sp.add_argument_group("operator")
    g.add_argument("--case", choices=SPECIAL_KINDS, help="named special case")
    g.add_argument("--n", type=int, help="operator index n >= 1")
    g.add_argument("--p", type=int, help="Schurer shift p >= 0")
    g.add_argument("--alpha", help="decimal alpha or the rule 1/n")
    g.add_argument("--lambda", dest="lam", type=int, choices=(-1, 0), help="-1 ([0,1]) or 0 ([0,inf))")
    t = sp.add_argument_group("truncation")
    t.add_argument("--epsilon", type=float, default=1e-12, help="tail-mass tolerance (default 1e-12)")
    t.add_argument("--k-max", dest="k_max", type=int, default=1_000_000, help="series length cap")


def _add_output(sp, formats=("csv", "json")):
    sp.add_argument("--format", choices=formats, default=formats[0])
    sp.add_argument("--output", help="write the report here instead of stdout")


def build_family(args, need_n=True):
    """An OperatorFamily plus n (None when need_n is False), validated together."""
    problems = []
    alpha = None
    if args.alpha is not None:
        try:
            alpha = parse_alpha(args.alpha)
        except ParameterError as exc:
            problems.append(str(exc))
    if need_n and args.n is None:
        problems.append("--n is required")
    if args.case is not None:
        if args.lam is not None:
            problems.append("--lambda is fixed by --case")
        if not problems:
            try:
                family = special_case_family(args.case, p=args.p, alpha=alpha)
            except ParameterError as exc:
                problems.append(str(exc))
    else:
        if args.lam is None:
            problems.append("--lambda is required without --case")
        if not problems:
            family = OperatorFamily(lam=args.lam, p=args.p or 0,
                                    alpha=0.0 if alpha is None else alpha, label="custom")
    if problems:
        raise ParameterError("; ".join(problems))
    if need_n:
        family.at(args.n)  # validate
    return family


def _policy(args):
    return TruncationPolicy(tail_mass_epsilon=args.epsilon, k_max=args.k_max)


# -- subcommands -----------------------------------------------------------


def cmd_weights(args):
    params = build_family(args).at(args.n)
    params.check_x(args.x)
    series = weight_series(params, args.x, _policy(args))
    cumulative = np.cumsum(series.weights)
    rows = [(int(k), float(w), float(c)) for k, (w, c) in enumerate(zip(series.weights, cumulative))]
    if args.format == "csv":
        return report.to_csv(COLUMNS["weights"], rows), EXIT_OK
    return report.to_json({
        "params": params.as_dict(), "x": args.x, "K": series.K, "mass": series.mass,
        "tail_deficit": series.tail_deficit, "captured": series.captured,
        "rows": [dict(zip(COLUMNS["weights"], r)) for r in rows]}), EXIT_OK


def cmd_apply(args):
    params = build_family(args).at(args.n)
    f = function_spec(args.f)
    xs = parse_grid(args.x_grid)
    for x in xs:
        params.check_x(x)
    policy = _policy(args)
    rows = []
    for x in xs:
        res = apply(params, f, x, policy)
        fx = float(np.asarray(f(np.array([x])), dtype=float)[0])
        rows.append((x, res.value, fx, abs(res.value - fx), res.tail_deficit))
    if args.format == "csv":
        return report.to_csv(COLUMNS["apply"], rows), EXIT_OK
    return report.to_json({"params": params.as_dict(), "f": f.text,
                           "rows": [dict(zip(COLUMNS["apply"], r)) for r in rows]}), EXIT_OK


def cmd_moments(args):
    params = build_family(args).at(args.n)
    rep = moment_report(params, args.x, order=args.order, policy=_policy(args))
    return report.to_json(rep.as_dict()), EXIT_OK


def cmd_verify(args):
    ledger = run_suite(args.suite)
    return report.to_json(ledger.as_dict()), ledger.exit_code()


def _bound_row(rep):
    x = f"{rep.x[0]!r}:{rep.x[1]!r}" if isinstance(rep.x, tuple) else rep.x
    return (rep.theorem_id, x, rep.bound_value, rep.measured_error,
            "true" if rep.holds else "false", rep.tail_deficit)


CALIBRATION_POINTS = 128


def calibration_grid(lo, hi, m=CALIBRATION_POINTS):
    """Cell midpoints of an m-cell partition, kept apart from the report grid."""
    edges = np.linspace(lo, hi, m + 1)
    return [float(v) for v in (edges[1:] + edges[:-1]) / 2]


def cmd_bounds(args):
    family = build_family(args)
    params = family.at(args.n)
    f = function_spec(args.f)
    policy = _policy(args)
    cap = args.domain_cap
    lo, hi = operator_domain(params, cap)
    xs = parse_grid(args.x_grid) if args.x_grid else [float(v) for v in np.linspace(lo, hi, 9)]
    for x in xs:
        params.check_x(x)
    reports, extra = [], {}
    if args.theorem == "local":
        if args.C is None:
            cases = [(params, f, x) for x in calibration_grid(lo, hi)]
            C = calibrate_C(cases, domain_cap=cap, policy=policy)
        else:
            C = args.C
        extra["C"] = C
        reports = [local_bound(params, f, x, C, domain_cap=cap, policy=policy) for x in xs]
    elif args.theorem == "lipschitz":
        if args.lip_M is None:
            lip = estimate_lipschitz_M(f, args.beta, (lo, hi))
        else:
            lip = LipschitzClass(args.beta, args.lip_M)
        extra["M"], extra["beta"] = lip.M, lip.beta
        skipped = [x for x in xs if x <= 0]
        if skipped:
            extra["skipped_x"] = skipped
        reports = [lipschitz_bound(params, f, lip, x, policy) for x in xs if x > 0]
    elif args.theorem == "weighted":
        if args.b is None:
            raise ParameterError("--b is required for the weighted bound")
        M_f = args.M_f
        if M_f is None:
            M_f = check_growth(f, float("inf"), operator_domain(params, max(cap, args.b + 1)))
        reports = [weighted_bound(params, f, args.b, M_f, domain_cap=cap, policy=policy)]
    else:
        n_fit = parse_int_list(args.remark_n_list) if args.remark_n_list else [params.n * 2**i for i in range(4)]
        fit_hi = args.remark_domain if args.remark_domain is not None else (1.0 if params.lam == -1 else 5.0)
        remark = fit_remark_constants(family, (0.0, fit_hi), n_fit)
        extra["remark"] = remark.as_dict()
        reports = [rate_bound(params, f, remark, domain_cap=cap, policy=policy)]
    if args.format == "csv":
        return report.to_csv(COLUMNS["bounds"], [_bound_row(r) for r in reports]), _bounds_exit(reports)
    return report.to_json({"params": params.as_dict(), "f": f.text, "theorem": args.theorem,
                           "settings": extra, "reports": [r.as_dict() for r in reports]}), \
        _bounds_exit(reports)


def _bounds_exit(reports):
    return EXIT_OK if all(r.holds for r in reports) else EXIT_VERIFICATION


def cmd_converge(args):
    family = build_family(args, need_n=False)
    f = function_spec(args.f)
    n_list = parse_int_list(args.n_list)
    for n in n_list:
        family.at(n)
    xs = parse_grid(args.x_grid)
    for x in xs:
        family.at(n_list[0]).check_x(x)
    table = convergence_experiment(family, f, xs, n_list, _policy(args))
    if args.format == "csv":
        rows = [(r.x, n, e, t, r.slope) for r in table.rows for n, e, t in zip(table.n_list, r.errors, r.tails)]
        return report.to_csv(COLUMNS["converge"], rows), EXIT_OK
    alpha = family.alpha
    return report.to_json({
        "family": {"lambda": family.lam, "p": family.p,
                   "alpha": str(alpha) if isinstance(alpha, AlphaRule) else float(alpha),
                   "label": family.label},
        "f": f.text, "n_list": n_list,
        "rows": [{"x": r.x, "errors": r.errors, "tail_deficits": r.tails, "slope": r.slope,
                  "fitted_points": r.used, "excluded_n": r.excluded} for r in table.rows],
        "summary": table.summary()}), EXIT_OK


def build_parser():
    parser = _Parser(prog="pedops", description=__doc__, epilog=EPILOG,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, help_text):
        return sub.add_parser(name, help=help_text, description=help_text, epilog=EPILOG,
                              formatter_class=argparse.RawDescriptionHelpFormatter)

    sp = add("weights", "weights w_k(x) with their running sum")
    _add_params(sp)
    sp.add_argument("--x", type=float, required=True)
    _add_output(sp)
    sp.set_defaults(run=cmd_weights)

    sp = add("apply", "L_n f on a grid of x")
    _add_params(sp)
    sp.add_argument("--f", required=True, help="expression in x or a builtin name")
    sp.add_argument("--x-grid", dest="x_grid", required=True, help="start:stop:count")
    _add_output(sp)
    sp.set_defaults(run=cmd_apply)

    sp = add("moments", "closed-form and summed moments at one x")
    _add_params(sp)
    sp.add_argument("--x", type=float, required=True)
    sp.add_argument("--order", type=int, default=4, choices=(2, 3, 4))
    sp.add_argument("--output")
    sp.set_defaults(run=cmd_moments)

    sp = add("verify", "closed forms against direct summation")
    sp.add_argument("--suite", choices=SUITES, required=True)
    sp.add_argument("--output")
    sp.set_defaults(run=cmd_verify)

    sp = add("bounds", "error bounds against measured errors")
    sp.add_argument("--theorem", choices=("local", "lipschitz", "weighted", "rate"), required=True)
    _add_params(sp)
    sp.add_argument("--f", required=True)
    sp.add_argument("--beta", type=float, default=1.0, help="Lipschitz exponent in (0, 1]")
    sp.add_argument("--lip-M", dest="lip_M", type=float, help="Lipschitz constant (estimated if omitted)")
    sp.add_argument("--b", type=float, help="right end of [0, b] for the weighted bound")
    sp.add_argument("--M-f", dest="M_f", type=float, help="growth constant, |f| <= M_f (1+x^2)")
    sp.add_argument("--C", type=float, help="constant of the second modulus (calibrated if omitted)")
    sp.add_argument("--x-grid", dest="x_grid", help="start:stop:count")
    sp.add_argument("--domain-cap", dest="domain_cap", type=float, default=DEFAULT_CAP)
    sp.add_argument("--remark-n-list", dest="remark_n_list", help="n values for fitting A1, A2")
    sp.add_argument("--remark-domain", dest="remark_domain", type=float, help="fit A1, A2 on [0, this]")
    _add_output(sp)
    sp.set_defaults(run=cmd_bounds)

    sp = add("converge", "log-log error slopes over a geometric n list")
    _add_params(sp)
    sp.add_argument("--f", required=True)
    sp.add_argument("--n-list", dest="n_list", default="5,10,20,40,80")
    sp.add_argument("--x-grid", dest="x_grid", required=True)
    _add_output(sp)
    sp.set_defaults(run=cmd_converge)
    return parser


def run(argv):
    """(exit code, text to emit) for one invocation."""
    try:
        args = build_parser().parse_args(argv)
        text, code = args.run(args)
    except (UsageError, ParameterError, RangeError, ExpressionSyntaxError, ClassMembershipError) as exc:
        return EXIT_VALIDATION, None, f"error: {exc}"
    except (EvaluationError, MomentUndefinedError, RatioUndefinedError, ArithmeticError, FloatingPointError) as exc:
        return EXIT_NUMERIC, None, f"numeric error: {exc}"
    return code, (text, getattr(args, "output", None)), None


def main(argv=None):
    argv = sys.argv[1:] if argv is None else argv
    if any(a in ("-h", "--help") for a in argv):
        try:
            build_parser().parse_args(argv)
        except SystemExit as exc:
            return exc.code
    code, result, message = run(argv)
    if message:
        print(message, file=sys.stderr)
        return code
    text, path = result
    if path:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
