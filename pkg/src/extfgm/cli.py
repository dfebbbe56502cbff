"""Command-line front end.

Subcommands: check, simulate, estimate, ci, test, gof, select, study.
Exit codes: 0 success, 1 statistical rejection, 2 invalid parameters,
3 usage or I/O error.
"""
import argparse
from dataclasses import dataclass, field
import logging
import os
import sys


from . import io
from .errors import ExtFGMError, InvalidParametersError, NonPositiveDensityError
from .estimation import (
    confidence_intervals,
    estimate_params,
    test_lambda2_zero,
)
from .experiments import (
    STUDIES,
    Chi2Calibration,
    CovarianceCheck,
    StudySpec,
    run_study,
)
from .marginals import pit, pit_ranks
from .model import CopulaModel
from .params import check_validity, project_to_valid, simulation_params
from .sampling import rosenblatt, sample
from .selection import deviation_curve, gof, reduce_model, score

EXIT_OK = 0
EXIT_REJECT = 1
EXIT_INVALID = 2
EXIT_USAGE = 3

logger = logging.getLogger("extfgm")


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    """Options merged from the config file and command-line flags (flags win)."""

    d: int = None
    params_path: str = None
    params: object = None
    marginals: list = None
    input: str = None
    out: str = "."
    seed: int = 0
    alpha: float = 0.05
    threads: int = 1
    pit: str = "none"
    variance: str = "surrogate"
    chi2_mode: str = "null-identity"
    projection: bool = False
    allow_invalid: bool = False
    strict: bool = False
    rows: str = None
    n: int = 1000
    study: dict = field(default_factory=dict)


def _common_parser():
    p = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    g = p.add_argument_group("global options")
    g.add_argument("--config", help="key = value config file (dotted keys)")
    g.add_argument("--seed", type=int, help="unsigned 64-bit seed")
    g.add_argument("--out", help="output directory")
    g.add_argument("--alpha", type=float, help="significance level")
    g.add_argument("--threads", type=int, help="worker processes (speed only)")
    g.add_argument("--params", help="parameter file (.csv or config)")
    g.add_argument("--allow-invalid", action="store_true",
                   help="accept coefficients that fail the validity constraint")
    return p


def _data_options(p):
    p.add_argument("--input", help="data CSV with header row")
    p.add_argument("--pit", choices=("none", "gent", "ranks"),
                   help="marginal transform applied to raw data")
    p.add_argument("--rows", help="1-based inclusive row range, e.g. 1:1100")
    p.add_argument("--variance", choices=("surrogate", "plugin"),
                   help="variance used for standard errors and intervals")


def build_parser():
    common = _common_parser()
    parser = argparse.ArgumentParser(
        prog="extfgm", description="Extended d-variate FGM copula toolkit", parents=[common]
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("check", parents=[common], help="check the validity constraint")

    p = sub.add_parser("simulate", parents=[common], help="sample from a model")
    p.add_argument("--n", type=int, help="number of draws")

    p = sub.add_parser("estimate", parents=[common], help="moment estimates")
    _data_options(p)

    p = sub.add_parser("ci", parents=[common], help="confidence intervals")
    _data_options(p)

    p = sub.add_parser("test", parents=[common], help="chi-square test of the second-order block")
    _data_options(p)
    p.add_argument("--chi2-mode", choices=("null-identity", "plug-in"))
    p.add_argument("--strict", action="store_true", default=None,
                   help="exit 1 when the test rejects")

    p = sub.add_parser("gof", parents=[common], help="Rosenblatt/KS goodness of fit")
    _data_options(p)
    p.add_argument("--project", action="store_true", default=None,
                   help="shrink invalid coefficients into the validity region")

    p = sub.add_parser("select", parents=[common], help="reduce and compare models")
    _data_options(p)
    p.add_argument("--project", action="store_true", default=None)
    p.add_argument("--refit", action="store_true",
                   help="re-estimate surviving coefficients after zeroing")

    p = sub.add_parser("study", parents=[common], help="Monte Carlo studies")
    p.add_argument("--which", choices=STUDIES)
    p.add_argument("--sizes", help="comma-separated sample sizes")
    p.add_argument("--replications", type=int)
    p.add_argument("--preset", choices=("simulation",),
                   help="use the built-in d=4 simulation coefficients")
    p.add_argument("--format", choices=("csv", "md"), default="csv")
    p.add_argument("--checkpoint", help="checkpoint file prefix for resumable runs")
    p.add_argument("--power", action="store_true",
                   help="allow a nonzero second-order block in chi2-calibration")
    p.add_argument("--chi2-mode", choices=("null-identity", "plug-in"))
    return parser


def resolve_config(args):
    cfg = {}
    config = getattr(args, "config", None)
    if config:
        if not os.path.exists(config):
            raise UsageError(f"config file not found: {config}")
        cfg = io.load_config(config)
    rc = RunConfig()
    simple = {
        "seed": int, "alpha": float, "threads": int, "out": str, "input": str,
        "pit": str, "variance": str, "chi2_mode": str, "projection": bool,
        "allow_invalid": bool, "strict": bool, "rows": str, "n": int, "d": int,
    }
    for key, conv in simple.items():
        if key in cfg:
            setattr(rc, key, conv(cfg[key]))
    if "params" in cfg:
        rc.params_path = str(cfg["params"])
    rc.study = dict(cfg.get("study", {}))

    overrides = {
        "seed": getattr(args, "seed", None), "alpha": getattr(args, "alpha", None),
        "threads": getattr(args, "threads", None), "out": getattr(args, "out", None),
        "allow_invalid": getattr(args, "allow_invalid", None),
        "input": getattr(args, "input", None), "pit": getattr(args, "pit", None),
        "variance": getattr(args, "variance", None),
        "chi2_mode": getattr(args, "chi2_mode", None),
        "strict": getattr(args, "strict", None), "rows": getattr(args, "rows", None),
        "projection": getattr(args, "project", None), "n": getattr(args, "n", None),
    }
    for key, val in overrides.items():
        if val is not None:
            setattr(rc, key, val)
    if getattr(args, "params", None):
        rc.params_path = args.params

    if rc.params_path:
        if not os.path.exists(rc.params_path):
            raise UsageError(f"parameter file not found: {rc.params_path}")
        rc.params = io.read_params(rc.params_path, rc.d)
    elif "lambda1" in cfg or "lambda2" in cfg:
        rc.params = io.params_from_mapping(cfg, rc.d)
    if rc.params is not None:
        if rc.d is not None and rc.params.d != rc.d:
            raise UsageError(f"config d={rc.d} but parameters have d={rc.params.d}")
        rc.d = rc.params.d
    if rc.input and not os.path.exists(rc.input):
        raise UsageError(f"input file not found: {rc.input}")
    if rc.seed < 0 or rc.seed >= 2**64:
        raise UsageError("seed must be an unsigned 64-bit integer")
    if rc.threads < 1:
        raise UsageError("threads must be positive")
    rc.marginals = io.marginals_from_mapping(cfg, rc.d or 4) if rc.pit == "gent" else None
    return rc


def _write(rc, name, text):
    os.makedirs(rc.out, exist_ok=True)
    path = os.path.join(rc.out, name)
    with open(path, "w") as fh:
        fh.write(text)
    return path


def _load_data(rc):
    if not rc.input:
        raise UsageError("this command needs --input")
    _, data = io.read_data_csv(rc.input)
    if rc.rows:
        try:
            first, last = (int(x) for x in rc.rows.split(":"))
        except ValueError as exc:
            raise UsageError(f"bad --rows {rc.rows!r}; expected START:END") from exc
        if not 1 <= first <= last <= data.shape[0]:
            raise UsageError(f"--rows {rc.rows} outside 1:{data.shape[0]}")
        data = data[first - 1 : last]
    if rc.d is not None and data.shape[1] != rc.d:
        raise UsageError(f"data has {data.shape[1]} columns but d={rc.d}")
    if rc.pit == "gent":
        if len(rc.marginals) != data.shape[1]:
            raise UsageError("marginal parameters do not match the data width")
        data = pit(data, rc.marginals)
    elif rc.pit == "ranks":
        data = pit_ranks(data)
    return data


def _require_params(rc):
    if rc.params is None:
        raise UsageError("this command needs --params or lambda entries in the config")
    return rc.params


def _model(rc, params):
    res = check_validity(params)
    if res.valid:
        return CopulaModel(params)
    if rc.projection:
        return CopulaModel(project_to_valid(params))
    if rc.allow_invalid:
        return CopulaModel.unchecked(params)
    raise InvalidParametersError(
        f"parameters exceed the validity constraint by {res.excess:.4g} "
        "(use --project or --allow-invalid)"
    )


def _label(k, mask, d):
    return io.param_label(k, mask, d)


def cmd_check(rc):
    p = _require_params(rc)
    res = check_validity(p)
    if res.valid:
        print(f"valid: constraint sum {res.total:.6g}, margin {res.margin:.6g}")
        return EXIT_OK
    print(f"invalid: constraint sum {res.total:.6g}, excess {res.excess:.6g}")
    return EXIT_INVALID


def cmd_simulate(rc):
    m = _model(rc, _require_params(rc))
    batch = sample(m, rc.n, rc.seed)
    path = _write(rc, "samples.csv", io.sample_to_csv(batch))
    print(f"wrote {batch.n} draws to {path}")
    return EXIT_OK


def cmd_estimate(rc):
    data = _load_data(rc)
    res = estimate_params(data, variance=rc.variance)
    _write(rc, "estimates.csv", io.estimates_to_csv(res))
    _write(rc, "covariance.csv", io.covariance_to_csv(res.sigma_hat))
    rows = [[_label(k, m, res.d), est, se, pv] for k, m, est, se, pv in res.rows()]
    print(f"n = {res.n}")
    print(io.table_md(["parameter", "estimate", "se", "p-value"], rows, digits=3), end="")
    return EXIT_OK


def cmd_ci(rc):
    data = _load_data(rc)
    res = estimate_params(data, variance=rc.variance)
    lo, hi = confidence_intervals(res, rc.alpha)
    rows = [
        [k, mask, est, a, b]
        for (k, mask, est, _, _), a, b in zip(res.rows(), lo, hi)
    ]
    _write(rc, "ci.csv", io.table_csv(["k", "mask", "lambda", "lower", "upper"], rows))
    human = [[_label(k, m, res.d), e, a, b] for k, m, e, a, b in rows]
    level = 100 * (1 - rc.alpha)
    print(io.table_md(["parameter", "estimate", f"{level:g}% lower", "upper"], human, 3), end="")
    return EXIT_OK


def cmd_test(rc):
    data = _load_data(rc)
    res = estimate_params(data, variance=rc.variance)
    out = test_lambda2_zero(res, rc.chi2_mode)
    _write(rc, "chi2.csv", io.table_csv(
        ["statistic", "df", "pvalue", "mode"],
        [[out.statistic, out.df, out.pvalue, out.mode]],
    ))
    verdict = "reject" if out.rejects(rc.alpha) else "do not reject"
    print(f"T = {out.statistic:.4g}, df = {out.df}, p = {out.pvalue:.4g} ({out.mode}): "
          f"{verdict} H0 at alpha = {rc.alpha:g}")
    if rc.strict and out.rejects(rc.alpha):
        return EXIT_REJECT
    return EXIT_OK


def _fitted_reduced(rc, data):
    return reduce_model(estimate_params(data, variance=rc.variance), rc.alpha)


def cmd_gof(rc):
    data = _load_data(rc)
    params = rc.params if rc.params is not None else _fitted_reduced(rc, data)
    m = _model(rc, params)
    report = gof(m, data, level=rc.alpha)
    r = rosenblatt(m, data)
    header = []
    for j in range(1, m.d + 1):
        header += [f"u{j}", f"dev{j}"]
    _write(rc, "deviation.csv", io.table_csv(header, deviation_curve(r).tolist()))
    rows = [[f"R{j + 1}", s, p] for j, (s, p) in enumerate(zip(report.statistics, report.pvalues))]
    _write(rc, "gof.csv", io.table_csv(["component", "ks_statistic", "pvalue"], rows))
    print(io.table_md(["component", "KS statistic", "p-value"], rows, 3), end="")
    print("pass" if report.passed else f"reject at level {rc.alpha:g}")
    return EXIT_OK if report.passed else EXIT_REJECT


def cmd_select(rc, refit=False):
    data = _load_data(rc)
    res = estimate_params(data, variance=rc.variance)
    candidates = {
        "classical": reduce_model(res, mode="classical"),
        "extended-full": res.params_hat,
        "extended-reduced": reduce_model(
            res, rc.alpha, refit_data=data if refit else None
        ),
    }
    _write(rc, "reduced.csv", io.params_to_csv(candidates["extended-reduced"]))
    rows = []
    for name, p in candidates.items():
        if rc.projection:
            p = project_to_valid(p)
        try:
            s = score(p, data)
            rows.append([name, s.loglik, s.p_active, s.aic, s.bic])
        except NonPositiveDensityError as exc:
            logger.warning("%s: %s", name, exc)
            rows.append([name, float("nan"), p.n_active(), float("nan"), float("nan")])
    _write(rc, "scores.csv", io.table_csv(["model", "loglik", "p_active", "aic", "bic"], rows))
    print(f"n = {data.shape[0]}")
    print(io.table_md(["model", "loglik", "params", "AIC", "BIC"], rows, 5), end="")
    return EXIT_OK


def _study_spec(rc, args):
    st = rc.study
    if getattr(args, "preset", None) == "simulation":
        params = simulation_params()
    else:
        params = _require_params(rc)
    which = args.which or st.get("which", "consistency")
    if args.sizes:
        sizes = tuple(int(s) for s in args.sizes.split(","))
    else:
        sizes = tuple(st.get("sizes", (100, 1000, 10000)))
    reps = args.replications or int(st.get("replications", 1000 if which != "consistency" else 1))
    allow = rc.allow_invalid or bool(st.get("allow_invalid", False))
    if which == "chi2-calibration" and not args.power:
        params = params.with_order_zeroed(2)
    if not check_validity(params).valid and not allow:
        raise InvalidParametersError(
            "study model fails the validity constraint (use --allow-invalid)"
        )
    return StudySpec(
        params, sizes, reps, rc.alpha, rc.seed, which, allow,
        rc.variance, rc.chi2_mode, bool(args.power),
    )


def cmd_study(rc, args):
    spec = _study_spec(rc, args)
    result = run_study(spec, workers=rc.threads, checkpoint=args.checkpoint)
    if isinstance(result, CovarianceCheck):
        header = [f"{k}:{m}" for k, m in io.canonical_order(spec.model.d)]
        text = io.table_csv(header, result.monte_carlo.tolist())
        _write(rc, "covariance_mc.csv", text)
        _write(rc, "covariance_plugin.csv", io.table_csv(header, result.plug_in.tolist()))
        header, rows = ["n", "replications", "max_abs_deviation"], [
            [result.n, result.replications, result.max_abs_deviation]
        ]
    elif isinstance(result, Chi2Calibration):
        header = ["n", "replications", "alpha", "df", "rejection_rate"]
        rows = [
            [n, spec.replications, spec.alpha, result.df, float(r)]
            for n, r in zip(result.sizes, result.rejection_rates)
        ]
    else:
        header, rows = io.study_table_rows(result)
    name = f"study_{spec.which}"
    if args.format == "md":
        text = io.table_md(header, rows, 3)
        _write(rc, name + ".md", text)
    else:
        text = io.table_csv(header, rows)
        _write(rc, name + ".csv", text)
    print(text, end="")
    return EXIT_OK


def main(argv=None):
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        rc = resolve_config(args)
        cmd = args.command
        if cmd == "study":
            return cmd_study(rc, args)
        if cmd == "select":
            return cmd_select(rc, refit=args.refit)
        return {
            "check": cmd_check,
            "simulate": cmd_simulate,
            "estimate": cmd_estimate,
            "ci": cmd_ci,
            "test": cmd_test,
            "gof": cmd_gof,
        }[cmd](rc)
    except InvalidParametersError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (UsageError, io.FormatError, OSError, ExtFGMError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
