"""Command-line interface: ``binseq <command> [options]``.

Results are written as JSON (``schema_version`` 1) to standard output or
``--out``; diagnostics go to standard error. Exit status is 0 on success,
1 for invalid input or usage, 2 for numerical failures.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import re
import sys
import warnings
from pathlib import Path

import numpy as np
from scipy import stats

from . import __version__
from .classic import blp_stat, glarma_sweep, lrt_stat, sup_lrt, sup_wald, wald_stat
from .dataset import RESIDUAL_TYPES, BinomialSeries, ModelSpec, load_csv, save_csv
from .errors import NumericError, ValidationError
from .glarma import fit_glarma
from .glm import fit_glm
from .montecarlo import (
    DESIGNS,
    PROBS,
    TABLES,
    BarmaScore,
    Blp,
    ScoreAt,
    SupLikelihood,
    SupScore,
    design_from_data,
    null_quantiles,
    reproduce_table,
    simulate_null,
)
from .rng import default_seed
from .score_barma import barma_stat
from .score_glarma import NuisanceGrid, score_stat, sup_score

SCHEMA_VERSION = 1
EXIT_OK, EXIT_INVALID, EXIT_NUMERIC = 0, 1, 2


class UsageError(ValidationError):
    pass


class _Parser(argparse.ArgumentParser):
    """Reports usage errors as exit status 1 instead of argparse's 2, and
    accepts values such as ``-0.5:0.5:0.1`` or ``-0.3,0.2`` as arguments."""

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self._negative_number_matcher = re.compile(r"^-(\d+\.?\d*|\.\d+)([:,][-+.\d:,eE]*)?$")

    def error(self, message):
        raise UsageError(f"{message}\n{self.format_usage().rstrip()}")


# ---------------------------------------------------------------------------
# argument helpers


def _lags(text: str) -> tuple[int, ...]:
    text = text.strip()
    if not text:
        return ()
    try:
        return tuple(int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"lags must be comma-separated integers, got {text!r}") from None


def _omega(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"omega must be comma-separated numbers, got {text!r}") from None


def _grid(text: str) -> NuisanceGrid:
    try:
        return NuisanceGrid.parse(text)
    except ValidationError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _nonneg_int(text: str) -> int:
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {text}")
    return v


def _add_input(p: argparse.ArgumentParser, required: bool = True) -> None:
    p.add_argument("data", nargs=None if required else "?", help="CSV file with header y,m,x1..xr")
    p.add_argument("--intercept", action="store_true", help="prepend a constant regressor column")


def _add_model(p: argparse.ArgumentParser, families=("glarma", "barma")) -> None:
    g = p.add_argument_group("model")
    g.add_argument("--family", choices=families, default="glarma", help="alternative model (default: glarma)")
    g.add_argument("--phi-lags", type=_lags, default=(), metavar="J", help="AR lags, e.g. 1,2 (default: none)")
    g.add_argument("--theta-lags", type=_lags, default=(), metavar="J", help="MA lags (default: none)")
    g.add_argument("--residuals", choices=tuple(RESIDUAL_TYPES), default="pearson",
                   help="GLARMA residual scaling (default: pearson)")
    om = g.add_mutually_exclusive_group()
    om.add_argument("--omega", type=_omega, default=None, metavar="W",
                    help="fixed nuisance value(s) on the shared lags (default: 0)")
    om.add_argument("--omega-grid", type=_grid, default=None, metavar="LO:HI:STEP",
                    help="nuisance grid for supremum tests (lrt and wald --sup default: -0.9:0.9:0.1)")


def _add_output(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", type=Path, default=None, help="write the result here instead of standard output")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="binseq", description="Tests for serial dependence in binomial time series.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--config", type=Path, default=None,
                        help="JSON file of option defaults, keyed by option name (e.g. phi_lags)")
    sub = parser.add_subparsers(dest="command", metavar="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("fit-glm", help="fit the independence (logistic) model")
    _add_input(p)
    _add_output(p)

    p = sub.add_parser("fit-glarma", help="fit a GLARMA model with the nuisance held fixed")
    _add_input(p)
    _add_model(p, families=("glarma",))
    _add_output(p)

    p = sub.add_parser("score-test", help="score test against GLARMA or BARMA dependence")
    _add_input(p)
    _add_model(p)
    p.add_argument("--profile-csv", type=Path, default=None, help="write the per-omega profile of a supremum test")
    _add_output(p)

    p = sub.add_parser("blp", help="Box-Pierce-Ljung test on Pearson residuals")
    _add_input(p)
    p.add_argument("--max-lag", type=_positive_int, required=True, help="largest lag L (must be below n/2)")
    _add_output(p)

    for name, desc in (("lrt", "likelihood-ratio test"), ("wald", "Wald test")):
        p = sub.add_parser(name, help=f"{desc} against GLARMA dependence")
        _add_input(p)
        _add_model(p, families=("glarma",))
        p.add_argument("--sup", action="store_true", help="supremum over --omega-grid")
        if name == "wald":
            p.add_argument("--covariance", choices=("observed", "null"), default="observed",
                           help="covariance of psi-hat (default: observed)")
        _add_output(p)

    p = sub.add_parser("simulate", help="simulate null series or null quantiles")
    _add_input(p, required=False)
    p.add_argument("--design", choices=tuple(DESIGNS), default=None, help="named null design (default: table1)")
    p.add_argument("--index", type=_nonneg_int, default=0, help="replicate index for a single series (default: 0)")
    p.add_argument("--reps", type=_nonneg_int, default=0,
                   help="number of replicates; with 0 write one series as CSV (default: 0)")
    p.add_argument("--statistic", choices=("score", "sup-score", "blp", "barma", "sup-lr", "sup-wald"),
                   default="score", help="statistic for null quantiles (default: score)")
    _add_model(p)
    p.add_argument("--max-lag", type=_positive_int, default=None, help="L for --statistic blp")
    p.add_argument("--seed", type=int, default=None, help="master seed (default: BINSEQ_SEED or 20200101)")
    p.add_argument("--threads", type=_positive_int, default=None, help="worker processes (default: all cores)")
    _add_output(p)

    p = sub.add_parser("reproduce", help="reproduce a published simulation table")
    p.add_argument("--table", choices=TABLES, required=True, help="table to reproduce")
    p.add_argument("--reps", type=_nonneg_int, default=None, help="replications; 0 gives theory rows only")
    p.add_argument("--seed", type=int, default=None, help="master seed (default: BINSEQ_SEED or 20200101)")
    p.add_argument("--threads", type=_positive_int, default=None, help="worker processes (default: all cores)")
    p.add_argument("--data", type=Path, default=None, help="CSV data for T5 (default: synthetic stand-in)")
    p.add_argument("--intercept", action="store_true", help="prepend a constant column to --data")
    _add_output(p)
    return parser


# ---------------------------------------------------------------------------
# config and validation


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> argparse.Namespace:
    args = parser.parse_args(argv)
    if args.config is None:
        return args
    try:
        config = json.loads(args.config.read_text())
    except OSError as exc:
        raise ValidationError(f"cannot read config: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ValidationError(f"config is not valid JSON: {exc}") from None
    if not isinstance(config, dict):
        raise ValidationError("config must be a JSON object")
    sub = _subparser(parser, args.command)
    known = {a.dest: a for a in sub._actions}
    defaults = {}
    for key, value in config.items():
        dest = key.replace("-", "_")
        if dest not in known or dest in ("help", "data"):
            raise ValidationError(f"unknown config key {key!r} for {args.command}")
        action = known[dest]
        if isinstance(value, str) and action.type is not None:
            value = action.type(value)
        elif isinstance(value, list) and dest.endswith("lags"):
            value = tuple(int(v) for v in value)
        defaults[dest] = value
    sub.set_defaults(**defaults)
    return parser.parse_args(argv)


def _subparser(parser: argparse.ArgumentParser, name: str) -> argparse.ArgumentParser:
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            return action.choices[name]
    raise KeyError(name)


def _spec(args) -> ModelSpec:
    if args.family == "barma":
        return ModelSpec.barma(args.phi_lags, args.theta_lags)
    return ModelSpec.glarma(args.phi_lags, args.theta_lags, args.residuals)


def _omega_fixed(args, spec: ModelSpec):
    K = len(spec.overlap)
    if args.omega is None:
        return np.zeros(K)
    om = np.array(args.omega, dtype=float)
    if K == 0:
        if np.any(om != 0.0):
            raise ValidationError("--omega given but the AR and MA lags do not overlap")
        return np.zeros(0)
    if om.size == 1:
        om = np.repeat(om, K)
    if om.size != K:
        raise ValidationError(f"--omega needs {K} values for shared lags {spec.overlap}")
    return om


def _threads(args) -> int:
    return args.threads or os.cpu_count() or 1


def _seed(args) -> int:
    return args.seed if args.seed is not None else default_seed()


def _load(args) -> BinomialSeries:
    return load_csv(args.data, intercept=args.intercept)


def _floats(a) -> list[float]:
    return [float(v) for v in np.atleast_1d(a)]


# ---------------------------------------------------------------------------
# commands


def cmd_fit_glm(args) -> dict:
    series = _load(args)
    fit = fit_glm(series)
    return {
        "beta": _floats(fit.beta_hat),
        "se": _floats(fit.se),
        "loglik": float(fit.loglik),
        "iterations": fit.iterations,
        "converged": fit.converged,
        "n": series.n,
    }


def cmd_fit_glarma(args) -> dict:
    series = _load(args)
    spec = _spec(args)
    if args.omega_grid is not None:
        raise ValidationError("fit-glarma takes --omega, not --omega-grid")
    fit = fit_glarma(series, spec, _omega_fixed(args, spec))
    se = fit.se
    r = series.r
    return {
        "beta": _floats(fit.params.beta),
        "psi": _floats(fit.params.psi),
        "omega": _floats(fit.params.omega),
        "se_beta": _floats(se[:r]),
        "se_psi": _floats(se[r:]),
        "psi_lags": list(spec.union),
        "loglik": float(fit.loglik),
        "iterations": fit.iterations,
    }


def _write_profile(path: Path, result) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        K = len(result.per_omega[0][0])
        w.writerow([f"omega{k + 1}" for k in range(K)] + ["statistic"])
        for om, q in result.per_omega:
            w.writerow([repr(float(v)) for v in om] + ["" if q is None else repr(float(q))])


def cmd_score_test(args) -> dict:
    series = _load(args)
    spec = _spec(args)
    spec.require_lags()
    glmfit = fit_glm(series)
    if spec.family == "barma":
        if args.omega is not None or args.omega_grid is not None:
            raise ValidationError("BARMA score test has no nuisance parameter")
        res = barma_stat(series, glmfit, spec)
    elif args.omega_grid is not None:
        res = sup_score(series, glmfit, spec, args.omega_grid)
    else:
        res = score_stat(series, glmfit, spec, _omega_fixed(args, spec))
    if args.profile_csv is not None:
        if res.per_omega is None:
            raise ValidationError("--profile-csv needs --omega-grid")
        _write_profile(args.profile_csv, res)
    return res.to_dict()


def cmd_blp(args) -> dict:
    series = _load(args)
    return blp_stat(series, fit_glm(series), args.max_lag).to_dict()


def _likelihood_test(args, kind: str) -> dict:
    series = _load(args)
    spec = _spec(args)
    spec.require_lags()
    glmfit = fit_glm(series)
    if args.sup:
        if args.omega is not None:
            raise ValidationError("--sup takes --omega-grid, not --omega")
        if not spec.overlap:
            raise ValidationError("--sup needs AR and MA lags that overlap")
        grid = args.omega_grid or NuisanceGrid()
        sweep = glarma_sweep(series, spec, grid, glmfit)
        if kind == "lrt":
            return sup_lrt(series, spec, grid, glmfit, sweep).to_dict()
        return sup_wald(series, spec, grid, glmfit, sweep, args.covariance).to_dict()
    if args.omega_grid is not None:
        raise ValidationError("--omega-grid needs --sup")
    om = _omega_fixed(args, spec)
    if kind == "lrt":
        return lrt_stat(series, spec, om, glmfit).to_dict()
    return wald_stat(series, spec, om, glmfit, covariance=args.covariance).to_dict()


def cmd_lrt(args) -> dict:
    return _likelihood_test(args, "lrt")


def cmd_wald(args) -> dict:
    return _likelihood_test(args, "wald")


def _simulation_design(args):
    if args.data is not None and args.design is not None:
        raise ValidationError("give either a data file or --design, not both")
    kw = {"seed": _seed(args), "replications": max(args.reps, 1)}
    if args.data is not None:
        return design_from_data(_load(args), **kw)
    return DESIGNS[args.design or "table1"](**kw)


def _statistic(args):
    """Evaluator and chi-square reference (or None) for ``simulate --reps``."""
    spec = _spec(args)
    st = args.statistic
    if st == "blp":
        if args.max_lag is None:
            raise ValidationError("--statistic blp needs --max-lag")
        return Blp(args.max_lag), stats.chi2(args.max_lag).cdf
    spec.require_lags()
    if st == "barma":
        if spec.family != "barma":
            raise ValidationError("--statistic barma needs --family barma")
        return BarmaScore(spec), stats.chi2(spec.L).cdf
    if spec.family != "glarma":
        raise ValidationError(f"--statistic {st} needs --family glarma")
    if st == "score":
        om = _omega_fixed(args, spec)
        w = float(om[0]) if om.size else 0.0
        if om.size > 1 and np.any(om != w):
            raise ValidationError("simulate supports one common omega value")
        return ScoreAt(spec, (w,)), stats.chi2(spec.L).cdf
    if not spec.overlap:
        raise ValidationError(f"--statistic {st} needs AR and MA lags that overlap")
    grid = args.omega_grid or NuisanceGrid()
    if st == "sup-score":
        return SupScore(spec, (("sup_ST", grid),)), None
    ev = SupLikelihood(spec, grid)
    return _Pick(ev, 0 if st == "sup-lr" else 1), None


class _Pick:
    """One column of a multi-statistic evaluator."""

    def __init__(self, ev, k):
        self.ev, self.k = ev, k
        self.tags = (ev.tags[k],)

    def __call__(self, series, glmfit):
        return self.ev(series, glmfit)[self.k : self.k + 1]


def cmd_simulate(args):
    design = _simulation_design(args)
    if args.reps == 0:
        series = simulate_null(design, args.index)
        buf = io.StringIO()
        save_csv(series, buf)
        return buf.getvalue()
    ev, ref = _statistic(args)
    nq = null_quantiles(design, ev, PROBS, ref, workers=_threads(args))
    return {"design": design.name, "seed": int(design.seed), **nq.to_dict()}


def cmd_reproduce(args) -> dict:
    data = load_csv(args.data, intercept=args.intercept) if args.data is not None else None
    if data is not None and args.table != "T5":
        raise ValidationError("--data applies to T5 only")
    return reproduce_table(args.table, args.reps, _seed(args), _threads(args), data)


COMMANDS = {
    "fit-glm": cmd_fit_glm,
    "fit-glarma": cmd_fit_glarma,
    "score-test": cmd_score_test,
    "blp": cmd_blp,
    "lrt": cmd_lrt,
    "wald": cmd_wald,
    "simulate": cmd_simulate,
    "reproduce": cmd_reproduce,
}


def _emit(payload, args) -> None:
    if isinstance(payload, str):
        text = payload
    else:
        body = payload if "schema_version" in payload else {"schema_version": SCHEMA_VERSION, "command": args.command,
                                                            "result": payload}
        text = json.dumps(body, indent=2, allow_nan=False) + "\n"
    if args.out is not None:
        args.out.write_text(text)
    else:
        sys.stdout.write(text)


def _showwarning(message, category, filename, lineno, file=None, line=None):
    print(f"warning: {message}", file=sys.stderr)


def run(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    old = warnings.showwarning
    warnings.showwarning = _showwarning
    try:
        args = _apply_config(parser, argv)
        _emit(COMMANDS[args.command](args), args)
        return EXIT_OK
    except UsageError as exc:
        print(f"binseq: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (ValidationError, argparse.ArgumentTypeError, OSError) as exc:
        print(f"binseq: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NumericError as exc:
        print(f"binseq: numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    finally:
        warnings.showwarning = old


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
