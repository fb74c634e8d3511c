"""Command-line interface.

Exit codes: 0 success, 1 a worked-example check failed, 2 usage error
(bad flags or parameters the model rejects).
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import math
import sys
from typing import Sequence

from . import figures
from .checks import EXPECTED, run_checks
from .determinacy import (
    benchmark_loading,
    compensation,
    determinacy_closed,
    determinacy_matrix,
    determinacy_with_group,
)
from .errors import ModelError
from .model import GroupSpec, ModelSpec, build_sigma, corrected_loading
from .simulation import EliminationMode, SimulationConfig, simulate

EXIT_OK, EXIT_CHECK_FAILED, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


# -- rendering -------------------------------------------------------------------


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return "nan" if math.isnan(value) else f"{value:.6g}"
    if isinstance(value, (list, tuple)):
        return ";".join(_fmt(v) for v in value)
    if value is None:
        return ""
    return str(value)


def _jsonable(value):
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


def render_csv(columns: Sequence[str], rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def render_json(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2) + "\n"


def render_records(records: list[dict], fmt: str) -> str:
    if fmt == "json":
        return render_json(records[0] if len(records) == 1 else records)
    columns = list(records[0])
    if fmt == "csv":
        return render_csv(columns, [[r[c] for c in columns] for r in records])
    width = max(len(c) for c in columns)
    blocks = ["\n".join(f"{c:<{width}}  {_fmt(r[c])}" for c in columns) for r in records]
    return "\n\n".join(blocks) + "\n"


# -- argument handling --------------------------------------------------------------


def _base_rates(text: str) -> tuple[float, float]:
    try:
        a, b = (float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'a,b', got {text!r}") from None
    return a, b


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _build_parser() -> tuple[argparse.ArgumentParser, dict[str, argparse.ArgumentParser]]:
    common = argparse.ArgumentParser(add_help=False, allow_abbrev=False)
    common.add_argument("--format", choices=("human", "csv", "json"), default=None)
    common.add_argument("--output", metavar="PATH", help="write to PATH instead of stdout")
    common.add_argument("--config", metavar="FILE", help="flat key = value file of flag values")

    group_flags = argparse.ArgumentParser(add_help=False, allow_abbrev=False)
    group_flags.add_argument("--d", type=float, help="Cohen's d between the groups (>= 0)")
    group_flags.add_argument("--base-rates", type=_base_rates, default=(0.5, 0.5),
                             metavar="A,B", help="group proportions (default 0.5,0.5)")

    parser = argparse.ArgumentParser(
        prog="fsdet",
        description="Factor score determinacy with two-group mean differences.",
        allow_abbrev=False,
    )
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)
    subs = {}

    def add(name, help_, parents=()):
        subs[name] = sub.add_parser(name, help=help_, parents=[common, *parents], allow_abbrev=False)
        return subs[name]

    p = add("determinacy", "determinacy of the regression score", [group_flags])
    p.add_argument("--p", type=int, help="number of observed variables")
    p.add_argument("--lambda", dest="lam", type=float, help="common factor loading")
    p.add_argument("--path", choices=("closed_form", "matrix"), default="closed_form")

    p = add("benchmark", "squared loading needed for a target determinacy")
    p.add_argument("--p", type=int)
    p.add_argument("--target", type=_float_list, default=[0.5, 0.8, 0.9],
                   help="target rho^2 value(s), comma-separated")

    p = add("compensate", "items to add after eliminating a group difference", [group_flags])
    p.add_argument("--p", type=int)
    p.add_argument("--lambda", dest="lam", type=float)

    p = add("correct", "remove a known group difference from a combined loading", [group_flags])
    p.add_argument("--lambda-xig", dest="lambda_xig", type=float, help="observed combined loading")

    p = add("figure", "emit figure data as a table")
    p.add_argument("--id", dest="figure_id", type=int, choices=(1, 2, 3))
    p.add_argument("--p-min", type=int)
    p.add_argument("--p-max", type=int)
    p.add_argument("--d-min", type=float)
    p.add_argument("--d-max", type=float)
    p.add_argument("--d-step", type=float)
    p.add_argument("--lambdas", type=_float_list, help="panel loadings (figures 2, 3)")
    p.add_argument("--targets", type=_float_list, help="rho^2 targets (figures 1, 3)")

    p = add("simulate", "Monte Carlo check of the analytic determinacy", [group_flags])
    p.add_argument("--p", type=int)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--n-cases", type=int, default=100_000)
    p.add_argument("--n-reps", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mode", choices=[m.value for m in EliminationMode], default="none")
    p.add_argument("--backend", choices=("cython", "python"), default=None)
    p.add_argument("--jobs", type=int, default=1)

    p = add("validate-paper", "check the published worked examples")
    p.add_argument("--json", action="store_true", help="same as --format json")
    p.add_argument("--perturb", action="append", default=[], metavar="CHECK[.QTY][=OFFSET]",
                   help="shift an expected value (harness self-test)")
    return parser, subs


def _apply_config(parser, subs, argv, args):
    """Re-parse with values from ``--config`` as defaults so flags win."""
    cp = configparser.ConfigParser(interpolation=None)
    try:
        with open(args.config) as fh:
            cp.read_string("[fsdet]\n" + fh.read())
    except (OSError, configparser.Error) as exc:
        raise UsageError(f"cannot read config {args.config!r}: {exc}") from None
    sub = subs[args.command]
    by_key = {}
    for action in sub._actions:
        for opt in action.option_strings:
            by_key[opt.lstrip("-").replace("-", "_")] = action
    defaults = {}
    for key, raw in cp["fsdet"].items():
        action = by_key.get(key.replace("-", "_"))
        if action is None or action.dest in ("config", "help"):
            raise UsageError(f"unknown key {key!r} in {args.config}")
        if isinstance(action, argparse._StoreTrueAction):
            defaults[action.dest] = raw.strip().lower() in ("1", "true", "yes", "on")
        elif isinstance(action, argparse._AppendAction):
            defaults[action.dest] = [v.strip() for v in raw.split(",") if v.strip()]
        else:
            defaults[action.dest] = raw.strip()
    sub.set_defaults(**defaults)
    return parser.parse_args(argv)


def _require(args, *names):
    missing = [n for n in names if getattr(args, n) is None]
    if missing:
        flags = ", ".join("--" + ("lambda" if n == "lam" else n.replace("_", "-")) for n in missing)
        raise UsageError(f"{args.command}: missing required {flags}")


def _group(args) -> GroupSpec | None:
    if args.d is None:
        return None
    a, b = args.base_rates
    return GroupSpec(args.d, a, b)


# -- commands ----------------------------------------------------------------------


def cmd_determinacy(args):
    _require(args, "p", "lam")
    group = _group(args)
    if args.path == "matrix":
        report = determinacy_matrix(build_sigma(ModelSpec.equal(args.p, args.lam, group)))[0]
    elif group is None:
        report = determinacy_closed(args.p, args.lam)
    else:
        report = determinacy_with_group(args.p, args.lam, group)
    return [report.as_dict()], "human"


def cmd_benchmark(args):
    _require(args, "p")
    records = []
    for t in args.target:
        lam_sq = benchmark_loading(args.p, t)
        records.append({"p": args.p, "target_rho_sq": t, "lambda_sq": lam_sq,
                        "lambda": math.sqrt(lam_sq)})
    return records, "human"


def cmd_compensate(args):
    _require(args, "p", "lam", "d")
    plan = compensation(args.p, args.lam, _group(args))
    return [{"p": args.p, "lambda_xi": args.lam, "d": args.d, **plan.as_dict()}], "human"


def cmd_correct(args):
    _require(args, "lambda_xig", "d")
    lam = corrected_loading(args.lambda_xig, _group(args))
    return [{"lambda_xig": args.lambda_xig, "d": args.d, "lambda_xi": lam,
             "lambda_xi_sq": lam * lam}], "human"


def cmd_figure(args):
    _require(args, "figure_id")
    overrides = {
        "p_min": args.p_min, "p_max": args.p_max, "d_min": args.d_min,
        "d_max": args.d_max, "d_step": args.d_step, "lambdas": args.lambdas,
        "targets": args.targets,
    }
    allowed = {1: {"p_min", "p_max", "targets"},
               2: {"lambdas", "d_min", "d_max", "d_step", "p_min", "p_max"},
               3: {"lambdas", "targets", "d_min", "d_max", "d_step"}}[args.figure_id]
    given = {k: v for k, v in overrides.items() if v is not None}
    if set(given) - allowed:
        raise UsageError(
            f"figure {args.figure_id} does not take "
            + ", ".join("--" + k.replace("_", "-") for k in sorted(set(given) - allowed))
        )
    table = figures.FIGURES[args.figure_id](**given)
    return table, "csv"


def cmd_simulate(args):
    _require(args, "p", "lam")
    model = ModelSpec.equal(args.p, args.lam, _group(args))
    config = SimulationConfig(model, n_cases=args.n_cases, n_reps=args.n_reps,
                              seed=args.seed, elimination_mode=args.mode)
    if args.jobs < 1:
        raise UsageError("--jobs must be >= 1")
    result = simulate(config, backend=args.backend, n_jobs=args.jobs)
    record = result.as_dict()
    record.pop("rho_per_rep")
    return [record], "human"


def cmd_validate_paper(args):
    perturb = {}
    for item in args.perturb:
        name, _, offset = item.partition("=")
        try:
            perturb[name] = float(offset) if offset else 0.01
        except ValueError:
            raise UsageError(f"bad --perturb offset in {item!r}") from None
    if {k.split(".")[0] for k in perturb} - set(EXPECTED):
        raise UsageError(f"unknown check in --perturb; choose from {sorted(EXPECTED)}")
    results = run_checks(perturb)
    if args.json:
        args.format = "json"
    return results, "human"


COMMANDS = {
    "determinacy": cmd_determinacy,
    "benchmark": cmd_benchmark,
    "compensate": cmd_compensate,
    "correct": cmd_correct,
    "figure": cmd_figure,
    "simulate": cmd_simulate,
    "validate-paper": cmd_validate_paper,
}


def _render_checks(results, fmt: str) -> str:
    if fmt == "json":
        return render_json({
            "passed": sum(r.passed for r in results),
            "total": len(results),
            "checks": [r.as_dict() for r in results],
        })
    if fmt == "csv":
        rows = [(r.name, c.quantity, c.computed, c.expected, c.decimals, c.passed)
                for r in results for c in r.comparisons]
        return render_csv(("check", "quantity", "computed", "expected", "decimals", "passed"), rows)
    lines = []
    for r in results:
        lines.append(f"[{'PASS' if r.passed else 'FAIL'}] {r.name}: {r.description}")
        for c in r.comparisons:
            lines.append(
                f"    {c.quantity}: computed {c.computed:.6g} -> "
                f"{round(c.computed, c.decimals):.{c.decimals}f}, "
                f"expected {c.expected:.{c.decimals}f}"
            )
    lines.append(f"{sum(r.passed for r in results)}/{len(results)} checks pass")
    return "\n".join(lines) + "\n"


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, subs = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.config:
            args = _apply_config(parser, subs, argv, args)
        output, default_fmt = COMMANDS[args.command](args)
    except SystemExit as exc:  # argparse usage errors and --help
        return int(exc.code or 0)
    except (UsageError, ModelError) as exc:
        print(f"fsdet {argv[0] if argv else ''}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    fmt = args.format or default_fmt

    status = EXIT_OK
    if args.command == "validate-paper":
        text = _render_checks(output, fmt)
        status = EXIT_OK if all(r.passed for r in output) else EXIT_CHECK_FAILED
    elif isinstance(output, figures.Table):
        if fmt == "json":
            text = render_json([dict(zip(output.columns, row)) for row in output.rows])
        else:
            text = render_csv(output.columns, output.rows)
    else:
        text = render_records(output, fmt)

    if args.output:
        with open(args.output, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return status


if __name__ == "__main__":
    sys.exit(main())
