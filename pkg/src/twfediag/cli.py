"""Command-line frontend.

Three subcommands, one report per invocation:

* ``weights``   ingest a CSV, report decomposition weights and the
                robustness bounds for the chosen regression
* ``estimate``  point estimates (fe / fd / didm / placebos), optional
                cluster bootstrap with difference tests
* ``simulate``  Monte Carlo run from a key = value config file

Reports are JSON (default) or CSV on stdout and embed a run manifest.
Exit status: 0 on success, 2 on a data/design error (the error class
name goes to stderr), 1 on anything unexpected.
"""

from __future__ import annotations

import argparse
import datetime
import hashlib
import sys

from . import __version__
from .bootstrap import cluster_bootstrap, joint_assumption_test
from .bounds import compute_bounds
from .didm import did_m, did_m_placebo
from .errors import PanelError, PreconditionNotMetError
from .io import dump_json, load_cells, weight_table_to_csv
from .panel import validate_design
from .regression import beta_fd, beta_fe, residualize_fd, residualize_fe
from .simulate import monte_carlo, parse_config_file
from .weights import fd_weights, fe_weights

SCHEMA_VERSION = "1"


def _manifest(args, input_path=None, seed=None):
    digest = None
    if input_path is not None:
        with open(input_path, "rb") as fh:
            digest = hashlib.sha256(fh.read()).hexdigest()
    return {
        "command": " ".join(args),
        "input_sha256": digest,
        "seed": seed,
        "version": __version__,
        "schema_version": SCHEMA_VERSION,
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }


def _column_args(parser):
    parser.add_argument("--input", required=True, help="long-format CSV file")
    parser.add_argument("--group", default="group", help="group column name")
    parser.add_argument("--time", default="time", help="period column name")
    parser.add_argument("--outcome", default="outcome", help="outcome column name")
    parser.add_argument("--treatment", default="treatment", help="treatment column name")
    parser.add_argument("--count", default=None, help="count column for cell-level input")
    parser.add_argument("--unit", default=None, help="unit id column for unit-level input")


def _load(args):
    return load_cells(
        args.input,
        group=args.group,
        time=args.time,
        outcome=args.outcome,
        treatment=args.treatment,
        count=args.count,
        unit=args.unit,
    )


def _cmd_weights(args, argv):
    cells = _load(args)
    design = validate_design(cells)
    if args.estimator == "fe":
        residuals = residualize_fe(cells)
        estimate = beta_fe(cells, residuals)
        table = fe_weights(cells, residuals)
    else:
        residuals = residualize_fd(cells)
        estimate = beta_fd(cells, residuals)
        table = fd_weights(cells, residuals)
    bounds = compute_bounds(estimate.beta, table)
    if args.output == "csv":
        sys.stdout.write(weight_table_to_csv(table))
        return 0
    payload = {
        "manifest": _manifest(argv, input_path=args.input),
        "design": design.to_dict(),
        "estimate": estimate.to_dict(),
        "weights": table.to_dict(),
        "robustness": bounds.to_dict(),
    }
    print(dump_json(payload))
    return 0


def _cmd_estimate(args, argv):
    cells = _load(args)
    requested = [e.strip() for e in args.estimator.split(",") if e.strip()]
    for e in requested:
        if e not in ("fe", "fd", "didm"):
            raise PreconditionNotMetError(f"unknown estimator {e!r}")
    estimates = {}
    warnings = []
    for e in requested:
        if e == "fe":
            estimates["fe"] = beta_fe(cells).to_dict()
        elif e == "fd":
            estimates["fd"] = beta_fd(cells).to_dict()
        else:
            didm_result = did_m(cells)
            estimates["didm"] = didm_result.to_dict()
            warnings.extend(didm_result.stable_group_warnings)

    placebos = {}
    for horizon in args.placebo or []:
        result = did_m_placebo(cells, horizon)
        entry = result.to_dict()
        warnings.extend(result.stable_group_warnings)
        if "didm" in requested:
            rerun = did_m(cells, eligible=result.subsample_cells)
            entry["didm_on_placebo_subsample"] = rerun.to_dict()
        placebos[f"placebo_{horizon}"] = entry

    payload = {
        "manifest": _manifest(argv, input_path=args.input, seed=args.seed),
        "estimates": estimates,
        "placebos": placebos,
        "warnings": warnings,
    }

    report = None
    if args.bootstrap:
        ids = list(requested) + [f"placebo_{k}" for k in (args.placebo or [])]
        report = cluster_bootstrap(cells, ids, B=args.bootstrap, seed=args.seed)
        payload["bootstrap"] = report.to_dict()
        if "fe" in requested and "fd" in requested:
            payload["joint_assumption_test"] = joint_assumption_test(report).to_dict()

    for w in warnings:
        print(f"warning: {w}", file=sys.stderr)
    if args.output == "csv":
        points = {k: v.get("estimate", v.get("beta")) for k, v in estimates.items()}
        points.update({k: v["estimate"] for k, v in placebos.items()})
        print("estimator,estimate,se")
        for name, value in points.items():
            se = report.standard_errors.get(name, "") if report else ""
            print(f"{name},{value!r},{se!r}" if se != "" else f"{name},{value!r},")
        return 0
    print(dump_json(payload))
    return 0


def _cmd_simulate(args, argv):
    config, estimators, replications = parse_config_file(args.config)
    summary = monte_carlo(config, estimators, replications)
    if args.output == "csv":
        print("estimator,replications_ok,mean,target,bias,mc_se,variance")
        for row in summary.rows:
            print(
                f"{row.estimator},{row.replications_ok},{row.mean!r},"
                f"{row.target!r},{row.bias!r},{row.mc_se!r},{row.variance!r}"
            )
        return 0
    payload = {
        "manifest": _manifest(argv, input_path=args.config, seed=config.seed),
        "monte_carlo": summary.to_dict(),
    }
    print(dump_json(payload))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="twfediag",
        description=(
            "Diagnose two-way fixed-effects panel regressions under "
            "heterogeneous treatment effects."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    w = sub.add_parser("weights", help="decomposition weights and robustness bounds")
    _column_args(w)
    w.add_argument("--estimator", choices=("fe", "fd"), default="fe")
    w.add_argument("--output", choices=("json", "csv"), default="json")

    e = sub.add_parser("estimate", help="point estimates, placebos, bootstrap")
    _column_args(e)
    e.add_argument(
        "--estimator",
        default="didm",
        help="comma-separated subset of fe,fd,didm",
    )
    e.add_argument(
        "--placebo",
        type=int,
        action="append",
        metavar="K",
        help="add the horizon-K pre-trend placebo (repeatable)",
    )
    e.add_argument("--bootstrap", type=int, default=0, metavar="B")
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--output", choices=("json", "csv"), default="json")

    s = sub.add_parser("simulate", help="Monte Carlo run from a config file")
    s.add_argument("--config", required=True, help="key = value config file")
    s.add_argument("--output", choices=("json", "csv"), default="json")
    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "weights":
            return _cmd_weights(args, argv)
        if args.command == "estimate":
            return _cmd_estimate(args, argv)
        return _cmd_simulate(args, argv)
    except PanelError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


def entrypoint():
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
