"""Command-line interface.

Exit status: 0 success, 1 usage error, 2 data error, 3 the solver did not
converge (output is still written and its sidecar records the status).
Set ``IVDAG_LOG`` (e.g. ``INFO`` or ``DEBUG``) to change log verbosity.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from .baselines import SortnregressConfig, sortnregress
from .data import observational_rows
from .dataio import read_dataset, write_dataset
from .errors import DatasetParseError, InvalidInputError, SingularProfileError, SolverDivergedError
from .graph import read_adjacency, write_adjacency
from .harness import METHODS, CvSpec, kfold_cv, run_sweep, sweep_from_dict
from .metrics import evaluate
from .objective import Method, ObjectiveSpec
from .simgen import ScenarioConfig, sample_dataset
from .solver import FitConfig, fit
from .variance import OmegaEstimate, estimate_omega, read_omega, split_for_omega

log = logging.getLogger("ivdag")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NONCONVERGED = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def cmd_simulate(args) -> int:
    config = ScenarioConfig.from_dict(json.loads(Path(args.config).read_text()))
    if args.seed is not None:
        config = ScenarioConfig.from_dict({**config.to_dict(), "seed": args.seed})
    sim = sample_dataset(config, args.replicate)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_adjacency(sim.W0, out / "truth.tsv")
    meta = {"seed": config.seed, "scenario": config.to_dict(), "truth": "truth.tsv",
            "sigmas": sim.sigmas.tolist(), "replicate": args.replicate}
    write_dataset(sim.interventional, out, **meta)
    if sim.observational is not None:
        write_dataset(sim.observational, out / "observational", **{**meta, "truth": "../truth.tsv"})
    return EXIT_OK


def _resolve_omega(args, data):
    if args.omega == "estimate":
        return estimate_omega(data, fallback_identity=args.allow_missing_regimes)
    if args.omega == "identity":
        return OmegaEstimate.identity(data.p)
    return read_omega(args.omega)


def cmd_fit(args) -> int:
    data = read_dataset(args.data)
    out = Path(args.out)
    sidecar = {"method": args.method, "lambda": args.lambda1, "threshold": args.threshold}
    if args.method == "sortnregress":
        W = sortnregress(observational_rows(data), SortnregressConfig())
        if args.threshold:
            W[np.abs(W) <= args.threshold] = 0.0
        write_adjacency(W, out)
        _write_json(out.with_name(out.name + ".json"), {**sidecar, "lambda": None, "status": "ok"})
        return EXIT_OK

    method = Method(args.method)
    fit_data, omega = data, None
    if method is Method.DOTEARS:
        if args.split_fraction is not None:
            omega_part, fit_data = split_for_omega(data, args.split_fraction)
            data_for_omega = omega_part
        else:
            data_for_omega = data
        omega = _resolve_omega(args, data_for_omega)
        sidecar["omega"] = omega.values.tolist()
        sidecar["omega_source"] = omega.source.value
    spec = ObjectiveSpec(method, args.lambda1, omega)
    config = FitConfig(post_threshold=args.threshold)
    try:
        result = fit(fit_data, spec, config)
    except SolverDivergedError as exc:
        if exc.last_w is not None:
            write_adjacency(exc.last_w, out)
        _write_json(out.with_name(out.name + ".json"), {**sidecar, "status": "diverged", "error": str(exc)})
        log.error("solver diverged: %s", exc)
        return EXIT_NONCONVERGED
    write_adjacency(result.W_hat, out)
    _write_json(out.with_name(out.name + ".json"), {
        **sidecar,
        "status": result.status.value,
        "h_final": result.h_final,
        "outer_iters": result.outer_iters,
        "inner_iters": result.inner_iters_total,
        "objective": result.objective_final,
        "removed_edges": [list(map(int, e)) for e in result.removed_edges],
    })
    if not result.converged:
        log.warning("fit did not converge (%s); output written", result.status.value)
        return EXIT_NONCONVERGED
    return EXIT_OK


def cmd_cv(args) -> int:
    if args.method == "sortnregress":
        raise UsageError("cv: sortnregress selects its penalty by an information criterion")
    data = read_dataset(args.data)
    cv = CvSpec(folds=args.folds, lambda_grid=tuple(args.lambda_grid))
    result = kfold_cv(data, args.method, cv, seed=args.seed)
    rows = result.rows()
    with open(args.out, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0]) + ["best"])
        writer.writeheader()
        for row in rows:
            writer.writerow({**{k: repr(v) for k, v in row.items()}, "best": int(row["lambda"] == result.best_lambda)})
    print(result.best_lambda)
    return EXIT_OK


def cmd_eval(args) -> int:
    report = evaluate(read_adjacency(args.est), read_adjacency(args.truth), args.threshold)
    row = report.as_row()
    with open(args.out, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(row))
        writer.writeheader()
        writer.writerow({k: "" if v is None else v for k, v in row.items()})
    return EXIT_OK


def cmd_sweep(args) -> int:
    spec = sweep_from_dict(json.loads(Path(args.spec).read_text()))
    run_sweep(spec, args.out, jobs=args.jobs)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ivdag", description="DAG learning from interventional data.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="simulate a scenario into a dataset directory")
    p.add_argument("--config", required=True, help="scenario JSON")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, help="override the scenario seed")
    p.add_argument("--replicate", type=int, default=0)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="fit one method to a dataset")
    p.add_argument("--data", required=True)
    p.add_argument("--method", required=True, choices=METHODS)
    p.add_argument("--lambda", dest="lambda1", type=float, default=0.1)
    p.add_argument("--omega", default="estimate", help="estimate, identity, or a TSV file of variances")
    p.add_argument("--split-fraction", type=float,
                   help="reserve this fraction of each interventional regime for the variance estimate")
    p.add_argument("--allow-missing-regimes", action="store_true",
                   help="use variance 1 for nodes without an interventional regime")
    p.add_argument("--threshold", type=float, help="zero |w| <= threshold and break leftover cycles")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("cv", help="choose lambda by K-fold cross-validation")
    p.add_argument("--data", required=True)
    p.add_argument("--method", required=True, choices=METHODS)
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--lambda-grid", type=float, nargs="+", default=list(CvSpec.lambda_grid))
    p.add_argument("--seed", type=int, default=0, help="seed of the fold assignment")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_cv)

    p = sub.add_parser("eval", help="score an estimate against the truth")
    p.add_argument("--est", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--threshold", type=float, default=0.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="run a simulation sweep")
    p.add_argument("--spec", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv: list[str] | None = None) -> int:
    level = os.environ.get("IVDAG_LOG", "WARNING").upper()
    if not isinstance(logging.getLevelName(level), int):
        level = "WARNING"
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except (FileNotFoundError, IsADirectoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (DatasetParseError, InvalidInputError, SingularProfileError, json.JSONDecodeError, KeyError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
