"""Command-line front end.

Subcommands: simulate, sweep, summarize, ingest, fit, train-regressor,
predict, extrapolate. All randomness flows from --seed; reruns with the same
arguments reproduce outputs byte for byte. Exit codes: 0 success,
2 validation error, 3 I/O error.
"""

import argparse
import json
import sys

import numpy as np

from .core import (
    ElectionConfig,
    IOFailure,
    ValidationError,
    read_votes_csv,
    write_votes_csv,
)
from .experiments import (
    DEFAULT_SCALE,
    ExperimentSpec,
    extrapolate,
    fit,
    ingest_observed,
    resolve_observed,
    run_sweep,
    sweep_csv_lines,
)
from .generators import MODEL_TAGS, params_from_values, simulate
from .inference import ParamVector, PriorSpec
from .regression import (
    ConfigRanges,
    MlpModel,
    bisection_estimate,
    TrainingSet,
    features_from_stats,
    generate_training_set,
    mlp_predict,
    mlp_train,
)
from .summaries import summarize


def _parse_floats(text):
    return [float(v) for v in text.split(",") if v.strip()]


def _write_text(path, text):
    try:
        with open(path, "w") as fh:
            fh.write(text)
    except OSError as exc:
        raise IOFailure(f"cannot write {path}: {exc}") from exc


def _load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise IOFailure(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: malformed JSON ({exc})") from exc


def _cmd_simulate(args):
    theta = _parse_floats(args.theta)
    config = ElectionConfig.build(args.districts, args.electors, theta)
    params = params_from_values(args.model, _parse_floats(args.params), config.n_parties)
    votes = simulate(args.model, config, params, args.seed)
    write_votes_csv(votes, args.out)
    print(f"wrote {args.out}")


def _cmd_sweep(args):
    spec = ExperimentSpec.from_dict(_load_json(args.config))
    if args.seed is not None:
        spec = ExperimentSpec.from_dict({**spec.to_dict(), "seed": args.seed})
    report = run_sweep(spec, n_jobs=args.jobs)
    _write_text(args.out, sweep_csv_lines(report))
    _write_text(args.out + ".json", json.dumps(report, sort_keys=True, indent=2) + "\n")
    print(f"wrote {args.out} and {args.out}.json")


def _cmd_summarize(args):
    votes = read_votes_csv(args.votes)
    n_electors = int(votes.counts.sum())
    config = ElectionConfig(
        n_districts=votes.n_districts,
        n_electors=n_electors,
        vote_shares=votes.counts.sum(axis=0) / n_electors,
        capacities=votes.counts.sum(axis=1),
        budgets=votes.counts.sum(axis=0),
    )
    stats = summarize(votes, config)
    _write_text(args.out, stats.to_json() + "\n")
    print(f"wrote {args.out}")


def _cmd_ingest(args):
    observed = ingest_observed(args.path, args.format)
    stats = observed.stats()
    payload = {"observed": observed.to_dict(), "stats": stats.to_dict()}
    _write_text(args.out, json.dumps(payload, sort_keys=True, indent=2) + "\n")
    print(f"wrote {args.out}")


def _cmd_fit(args):
    settings = _load_json(args.settings) if args.settings else None
    result = fit(
        args.observed,
        args.model,
        method=args.method,
        settings=settings,
        seed=args.seed,
        scale=args.scale,
        n_jobs=args.jobs,
    )
    _write_text(args.out, result.to_json(indent=2) + "\n")
    opt = ", ".join(f"{v:.4g}" for v in result.psi_opt.values)
    print(f"wrote {args.out} (psi_opt = [{opt}], min distance {result.min_distance:.4g})")


def _cmd_train_regressor(args):
    cfg = _load_json(args.config)
    ranges = ConfigRanges(
        districts=tuple(cfg["districts"]),
        electors=tuple(cfg["electors"]),
        n_parties=int(cfg.get("n_parties", 2)),
        theta=cfg.get("theta"),
    )
    train = generate_training_set(
        args.model, ranges, n=args.n, seed=args.seed, n_jobs=args.jobs
    )
    if args.train_csv:
        train.write_csv(args.train_csv)
    model = mlp_train(train, epochs=args.epochs, seed=args.seed)
    _write_text(args.out, model.to_json(indent=2) + "\n")
    print(f"wrote {args.out}")


def _cmd_predict(args):
    try:
        with open(args.model_file) as fh:
            model = MlpModel.from_json(fh.read())
    except OSError as exc:
        raise IOFailure(f"cannot read {args.model_file}: {exc}") from exc
    if args.votes:
        observed = ingest_observed(args.votes, "votes")
    elif args.observed:
        observed = resolve_observed(args.observed)
    else:
        raise ValidationError("predict needs --votes or --observed")
    features = observed.features(scale=args.scale)
    if np.isfinite(features).all():
        estimate = mlp_predict(model, features)
        method = "mlp"
    else:
        if not args.train_csv:
            raise ValidationError(
                "partially observed features need --train-csv for bisection"
            )
        train = TrainingSet.read_csv(args.train_csv)
        estimate = bisection_estimate(train, features)
        method = "bisection"
    payload = {
        "model": model.model,
        "method": method,
        "estimate": estimate.to_list(),
        "observed": observed.name,
    }
    _write_text(args.out, json.dumps(payload, sort_keys=True, indent=2) + "\n")
    print(f"wrote {args.out}")


def _cmd_extrapolate(args):
    fit_obj = _load_json(args.fit)
    params = ParamVector(fit_obj["model"], fit_obj["psi_opt"])
    report = extrapolate(
        params,
        args.observed,
        replications=args.replications,
        seed=args.seed,
        scale=args.scale,
        n_jobs=args.jobs,
    )
    _write_text(args.out, json.dumps(report, sort_keys=True, indent=2) + "\n")
    seats = ", ".join(f"{v:.1f}" for v in report["seats_mean"])
    print(f"wrote {args.out} (mean seats [{seats}])")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="electorsim",
        description="District-election simulation and likelihood-free fitting",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate one election to a votes CSV")
    p.add_argument("--model", required=True, choices=MODEL_TAGS)
    p.add_argument("--districts", type=int, required=True)
    p.add_argument("--electors", type=int, required=True)
    p.add_argument("--theta", required=True, help="comma-separated vote shares")
    p.add_argument("--params", required=True, help="comma-separated model parameters")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("sweep", help="run a parameter grid and write CSV + JSON")
    p.add_argument("--config", required=True, help="sweep spec JSON")
    p.add_argument("--seed", type=int, default=None, help="override the spec seed")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", required=True, help="CSV path (JSON written alongside)")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("summarize", help="summary statistics of a votes CSV")
    p.add_argument("--votes", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_summarize)

    p = sub.add_parser("ingest", help="load an observed election record")
    p.add_argument("--path", required=True)
    p.add_argument("--format", required=True, choices=("aggregate", "votes"))
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("fit", help="fit a model to an observed election")
    p.add_argument("--observed", required=True, help="delhi:YYYY or a JSON record path")
    p.add_argument("--model", required=True, choices=MODEL_TAGS)
    p.add_argument("--method", default="hybrid", choices=("rejection", "explore-exploit", "hybrid"))
    p.add_argument("--settings", default=None, help="JSON file overriding fit settings")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--scale", type=float, default=DEFAULT_SCALE)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("train-regressor", help="train the dense regressor")
    p.add_argument("--model", required=True, choices=MODEL_TAGS)
    p.add_argument("--config", required=True, help="config-ranges JSON")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--train-csv", default=None, help="also write the training set CSV")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_train_regressor)

    p = sub.add_parser("predict", help="one-shot regression estimate")
    p.add_argument("--model-file", required=True)
    p.add_argument("--votes", default=None, help="district-level CSV")
    p.add_argument("--observed", default=None, help="delhi:YYYY or record path")
    p.add_argument("--train-csv", default=None, help="training CSV for masked bisection")
    p.add_argument("--scale", type=float, default=DEFAULT_SCALE)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_predict)

    p = sub.add_parser("extrapolate", help="apply fitted parameters to new vote shares")
    p.add_argument("--fit", required=True, help="fit output JSON")
    p.add_argument("--observed", required=True, help="delhi:YYYY or record path")
    p.add_argument("--replications", type=int, default=30)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--scale", type=float, default=DEFAULT_SCALE)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_extrapolate)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except IOFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
