"""Experiment harness: parameter sweeps, real-election ingestion, fitting,
and seat extrapolation under new vote shares.

Observed elections reported only as aggregates (seats per party plus mean/std
winning margin) enter the pipeline as masked summary statistics; full
district-level vote matrices go through the ordinary summarizer. Aggregate
records for the bundled Delhi contests ship with the package (parties
anonymized as A/B/C/Others) and resolve through names like ``delhi:2015``.

Large real elections are scaled down with a --scale factor (default 0.01,
so 9M electors become 90k); seat shares are stable under this scaling for
the statistics of interest.
"""

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .core import (
    ElectionConfig,
    IOFailure,
    ValidationError,
    VoteMatrix,
    read_votes_csv,
)
from .generators import MODEL_TAGS, params_from_values, simulate, task_seed_sequence
from .inference import (
    AbcResult,
    ParamVector,
    PriorSpec,
    abc_explore_exploit,
    abc_rejection,
)
from .regression import (
    ConfigRanges,
    bisection_estimate,
    features_from_stats,
    generate_training_set,
    hybrid_estimate,
)
from .summaries import SummaryStats, summarize

DEFAULT_SCALE = 0.01
SHARE_TOL = 1e-9

FIT_METHODS = ("rejection", "explore-exploit", "hybrid")

DEFAULT_FIT_SETTINGS = {
    "rejection": {"n_proposals": 600, "accept_quantile": 0.05},
    "explore-exploit": {
        "n_explore": 250,
        "n_seeds": 5,
        "n_exploit": 350,
        "accept_quantile": 0.05,
    },
    "hybrid": {
        "n_train": 300,
        "n_exploit": 350,
        "accept_quantile": 0.05,
        "tol": 1e-3,
    },
}


@dataclass(frozen=True)
class ExperimentSpec:
    """Grid of (vote shares, parameters) cells, each replicated R times."""

    model: str
    n_districts: int
    n_electors: int
    theta_grid: tuple
    param_grid: tuple
    replications: int
    seed: int

    def __post_init__(self):
        if self.model not in MODEL_TAGS:
            raise ValidationError(f"unknown model tag {self.model!r}")
        if self.replications < 1:
            raise ValidationError("replications must be at least 1")
        if not self.theta_grid or not self.param_grid:
            raise ValidationError("grids must be nonempty")
        object.__setattr__(
            self, "theta_grid", tuple(tuple(float(v) for v in t) for t in self.theta_grid)
        )
        object.__setattr__(
            self, "param_grid", tuple(tuple(float(v) for v in p) for p in self.param_grid)
        )

    @classmethod
    def from_dict(cls, obj):
        return cls(
            model=obj["model"],
            n_districts=int(obj["districts"]),
            n_electors=int(obj["electors"]),
            theta_grid=obj["theta_grid"],
            param_grid=obj["param_grid"],
            replications=int(obj.get("replications", 30)),
            seed=int(obj.get("seed", 0)),
        )

    def to_dict(self):
        return {
            "model": self.model,
            "districts": self.n_districts,
            "electors": self.n_electors,
            "theta_grid": [list(t) for t in self.theta_grid],
            "param_grid": [list(p) for p in self.param_grid],
            "replications": self.replications,
            "seed": self.seed,
        }


def run_sweep(spec, n_jobs=1):
    """Mean +/- sample-std of seats plus margin and spread statistics per cell.

    Reported per grid cell over R seeded replications: mean and sample std of
    seats per party, mean winning margin (MWM), mean per-run std of winning
    margins (SWM), and the mean per-party vote-fraction std.
    """
    cells = [
        (ti, pi) for ti in range(len(spec.theta_grid)) for pi in range(len(spec.param_grid))
    ]

    def run_cell(ci):
        ti, pi = cells[ci]
        theta = spec.theta_grid[ti]
        config = ElectionConfig.build(spec.n_districts, spec.n_electors, theta)
        params = params_from_values(spec.model, spec.param_grid[pi], config.n_parties)
        seat_rows, mwm, swm, frac_std = [], [], [], []
        for rep in range(spec.replications):
            votes = simulate(
                spec.model, config, params, task_seed_sequence(spec.seed, ci, rep)
            )
            stats = summarize(votes, config)
            seat_rows.append(stats.seats)
            mwm.append(stats.margin_mean)
            swm.append(stats.margin_std)
            frac_std.append(stats.std_frac)
        seats = np.vstack(seat_rows)
        ddof = 1 if spec.replications > 1 else 0
        return {
            "theta": list(spec.theta_grid[ti]),
            "params": list(spec.param_grid[pi]),
            "seats_mean": seats.mean(axis=0).tolist(),
            "seats_std": seats.std(axis=0, ddof=ddof).tolist(),
            "mwm": float(np.mean(mwm)),
            "swm": float(np.mean(swm)),
            "vote_frac_std": np.vstack(frac_std).mean(axis=0).tolist(),
        }

    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            rows = list(pool.map(run_cell, range(len(cells))))
    else:
        rows = [run_cell(ci) for ci in range(len(cells))]
    return {"spec": spec.to_dict(), "cells": rows}


def sweep_csv_lines(report):
    """Render a sweep report as deterministic CSV lines."""
    spec = report["spec"]
    n_parties = len(spec["theta_grid"][0])
    n_params = len(spec["param_grid"][0])
    header = (
        ["model"]
        + [f"theta_{k + 1}" for k in range(n_parties)]
        + [f"param_{i + 1}" for i in range(n_params)]
        + [f"seats_mean_{k + 1}" for k in range(n_parties)]
        + [f"seats_std_{k + 1}" for k in range(n_parties)]
        + ["mwm", "swm"]
        + [f"vote_frac_std_{k + 1}" for k in range(n_parties)]
    )
    lines = [",".join(header)]
    for cell in report["cells"]:
        row = (
            [spec["model"]]
            + [repr(v) for v in cell["theta"]]
            + [repr(v) for v in cell["params"]]
            + [repr(v) for v in cell["seats_mean"]]
            + [repr(v) for v in cell["seats_std"]]
            + [repr(cell["mwm"]), repr(cell["swm"])]
            + [repr(v) for v in cell["vote_frac_std"]]
        )
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class ObservedElection:
    """One real (or synthetic) election: structure plus observed results.

    Either a full district-level vote matrix or an aggregate record (seats
    per party, mean winning margin MWM, std of winning margin SWM).
    """

    name: str
    n_districts: int
    n_electors: int
    theta: np.ndarray
    seats: object = None
    mwm: object = None
    swm: object = None
    votes: object = field(default=None, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "theta", np.asarray(self.theta, dtype=np.float64))
        if abs(self.theta.sum() - 1.0) > SHARE_TOL:
            raise ValidationError(
                f"{self.name}: vote shares sum to {self.theta.sum()!r}, expected 1"
            )
        if self.seats is not None:
            seats = np.asarray(self.seats, dtype=np.int64)
            if seats.shape != self.theta.shape:
                raise ValidationError(f"{self.name}: one seat count per party required")
            if int(seats.sum()) != self.n_districts:
                raise ValidationError(
                    f"{self.name}: seats sum to {int(seats.sum())}, expected "
                    f"{self.n_districts}"
                )
            object.__setattr__(self, "seats", seats)

    @property
    def n_parties(self):
        return int(self.theta.shape[0])

    def config(self, scale=1.0):
        """Election structure at a (possibly scaled-down) elector count."""
        if not 0 < scale <= 1:
            raise ValidationError("scale must lie in (0, 1]")
        n = max(self.n_districts, int(round(self.n_electors * scale)))
        return ElectionConfig.build(self.n_districts, n, self.theta)

    def stats(self):
        """Summary statistics; masked components for aggregate records."""
        if self.votes is not None:
            # recover the exact structure from the matrix itself: real
            # district capacities need not be uniform
            exact = ElectionConfig(
                n_districts=self.n_districts,
                n_electors=self.n_electors,
                vote_shares=self.theta,
                capacities=self.votes.counts.sum(axis=1),
                budgets=self.votes.counts.sum(axis=0),
            )
            return summarize(self.votes, exact)
        if self.seats is None:
            raise ValidationError(f"{self.name}: no vote matrix and no aggregate record")
        return SummaryStats.from_aggregate(
            self.seats, self.mwm, self.swm, self.n_districts
        )

    def features(self, scale=1.0):
        """Fixed-layout feature vector (NaN where unobserved)."""
        config = self.config(scale)
        return features_from_stats(
            self.stats(), self.theta, config.n_electors, config.n_districts
        )

    def to_dict(self):
        return {
            "name": self.name,
            "districts": self.n_districts,
            "electors": self.n_electors,
            "theta": self.theta.tolist(),
            "seats": None if self.seats is None else [int(s) for s in self.seats],
            "mwm": self.mwm,
            "swm": self.swm,
            "votes": None if self.votes is None else self.votes.counts.tolist(),
        }

    @classmethod
    def from_dict(cls, obj, name=None):
        theta = [float(v) for v in obj["theta"]]
        residual = 1.0 - sum(theta)
        if residual > SHARE_TOL:
            # shares of minor parties reported nowhere: absorb into "Others"
            theta = theta + [residual]
        elif residual < -SHARE_TOL:
            raise ValidationError("vote shares exceed 1")
        seats = obj.get("seats")
        if seats is not None:
            seats = [int(s) for s in seats]
            if len(seats) == len(theta) - 1:
                seats = seats + [0]
        votes = obj.get("votes")
        return cls(
            name=name or obj.get("name", "observed"),
            n_districts=int(obj["districts"]),
            n_electors=int(obj["electors"]),
            theta=theta,
            seats=seats,
            mwm=obj.get("mwm"),
            swm=obj.get("swm"),
            votes=None if votes is None else VoteMatrix(np.asarray(votes, dtype=np.int64)),
        )


def load_delhi(year):
    """Bundled Delhi aggregate record for one election year."""
    with resources.files("electorsim.data").joinpath("delhi.json").open() as fh:
        data = json.load(fh)
    year = str(year)
    if year not in data["elections"]:
        raise ValidationError(
            f"no bundled record for delhi:{year}; have {sorted(data['elections'])}"
        )
    rec = data["elections"][year]
    return ObservedElection.from_dict(
        {
            "districts": data["districts"],
            "electors": data["electors"],
            "theta": rec["theta"],
            "seats": rec["seats"],
            "mwm": rec["mwm"],
            "swm": rec["swm"],
        },
        name=f"delhi:{year}",
    )


def resolve_observed(ref):
    """Resolve `delhi:YYYY` to the bundled record, else load a JSON file."""
    if isinstance(ref, ObservedElection):
        return ref
    if ref.startswith("delhi:"):
        return load_delhi(ref.split(":", 1)[1])
    return ingest_observed(ref, "aggregate")


def ingest_observed(path, format_tag):
    """Load an observed election from disk.

    `aggregate`: JSON record with districts/electors/theta/seats/mwm/swm.
    `votes`: district-level CSV written by write_votes_csv; structure
    (capacities, budgets, shares) is recovered from the matrix itself.
    """
    if format_tag == "aggregate":
        try:
            with open(path) as fh:
                obj = json.load(fh)
        except OSError as exc:
            raise IOFailure(f"cannot read {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}: malformed JSON ({exc})") from exc
        return ObservedElection.from_dict(obj)
    if format_tag == "votes":
        votes = read_votes_csv(path)
        n_electors = int(votes.counts.sum())
        theta = votes.counts.sum(axis=0) / n_electors
        return ObservedElection(
            name=str(path),
            n_districts=votes.n_districts,
            n_electors=n_electors,
            theta=theta,
            votes=votes,
        )
    raise ValidationError(f"unknown ingest format {format_tag!r}, expected aggregate|votes")


def fit(observed, model, method="hybrid", settings=None, seed=0, scale=DEFAULT_SCALE,
        n_jobs=1):
    """Fit one model to an observed election; returns an AbcResult.

    hybrid: a logistic-bisection regressor trained at the observed
    configuration supplies the seed for the local refinement stage. The
    regressor sees only the feature columns the observation actually has.
    """
    observed = resolve_observed(observed)
    if method not in FIT_METHODS:
        raise ValidationError(f"unknown fit method {method!r}, expected {FIT_METHODS}")
    merged = dict(DEFAULT_FIT_SETTINGS[method])
    merged.update(settings or {})
    config = observed.config(scale)
    target = observed.stats()
    prior = PriorSpec.for_model(model, config.n_parties)
    if method == "rejection":
        result = abc_rejection(
            target, model, config, prior=prior,
            n_proposals=merged["n_proposals"],
            accept_quantile=merged["accept_quantile"],
            seed=seed, n_jobs=n_jobs,
        )
    elif method == "explore-exploit":
        result = abc_explore_exploit(
            target, model, config, prior=prior,
            n_explore=merged["n_explore"], n_seeds=merged["n_seeds"],
            n_exploit=merged["n_exploit"],
            accept_quantile=merged["accept_quantile"],
            seed=seed, n_jobs=n_jobs,
        )
    else:
        ranges = ConfigRanges(
            districts=(config.n_districts, config.n_districts),
            electors=(config.n_electors, config.n_electors),
            n_parties=config.n_parties,
            theta=config.vote_shares,
        )
        train = generate_training_set(
            model, ranges, prior=prior, n=merged["n_train"], seed=seed, n_jobs=n_jobs
        )
        seed_params = bisection_estimate(
            train, observed.features(scale), tol=merged["tol"]
        )
        result = hybrid_estimate(
            seed_params, target, model, config,
            n_exploit=merged["n_exploit"],
            accept_quantile=merged["accept_quantile"],
            seed=seed, prior=prior, n_jobs=n_jobs,
        )
    result.provenance.update(
        {
            "observed": observed.to_dict(),
            "model": model,
            "fit_method": method,
            "settings": merged,
            "scale": scale,
            "master_seed": int(seed),
        }
    )
    return result


def fit_from_provenance(prov, n_jobs=1):
    """Re-run a fit from the configuration embedded in its output."""
    observed = ObservedElection.from_dict(prov["observed"])
    return fit(
        observed,
        prov["model"],
        method=prov["fit_method"],
        settings=prov["settings"],
        seed=prov["master_seed"],
        scale=prov["scale"],
        n_jobs=n_jobs,
    )


def extrapolate(params, observed, replications=30, seed=0, scale=DEFAULT_SCALE,
                n_jobs=1):
    """Seat distribution under an election's vote shares at fixed parameters.

    Runs R seeded simulations with the new shares and reports mean +/- sample
    std of seats per party plus MWM/SWM means.
    """
    observed = resolve_observed(observed)
    if replications < 1:
        raise ValidationError("replications must be at least 1")
    config = observed.config(scale)
    sim_params = params.to_params(config.n_parties)

    def run(rep):
        votes = simulate(params.model, config, sim_params, task_seed_sequence(seed, 30, rep))
        return summarize(votes, config)

    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            stats = list(pool.map(run, range(replications)))
    else:
        stats = [run(rep) for rep in range(replications)]
    seats = np.vstack([s.seats for s in stats])
    ddof = 1 if replications > 1 else 0
    return {
        "observed": observed.name,
        "model": params.model,
        "params": params.to_list(),
        "theta": observed.theta.tolist(),
        "scale": scale,
        "replications": int(replications),
        "seed": int(seed),
        "seats_mean": seats.mean(axis=0).tolist(),
        "seats_std": seats.std(axis=0, ddof=ddof).tolist(),
        "mwm": float(np.mean([s.margin_mean for s in stats])),
        "swm": float(np.mean([s.margin_std for s in stats])),
        "actual_seats": None if observed.seats is None else [int(s) for s in observed.seats],
    }
