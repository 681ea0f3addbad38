"""Likelihood-free parameter estimation by rejection sampling.

Two search strategies over model parameters:

* plain rejection: draw from the prior, simulate once per draw, keep the
  closest fraction by summary-statistic distance;
* explore-exploit: a short prior sweep picks seed parameters, then local
  Gaussian proposals around the seeds refine the search.

Point estimates: the per-dimension histogram mode of the accepted sample
(MAP) and the single accepted draw with the smallest distance (OPT).

Determinism: every stochastic ingredient (parameter draws, per-proposal
simulation seeds, Gaussian proposals) derives from SeedSequence(master,
spawn_key=...), so parallel and serial execution produce identical results.
"""

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .core import ValidationError
from .generators import MODEL_TAGS, params_from_values, simulate, task_seed_sequence
from .summaries import distance, estimate_scale, summarize

GAMMA_RANGE = (0.01, 0.999)
ALPHA_RANGE = (0.1, 50.0)
BETA_RANGE = (0.01, 0.999)
ETA_RANGE = (0.01, 0.999)

DEFAULT_BINS = 20


@dataclass(frozen=True)
class PriorSpec:
    """Independent uniform ranges per parameter dimension.

    Dimensions flagged in `log10` are sampled (and locally perturbed)
    uniformly in log10 space; bounds stay in natural units.
    """

    model: str
    lows: np.ndarray
    highs: np.ndarray
    log10: np.ndarray
    names: tuple

    def __post_init__(self):
        object.__setattr__(self, "lows", np.asarray(self.lows, dtype=np.float64))
        object.__setattr__(self, "highs", np.asarray(self.highs, dtype=np.float64))
        object.__setattr__(self, "log10", np.asarray(self.log10, dtype=bool))
        if (self.lows >= self.highs).any():
            raise ValidationError("each prior range needs lower < upper")
        if self.log10.any() and (self.lows[self.log10] <= 0).any():
            raise ValidationError("log-scaled dimensions need positive bounds")

    @property
    def dim(self):
        return int(self.lows.shape[0])

    @classmethod
    def for_model(cls, model, n_parties=2):
        if model == "dpm":
            return cls("dpm", [GAMMA_RANGE[0]], [GAMMA_RANGE[1]], [False], ("gamma",))
        if model == "ecm":
            return cls(
                "ecm",
                [ALPHA_RANGE[0], BETA_RANGE[0]],
                [ALPHA_RANGE[1], BETA_RANGE[1]],
                [True, False],
                ("alpha", "beta"),
            )
        if model == "pcm":
            return cls(
                "pcm",
                [ETA_RANGE[0]] * n_parties,
                [ETA_RANGE[1]] * n_parties,
                [False] * n_parties,
                tuple(f"eta_{k + 1}" for k in range(n_parties)),
            )
        raise ValidationError(f"unknown model tag {model!r}, expected one of {MODEL_TAGS}")

    def to_search(self, values):
        values = np.asarray(values, dtype=np.float64)
        return np.where(self.log10, np.log10(np.maximum(values, 1e-300)), values)

    def from_search(self, z):
        z = np.asarray(z, dtype=np.float64)
        return np.where(self.log10, 10.0 ** z, z)

    def search_bounds(self):
        return self.to_search(self.lows), self.to_search(self.highs)

    def sample(self, rng, n):
        """n parameter vectors drawn uniformly (in search space) from the prior."""
        lo, hi = self.search_bounds()
        z = rng.random((n, self.dim)) * (hi - lo) + lo
        return self.from_search(z)

    def contains(self, values):
        values = np.asarray(values, dtype=np.float64)
        return bool((values >= self.lows).all() and (values <= self.highs).all())

    def clip(self, values):
        return np.clip(np.asarray(values, dtype=np.float64), self.lows, self.highs)

    def default_proposal_cov(self):
        """Diagonal covariance with std = 10% of each prior range (search space)."""
        lo, hi = self.search_bounds()
        return np.diag((0.1 * (hi - lo)) ** 2)

    def to_dict(self):
        return {
            "model": self.model,
            "lows": self.lows.tolist(),
            "highs": self.highs.tolist(),
            "log10": self.log10.tolist(),
            "names": list(self.names),
        }


@dataclass(frozen=True)
class ParamVector:
    """Parameter values for one model (natural units)."""

    model: str
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=np.float64).ravel())

    def to_params(self, n_parties=None):
        return params_from_values(self.model, self.values, n_parties)

    def to_list(self):
        return [float(v) for v in self.values]


@dataclass
class AbcResult:
    """Accepted parameter draws plus derived posterior and point estimates."""

    model: str
    accepted: list
    n_proposed: int
    hist_edges: list
    hist_masses: list
    psi_map: ParamVector
    psi_opt: ParamVector
    provenance: dict = field(default_factory=dict)

    @property
    def min_distance(self):
        return min(d for _, d in self.accepted)

    def to_dict(self):
        return {
            "model": self.model,
            "accepted": [
                {"values": p.to_list(), "distance": float(d)} for p, d in self.accepted
            ],
            "n_proposed": int(self.n_proposed),
            "posterior_hist": [
                {"edges": e.tolist(), "masses": m.tolist()}
                for e, m in zip(self.hist_edges, self.hist_masses)
            ],
            "psi_map": self.psi_map.to_list(),
            "psi_opt": self.psi_opt.to_list(),
            "provenance": self.provenance,
        }

    def to_json(self, indent=None):
        return json.dumps(self.to_dict(), sort_keys=True, indent=indent)

    @classmethod
    def from_dict(cls, obj):
        return cls(
            model=obj["model"],
            accepted=[
                (ParamVector(obj["model"], a["values"]), float(a["distance"]))
                for a in obj["accepted"]
            ],
            n_proposed=int(obj["n_proposed"]),
            hist_edges=[np.asarray(h["edges"]) for h in obj["posterior_hist"]],
            hist_masses=[np.asarray(h["masses"]) for h in obj["posterior_hist"]],
            psi_map=ParamVector(obj["model"], obj["psi_map"]),
            psi_opt=ParamVector(obj["model"], obj["psi_opt"]),
            provenance=obj.get("provenance", {}),
        )

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def _score_pool(model, config, observed, param_rows, seed, phase_key, scale=None,
                sims_per_proposal=1, n_jobs=1):
    """Simulate every parameter row once (keyed by index) and score distances.

    Returns (stats_list, distances, scale). The scale, when not supplied, is
    the per-component std of the first min(100, n) simulated statistics.
    """

    def run(i):
        seq = task_seed_sequence(seed, phase_key, i)
        params = params_from_values(model, param_rows[i], config.n_parties)
        reps = []
        for r in range(sims_per_proposal):
            rep_seq = seq if sims_per_proposal == 1 else task_seed_sequence(seed, phase_key, i, r)
            reps.append(summarize(simulate(model, config, params, rep_seq), config))
        return reps

    n = len(param_rows)
    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            all_reps = list(pool.map(run, range(n)))
    else:
        all_reps = [run(i) for i in range(n)]
    first_stats = [reps[0] for reps in all_reps]
    if scale is None:
        scale = estimate_scale(first_stats[: min(100, n)])
    dists = np.array(
        [np.mean([distance(st, observed, scale) for st in reps]) for reps in all_reps]
    )
    return first_stats, dists, scale


def _accept(param_rows, dists, accept_quantile, offset=0):
    """Indices of the accepted fraction, smallest distances first.

    Stable ordering (distance, index) keeps acceptance reproducible under ties.
    """
    n = len(param_rows)
    n_accept = max(1, int(round(accept_quantile * n)))
    order = np.lexsort((np.arange(n) + offset, dists))
    return order[:n_accept]


def map_estimate(accepted, prior, bins=DEFAULT_BINS):
    """Per-dimension histogram mode of accepted parameters.

    Bins are equal width over the prior range (in search space for log-scaled
    dimensions); modal ties resolve to the lower bin. Returns bin centers.
    """
    if not accepted:
        raise ValidationError("cannot take a posterior mode of an empty accepted set")
    if bins < 2:
        raise ValidationError("need at least 2 histogram bins")
    rows = np.vstack([p.values for p in accepted])
    z = np.vstack([prior.to_search(r) for r in rows])
    lo, hi = prior.search_bounds()
    centers = np.empty(prior.dim)
    for d in range(prior.dim):
        masses, edges = np.histogram(z[:, d], bins=bins, range=(lo[d], hi[d]))
        b = int(np.argmax(masses))
        centers[d] = 0.5 * (edges[b] + edges[b + 1])
    return ParamVector(prior.model, prior.from_search(centers))


def _histograms(accepted, prior, bins):
    rows = np.vstack([p.values for p, _ in accepted])
    z = np.vstack([prior.to_search(r) for r in rows])
    lo, hi = prior.search_bounds()
    all_edges, all_masses = [], []
    for d in range(prior.dim):
        masses, edges = np.histogram(z[:, d], bins=bins, range=(lo[d], hi[d]))
        total = masses.sum()
        if prior.log10[d]:
            edges = 10.0 ** edges
        all_edges.append(edges)
        all_masses.append(masses / total if total else masses.astype(float))
    return all_edges, all_masses


def _assemble(model, pool_params, pool_dists, accepted_idx, n_proposed, prior, bins, provenance):
    accepted = [
        (ParamVector(model, pool_params[i]), float(pool_dists[i])) for i in accepted_idx
    ]
    edges, masses = _histograms(accepted, prior, bins)
    psi_map = map_estimate([p for p, _ in accepted], prior, bins)
    best = min(range(len(accepted)), key=lambda i: accepted[i][1])
    return AbcResult(
        model=model,
        accepted=accepted,
        n_proposed=n_proposed,
        hist_edges=edges,
        hist_masses=masses,
        psi_map=psi_map,
        psi_opt=accepted[best][0],
        provenance=provenance,
    )


def abc_rejection(observed, model, config, prior=None, n_proposals=1000,
                  accept_quantile=0.05, seed=0, bins=DEFAULT_BINS,
                  sims_per_proposal=1, n_jobs=1):
    """Plain rejection sampling against an observed summary statistic."""
    if n_proposals < 50:
        raise ValidationError(f"need at least 50 proposals, got {n_proposals}")
    if not 0 < accept_quantile <= 1:
        raise ValidationError("accept_quantile must lie in (0, 1]")
    prior = prior or PriorSpec.for_model(model, config.n_parties)
    rng = np.random.default_rng(task_seed_sequence(seed, 0))
    params = prior.sample(rng, n_proposals)
    _, dists, _ = _score_pool(
        model, config, observed, params, seed, 1,
        sims_per_proposal=sims_per_proposal, n_jobs=n_jobs,
    )
    idx = _accept(params, dists, accept_quantile)
    provenance = {
        "method": "rejection",
        "prior": prior.to_dict(),
        "n_proposals": int(n_proposals),
        "accept_quantile": float(accept_quantile),
        "seed": int(seed),
        "bins": int(bins),
        "sims_per_proposal": int(sims_per_proposal),
    }
    return _assemble(model, params, dists, idx, n_proposals, prior, bins, provenance)


def _mixture_draws(prior, seeds_z, cov, n, rng):
    """Draw n points from an equal mixture of Gaussians at seeds_z, kept
    inside the prior box by redrawing (clipped after 1000 attempts)."""
    try:
        chol = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError as exc:
        raise ValidationError("proposal covariance must be positive definite") from exc
    lo, hi = prior.search_bounds()
    out = np.empty((n, prior.dim))
    for i in range(n):
        center = seeds_z[rng.integers(len(seeds_z))]
        for _attempt in range(1000):
            z = center + chol @ rng.standard_normal(prior.dim)
            if ((z >= lo) & (z <= hi)).all():
                break
        else:
            z = np.clip(z, lo, hi)
        out[i] = z
    return out


def exploit_phase(observed, model, config, seeds_values, seed, prior=None,
                  proposal_cov=None, n_exploit=300, accept_quantile=0.05,
                  bins=DEFAULT_BINS, carry=None, n_proposed_extra=0,
                  sims_per_proposal=1, n_jobs=1, provenance=None):
    """Gaussian local search around seed parameters.

    `carry` is an optional (params_matrix, distances) pool of already scored
    draws (the explore phase); the final quantile acceptance runs over the
    union so the best evaluated sample is never discarded.
    """
    prior = prior or PriorSpec.for_model(model, config.n_parties)
    cov = prior.default_proposal_cov() if proposal_cov is None else np.asarray(proposal_cov, float)
    seeds_z = np.vstack([prior.to_search(v) for v in seeds_values])
    rng = np.random.default_rng(task_seed_sequence(seed, 2))
    params = prior.from_search(_mixture_draws(prior, seeds_z, cov, n_exploit, rng))
    _, dists, scale = _score_pool(
        model, config, observed, params, seed, 3,
        sims_per_proposal=sims_per_proposal, n_jobs=n_jobs,
    )
    if carry is not None:
        carry_params, carry_dists = carry
        pool_params = np.vstack([params, carry_params])
        pool_dists = np.concatenate([dists, carry_dists])
    else:
        pool_params, pool_dists = params, dists
    idx = _accept(pool_params, pool_dists, accept_quantile)
    n_proposed = n_exploit + n_proposed_extra
    provenance = dict(provenance or {})
    provenance.setdefault("method", "exploit")
    provenance.update(
        {
            "prior": prior.to_dict(),
            "proposal_cov": cov.tolist(),
            "n_exploit": int(n_exploit),
            "accept_quantile": float(accept_quantile),
            "seed": int(seed),
            "bins": int(bins),
            "seeds": [list(map(float, v)) for v in seeds_values],
        }
    )
    return _assemble(model, pool_params, pool_dists, idx, n_proposed, prior, bins, provenance)


def abc_explore_exploit(observed, model, config, prior=None, n_explore=200,
                        n_seeds=5, proposal_cov=None, n_exploit=300,
                        accept_quantile=0.05, seed=0, bins=DEFAULT_BINS,
                        sims_per_proposal=1, n_jobs=1):
    """Two-phase search: prior sweep for seeds, Gaussian refinement around them.

    Acceptance applies to the union of both phases' scored draws, so the
    result never loses ground to the plain prior sweep.
    """
    if n_seeds > n_explore:
        raise ValidationError("cannot select more seeds than explore proposals")
    prior = prior or PriorSpec.for_model(model, config.n_parties)
    rng = np.random.default_rng(task_seed_sequence(seed, 0))
    explore_params = prior.sample(rng, n_explore)
    _, explore_dists, _ = _score_pool(
        model, config, observed, explore_params, seed, 1,
        sims_per_proposal=sims_per_proposal, n_jobs=n_jobs,
    )
    order = np.lexsort((np.arange(n_explore), explore_dists))
    seeds_values = explore_params[order[:n_seeds]]
    return exploit_phase(
        observed, model, config, seeds_values, seed,
        prior=prior, proposal_cov=proposal_cov, n_exploit=n_exploit,
        accept_quantile=accept_quantile, bins=bins,
        carry=(explore_params, explore_dists), n_proposed_extra=n_explore,
        sims_per_proposal=sims_per_proposal, n_jobs=n_jobs,
        provenance={"method": "explore-exploit", "n_explore": int(n_explore),
                    "n_seeds": int(n_seeds)},
    )
