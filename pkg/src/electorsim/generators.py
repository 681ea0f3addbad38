"""Seeded samplers producing vote matrices under the three spatial models.

Models (two-letter tags used throughout the package):

* ``dpm`` -- district polarization: electors follow their district's running
  vote fraction with weight gamma, national shares otherwise.
* ``ecm`` -- elector communities: electors cluster into communities
  (restaurant-process style) and each community votes as a block.
* ``pcm`` -- party concentration: each party's supporters pile into districts
  where the party already has votes, with weight eta per party.

All samplers respect per-district capacities and per-party vote budgets
exactly and are deterministic functions of (config, params, seed).
"""

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .core import ValidationError, VoteMatrix

MODEL_TAGS = ("dpm", "ecm", "pcm")


def task_seed_sequence(master_seed, *key):
    """Deterministic per-task RNG root: SeedSequence(master, spawn_key=key).

    Independent tasks (proposal index, sweep cell, replication, ...) derive
    their generator state from the master seed and their own index, so results
    do not depend on scheduling or execution order.
    """
    return np.random.SeedSequence(entropy=int(master_seed), spawn_key=tuple(int(k) for k in key))


def _rng_from(seed):
    if isinstance(seed, np.random.SeedSequence):
        return np.random.default_rng(seed)
    return np.random.default_rng(np.random.SeedSequence(int(seed)))


def _per_district(values, n_districts, name):
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim == 0:
        arr = np.full(n_districts, float(arr))
    if arr.shape != (n_districts,):
        raise ValidationError(f"{name} must be scalar or one value per district")
    return arr


@dataclass(frozen=True)
class DpmParams:
    """Polarization weights, one per district (scalars broadcast)."""

    gamma: object

    def resolve(self, config):
        gamma = _per_district(self.gamma, config.n_districts, "gamma")
        if (gamma < 0).any() or (gamma >= 1).any():
            raise ValidationError("gamma entries must lie in [0, 1)")
        return gamma


@dataclass(frozen=True)
class EcmParams:
    """Community formation rate alpha (per district) and party-herding weight beta."""

    alpha: object
    beta: float

    def resolve(self, config):
        alpha = _per_district(self.alpha, config.n_districts, "alpha")
        if (alpha <= 0).any():
            raise ValidationError("alpha entries must be positive")
        if not 0 < self.beta < 1:
            raise ValidationError("beta must lie in (0, 1)")
        return alpha, float(self.beta)


@dataclass(frozen=True)
class PcmParams:
    """Concentration weights, one per party."""

    eta: object

    def resolve(self, config):
        eta = np.asarray(self.eta, dtype=np.float64)
        if eta.ndim == 0:
            eta = np.full(config.n_parties, float(eta))
        if eta.shape != (config.n_parties,):
            raise ValidationError("eta must be scalar or one value per party")
        if (eta < 0).any() or (eta >= 1).any():
            raise ValidationError("eta entries must lie in [0, 1)")
        return eta


def simulate_dpm(config, params, seed):
    """Simulate one election under district polarization."""
    gamma = params.resolve(config)
    rng = _rng_from(seed)
    uniforms = rng.random(config.n_electors)
    counts = _kernels.dpm_kernel(
        config.capacities, config.budgets, config.vote_shares, gamma, uniforms
    )
    return VoteMatrix(counts).validate(config)


def simulate_ecm(config, params, seed, return_largest_community=False):
    """Simulate one election under the community model.

    With return_largest_community=True also returns the largest community
    size per district (diagnostic for the rich-get-richer clustering).
    """
    alpha, beta = params.resolve(config)
    rng = _rng_from(seed)
    uniforms = rng.random(2 * config.n_electors + 2)
    largest = np.zeros(config.n_districts, dtype=np.int64)
    counts = _kernels.ecm_kernel(
        config.capacities,
        config.budgets,
        config.vote_shares,
        alpha ** _kernels.ECM_ALPHA_EXPONENT,
        beta,
        uniforms,
        largest,
    )
    votes = VoteMatrix(counts).validate(config)
    if return_largest_community:
        return votes, largest
    return votes


def simulate_pcm(config, params, seed):
    """Simulate one election under party concentration."""
    eta = params.resolve(config)
    rng = _rng_from(seed)
    uniforms = rng.random(2 * config.n_electors + 2)
    counts = _kernels.pcm_kernel(
        config.capacities, config.budgets, config.vote_shares, eta, uniforms
    )
    return VoteMatrix(counts).validate(config)


_SIMULATORS = {"dpm": simulate_dpm, "ecm": simulate_ecm, "pcm": simulate_pcm}


def simulate(model, config, params, seed):
    """Dispatch to the sampler for a model tag."""
    try:
        sim = _SIMULATORS[model]
    except KeyError:
        raise ValidationError(f"unknown model tag {model!r}, expected one of {MODEL_TAGS}")
    return sim(config, params, seed)


def params_from_values(model, values, n_parties=None):
    """Build a params object from a flat parameter vector.

    dpm: (gamma,); ecm: (alpha, beta); pcm: (eta_1, ..., eta_K).
    """
    values = np.asarray(values, dtype=np.float64).ravel()
    if model == "dpm":
        if values.size != 1:
            raise ValidationError("dpm takes a single gamma value")
        return DpmParams(gamma=float(values[0]))
    if model == "ecm":
        if values.size != 2:
            raise ValidationError("ecm takes (alpha, beta)")
        return EcmParams(alpha=float(values[0]), beta=float(values[1]))
    if model == "pcm":
        if n_parties is not None and values.size != n_parties:
            raise ValidationError(f"pcm takes one eta per party ({n_parties})")
        return PcmParams(eta=values.copy())
    raise ValidationError(f"unknown model tag {model!r}, expected one of {MODEL_TAGS}")
