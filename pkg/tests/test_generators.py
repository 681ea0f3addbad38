import numpy as np
import pytest

from electorsim.core import ElectionConfig, ValidationError, tally
from electorsim.generators import (
    DpmParams,
    EcmParams,
    PcmParams,
    params_from_values,
    simulate,
    simulate_dpm,
    simulate_ecm,
    simulate_pcm,
    task_seed_sequence,
)
from electorsim.summaries import summarize


def random_config(rng):
    n_districts = int(rng.integers(1, 12))
    n_electors = int(rng.integers(n_districts, 3000))
    n_parties = int(rng.integers(2, 6))
    theta = rng.dirichlet(np.ones(n_parties))
    return ElectionConfig.build(n_districts, n_electors, theta)


def random_params(model, rng, n_parties):
    if model == "dpm":
        return DpmParams(gamma=float(rng.uniform(0.0, 0.999)))
    if model == "ecm":
        return EcmParams(alpha=float(rng.uniform(0.1, 40.0)), beta=float(rng.uniform(0.01, 0.99)))
    return PcmParams(eta=rng.uniform(0.0, 0.999, size=n_parties))


class TestConservation:
    @pytest.mark.parametrize("model", ["dpm", "ecm", "pcm"])
    def test_row_and_column_sums_exact(self, model):
        rng = np.random.default_rng(hash(model) % 2**32)
        for trial in range(60):
            config = random_config(rng)
            params = random_params(model, rng, config.n_parties)
            votes = simulate(model, config, params, int(rng.integers(2**40)))
            assert (votes.counts.sum(axis=1) == config.capacities).all()
            assert (votes.counts.sum(axis=0) == config.budgets).all()


class TestDeterminism:
    @pytest.mark.parametrize("model", ["dpm", "ecm", "pcm"])
    def test_same_seed_bitwise_identical(self, model):
        config = ElectionConfig.build(20, 5000, [0.5, 0.3, 0.2])
        params = {"dpm": DpmParams(0.8), "ecm": EcmParams(2.0, 0.5), "pcm": PcmParams([0.6, 0.9, 0.3])}[model]
        a = simulate(model, config, params, 123)
        b = simulate(model, config, params, 123)
        c = simulate(model, config, params, 124)
        assert (a.counts == b.counts).all()
        assert (a.counts != c.counts).any()

    def test_seed_sequence_input_accepted(self):
        config = ElectionConfig.build(5, 500, [0.6, 0.4])
        a = simulate_dpm(config, DpmParams(0.5), task_seed_sequence(9, 1, 2))
        b = simulate_dpm(config, DpmParams(0.5), task_seed_sequence(9, 1, 2))
        assert (a.counts == b.counts).all()


class TestForcedOutcomes:
    def test_single_district_holds_all_budgets(self):
        config = ElectionConfig.build(1, 10, [0.7, 0.3])
        for gamma in (0.0, 0.5, 0.99):
            votes = simulate_dpm(config, DpmParams(gamma), seed=4)
            assert votes.counts.tolist() == [[7, 3]]

    def test_single_elector_ecm(self):
        config = ElectionConfig.build(1, 1, [1.0, 0.0])
        votes = simulate_ecm(config, EcmParams(3.0, 0.5), seed=0)
        assert votes.counts.tolist() == [[1, 0]]

    def test_zero_share_party_with_forced_budget(self):
        # budgets disagree with shares: the fallback must still place everyone
        config = ElectionConfig(
            n_districts=2, n_electors=10, vote_shares=[1.0, 0.0],
            capacities=[5, 5], budgets=[5, 5],
        )
        votes = simulate_dpm(config, DpmParams(0.9), seed=1)
        assert (votes.counts.sum(axis=0) == [5, 5]).all()


class TestDpmBehavior:
    def test_low_polarization_sweep(self):
        # near-uniform districts: the most popular party takes every seat
        config = ElectionConfig.build(100, 100_000, [0.6, 0.4])
        for seed in (0, 1, 2):
            votes = simulate_dpm(config, DpmParams(0.25), seed=seed)
            assert tally(votes, config).seats[0] == 100
            assert summarize(votes, config).std_frac[0] < 0.04

    def test_vote_spread_rises_with_polarization(self):
        config = ElectionConfig.build(50, 20_000, [0.6, 0.4])
        grid = [0.25, 0.5, 0.75, 0.9, 0.99]
        means = []
        for gamma in grid:
            spreads = [
                summarize(simulate_dpm(config, DpmParams(gamma), seed=s), config).std_frac[0]
                for s in range(100)
            ]
            means.append(np.mean(spreads))
        assert all(a <= b for a, b in zip(means, means[1:]))


class TestEcmBehavior:
    def test_large_communities_at_low_alpha(self):
        # rich-get-richer: one big block per district most of the time
        config = ElectionConfig.build(4, 40_000, [0.6, 0.4])
        hits = 0
        for seed in range(15):
            _, largest = simulate_ecm(
                config, EcmParams(1.0, 0.5), seed=seed, return_largest_community=True
            )
            hits += largest[0] > 0.1 * config.capacities[0]
        assert hits > 7

    def test_more_communities_at_high_alpha(self):
        config = ElectionConfig.build(4, 8_000, [0.6, 0.4])
        _, big_low = simulate_ecm(config, EcmParams(1.0, 0.5), 3, return_largest_community=True)
        _, big_high = simulate_ecm(config, EcmParams(30.0, 0.5), 3, return_largest_community=True)
        assert big_high.mean() < big_low.mean()


class TestPcmBehavior:
    def test_zero_concentration_matches_capacity_multinomial_oracle(self):
        # at eta=0 the sequential process must behave like blindly dropping
        # each party's budget into district slots; oracle: shuffle the global
        # slot pool and cut it into party blocks
        config = ElectionConfig.build(10, 100_000, [0.6, 0.4])
        votes = simulate_pcm(config, PcmParams([0.0, 0.0]), seed=5)
        fractions = votes.counts / config.capacities[:, None]
        assert np.abs(fractions - config.vote_shares).max() < 0.02

        rng = np.random.default_rng(5)
        slots = np.repeat(np.arange(10), config.capacities)
        rng.shuffle(slots)
        oracle = np.zeros((10, 2), dtype=np.int64)
        cut = 0
        for k, budget in enumerate(config.budgets):
            oracle[:, k] = np.bincount(slots[cut:cut + budget], minlength=10)
            cut += budget
        oracle_frac = oracle / config.capacities[:, None]
        assert np.abs(oracle_frac - config.vote_shares).max() < 0.02

    def test_high_concentration_creates_strongholds(self):
        config = ElectionConfig.build(50, 50_000, [0.7, 0.3])
        votes = simulate_pcm(config, PcmParams([0.99, 0.99]), seed=2)
        stats = summarize(votes, config)
        seats = tally(votes, config).seats
        assert seats[1] > 0
        assert stats.std_frac[0] > 0.10


class TestSymmetry:
    @pytest.mark.parametrize(
        "model,params",
        [
            ("dpm", DpmParams(0.9)),
            ("ecm", EcmParams(5.0, 0.5)),
            ("pcm", PcmParams([0.8, 0.8])),
        ],
    )
    def test_even_shares_give_even_seats(self, model, params):
        config = ElectionConfig.build(100, 20_000, [0.5, 0.5])
        seats = [
            tally(simulate(model, config, params, seed), config).seats[0]
            for seed in range(100)
        ]
        assert abs(np.mean(seats) - 50) < 5


class TestParamValidation:
    def test_gamma_range(self):
        config = ElectionConfig.build(2, 100, [0.5, 0.5])
        with pytest.raises(ValidationError):
            simulate_dpm(config, DpmParams(1.0), seed=0)

    def test_alpha_positive(self):
        config = ElectionConfig.build(2, 100, [0.5, 0.5])
        with pytest.raises(ValidationError):
            simulate_ecm(config, EcmParams(0.0, 0.5), seed=0)

    def test_beta_range(self):
        config = ElectionConfig.build(2, 100, [0.5, 0.5])
        with pytest.raises(ValidationError):
            simulate_ecm(config, EcmParams(1.0, 1.0), seed=0)

    def test_eta_shape(self):
        config = ElectionConfig.build(2, 100, [0.5, 0.5])
        with pytest.raises(ValidationError):
            simulate_pcm(config, PcmParams([0.5, 0.5, 0.5]), seed=0)

    def test_gamma_broadcast_and_per_district(self):
        config = ElectionConfig.build(3, 300, [0.5, 0.5])
        a = simulate_dpm(config, DpmParams(0.5), seed=1)
        b = simulate_dpm(config, DpmParams([0.5, 0.5, 0.5]), seed=1)
        assert (a.counts == b.counts).all()

    def test_params_from_values_dispatch(self):
        assert isinstance(params_from_values("dpm", [0.5]), DpmParams)
        assert isinstance(params_from_values("ecm", [1.0, 0.5]), EcmParams)
        assert isinstance(params_from_values("pcm", [0.5, 0.5]), PcmParams)
        with pytest.raises(ValidationError):
            params_from_values("dpm", [0.5, 0.5])
        with pytest.raises(ValidationError):
            params_from_values("xyz", [0.5])
