import numpy as np
import pytest

from electorsim.core import (
    ElectionConfig,
    ValidationError,
    VoteMatrix,
    apportion,
    read_votes_csv,
    tally,
    uniform_capacities,
    write_votes_csv,
)


class TestApportion:
    def test_even_split(self):
        assert apportion([0.5, 0.5], 10).tolist() == [5, 5]

    def test_degenerate_simplex(self):
        assert apportion([1.0, 0.0], 7).tolist() == [7, 0]

    def test_largest_remainder_hand_case(self):
        # 2020-style shares with a residual fourth party; exact by hand
        assert apportion([0.54, 0.39, 0.05, 0.02], 100).tolist() == [54, 39, 5, 2]

    def test_remainder_tie_goes_to_lower_index(self):
        assert apportion([0.25, 0.25, 0.25, 0.25], 2).tolist() == [1, 1, 0, 0]

    def test_sum_is_identity_on_total(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            k = int(rng.integers(2, 8))
            shares = rng.dirichlet(np.ones(k))
            total = int(rng.integers(1, 10_000))
            assert int(apportion(shares, total).sum()) == total

    def test_rejects_negative_share(self):
        with pytest.raises(ValidationError):
            apportion([1.1, -0.1], 10)

    def test_rejects_nonpositive_total(self):
        with pytest.raises(ValidationError):
            apportion([0.5, 0.5], 0)

    def test_rejects_bad_sum(self):
        with pytest.raises(ValidationError):
            apportion([0.5, 0.4], 10)


class TestUniformCapacities:
    def test_even(self):
        assert uniform_capacities(10, 5).tolist() == [2, 2, 2, 2, 2]

    def test_remainder_to_lowest_indices(self):
        assert uniform_capacities(7, 3).tolist() == [3, 2, 2]

    def test_large_even_case(self):
        caps = uniform_capacities(1_000_000, 100)
        assert (caps == 10_000).all()

    def test_rejects_more_districts_than_electors(self):
        with pytest.raises(ValidationError):
            uniform_capacities(3, 4)


class TestTally:
    def test_hand_tally(self):
        config = ElectionConfig(
            n_districts=2, n_electors=200, vote_shares=[0.45, 0.55],
            capacities=[100, 100], budgets=[90, 110],
        )
        outcome = tally(VoteMatrix([[60, 40], [30, 70]]), config)
        assert outcome.winners.tolist() == [0, 1]
        assert outcome.margins.tolist() == [0.60, 0.70]
        assert outcome.seats.tolist() == [1, 1]

    def test_tie_goes_to_lowest_party_index(self):
        config = ElectionConfig(
            n_districts=1, n_electors=100, vote_shares=[0.5, 0.5],
            capacities=[100], budgets=[50, 50],
        )
        outcome = tally(VoteMatrix([[50, 50]]), config)
        assert outcome.winners.tolist() == [0]
        assert outcome.margins.tolist() == [0.50]
        assert outcome.seats.tolist() == [1, 0]

    def test_three_district_tally(self):
        config = ElectionConfig(
            n_districts=3, n_electors=30, vote_shares=[16 / 30, 14 / 30],
            capacities=[10, 10, 10], budgets=[16, 14],
        )
        outcome = tally(VoteMatrix([[10, 0], [0, 10], [6, 4]]), config)
        assert outcome.seats.tolist() == [2, 1]

    def test_rejects_row_sum_violation(self):
        config = ElectionConfig.build(2, 200, [0.5, 0.5])
        with pytest.raises(ValidationError):
            tally(VoteMatrix([[60, 41], [30, 70]]), config)

    def test_rejects_column_sum_violation(self):
        config = ElectionConfig.build(2, 200, [0.5, 0.5])
        with pytest.raises(ValidationError):
            tally(VoteMatrix([[60, 40], [50, 50]]), config)

    def test_party_permutation_equivariance(self):
        rng = np.random.default_rng(11)
        caps = np.full(6, 50)
        for _ in range(25):
            counts = rng.multinomial(50, [0.4, 0.35, 0.25], size=6)
            # avoid ties so the permutation cannot change any winner
            if (np.sort(counts, axis=1)[:, -1] == np.sort(counts, axis=1)[:, -2]).any():
                continue
            budgets = counts.sum(axis=0)
            config = ElectionConfig(
                n_districts=6, n_electors=300, vote_shares=budgets / 300,
                capacities=caps, budgets=budgets,
            )
            perm = rng.permutation(3)
            config_p = ElectionConfig(
                n_districts=6, n_electors=300, vote_shares=budgets[perm] / 300,
                capacities=caps, budgets=budgets[perm],
            )
            seats = tally(VoteMatrix(counts), config).seats
            seats_p = tally(VoteMatrix(counts[:, perm]), config_p).seats
            assert seats_p.tolist() == seats[perm].tolist()

    def test_theta_mirror_gives_sweep(self):
        # every district mirroring the national shares: most popular party
        # takes every seat
        config = ElectionConfig.build(10, 1000, [0.6, 0.4])
        counts = np.tile([60, 40], (10, 1))
        outcome = tally(VoteMatrix(counts), config)
        assert outcome.seats.tolist() == [10, 0]


class TestConfigValidation:
    def test_build_roundtrip(self):
        config = ElectionConfig.build(3, 100, [0.6, 0.4])
        assert config.capacities.tolist() == [34, 33, 33]
        assert config.budgets.tolist() == [60, 40]
        assert config.n_parties == 2

    def test_rejects_capacity_sum_mismatch(self):
        with pytest.raises(ValidationError):
            ElectionConfig(
                n_districts=2, n_electors=10, vote_shares=[0.5, 0.5],
                capacities=[5, 4], budgets=[5, 5],
            )

    def test_rejects_budget_sum_mismatch(self):
        with pytest.raises(ValidationError):
            ElectionConfig(
                n_districts=2, n_electors=10, vote_shares=[0.5, 0.5],
                capacities=[5, 5], budgets=[6, 5],
            )

    def test_rejects_single_party(self):
        with pytest.raises(ValidationError):
            ElectionConfig(
                n_districts=1, n_electors=5, vote_shares=[1.0],
                capacities=[5], budgets=[5],
            )


def test_votes_csv_round_trip(tmp_path):
    rng = np.random.default_rng(3)
    counts = rng.multinomial(40, [0.5, 0.3, 0.2], size=5)
    votes = VoteMatrix(counts)
    path = tmp_path / "votes.csv"
    write_votes_csv(votes, path)
    header = path.read_text().splitlines()[0]
    assert header == "district,party_1,party_2,party_3"
    back = read_votes_csv(path)
    assert (back.counts == votes.counts).all()
