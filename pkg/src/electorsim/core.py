"""Election structure, integer apportionment, and plurality tallying."""

import csv
from dataclasses import dataclass, field

import numpy as np

SHARE_TOL = 1e-9


class ValidationError(ValueError):
    """Raised when inputs violate a structural contract (bad shares, sums, ...)."""


class IOFailure(OSError):
    """Raised when a data file cannot be read, parsed, or written."""


def apportion(shares, total):
    """Split an integer total across parties by largest remainder.

    Args:
        shares: nonnegative vote shares summing to 1 (within 1e-9).
        total: positive integer to apportion.

    Returns:
        Integer array of budgets summing exactly to `total`. Remainder ties
        are broken toward the lower index.
    """
    shares = np.asarray(shares, dtype=np.float64)
    if total <= 0:
        raise ValidationError(f"total must be positive, got {total}")
    if shares.ndim != 1 or shares.size == 0:
        raise ValidationError("shares must be a nonempty 1-D vector")
    if (shares < 0).any():
        raise ValidationError("shares must be nonnegative")
    if abs(shares.sum() - 1.0) > SHARE_TOL:
        raise ValidationError(f"shares sum to {shares.sum()!r}, expected 1")
    raw = shares * total
    base = np.floor(raw).astype(np.int64)
    deficit = int(total - base.sum())
    if deficit > 0:
        # stable sort keeps lower indices first among equal remainders
        order = np.argsort(-(raw - base), kind="stable")
        base[order[:deficit]] += 1
    return base


def uniform_capacities(total, n_districts):
    """Spread `total` electors over districts as evenly as possible.

    Each district gets floor(total / n_districts) or one more; the larger
    values go to the lowest district indices.
    """
    if n_districts <= 0:
        raise ValidationError(f"district count must be positive, got {n_districts}")
    if n_districts > total:
        raise ValidationError(
            f"more districts ({n_districts}) than electors ({total})"
        )
    base, rem = divmod(int(total), int(n_districts))
    caps = np.full(n_districts, base, dtype=np.int64)
    caps[:rem] += 1
    return caps


@dataclass(frozen=True)
class ElectionConfig:
    """Fixed structure of one election.

    Attributes:
        n_districts: number of districts (one seat each).
        n_electors: total elector count across all districts.
        vote_shares: per-party share of the national vote, sums to 1.
        capacities: electors per district, sums to n_electors.
        budgets: exact vote totals per party, sums to n_electors.
    """

    n_districts: int
    n_electors: int
    vote_shares: np.ndarray
    capacities: np.ndarray
    budgets: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "vote_shares", np.asarray(self.vote_shares, dtype=np.float64))
        object.__setattr__(self, "capacities", np.asarray(self.capacities, dtype=np.int64))
        object.__setattr__(self, "budgets", np.asarray(self.budgets, dtype=np.int64))
        if self.n_districts <= 0 or self.n_electors <= 0:
            raise ValidationError("district and elector counts must be positive")
        if self.n_parties < 2:
            raise ValidationError("need at least two parties")
        if (self.vote_shares < 0).any() or abs(self.vote_shares.sum() - 1.0) > SHARE_TOL:
            raise ValidationError("vote shares must be nonnegative and sum to 1")
        if self.capacities.shape != (self.n_districts,) or (self.capacities <= 0).any():
            raise ValidationError("capacities must be positive, one per district")
        if int(self.capacities.sum()) != self.n_electors:
            raise ValidationError("capacities must sum to the elector count")
        if self.budgets.shape != self.vote_shares.shape or (self.budgets < 0).any():
            raise ValidationError("budgets must be nonnegative, one per party")
        if int(self.budgets.sum()) != self.n_electors:
            raise ValidationError("budgets must sum to the elector count")

    @property
    def n_parties(self):
        return int(self.vote_shares.shape[0])

    @classmethod
    def build(cls, n_districts, n_electors, vote_shares):
        """Standard construction: uniform capacities, largest-remainder budgets."""
        vote_shares = np.asarray(vote_shares, dtype=np.float64)
        return cls(
            n_districts=int(n_districts),
            n_electors=int(n_electors),
            vote_shares=vote_shares,
            capacities=uniform_capacities(int(n_electors), int(n_districts)),
            budgets=apportion(vote_shares, int(n_electors)),
        )


@dataclass(frozen=True)
class VoteMatrix:
    """District-by-party vote counts."""

    counts: np.ndarray

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        if counts.ndim != 2:
            raise ValidationError("vote counts must be a 2-D matrix")
        if (counts < 0).any():
            raise ValidationError("vote counts must be nonnegative")
        object.__setattr__(self, "counts", counts)

    @property
    def n_districts(self):
        return int(self.counts.shape[0])

    @property
    def n_parties(self):
        return int(self.counts.shape[1])

    def validate(self, config):
        """Check exact row/column conservation against a config."""
        if self.counts.shape != (config.n_districts, config.n_parties):
            raise ValidationError(
                f"vote matrix shape {self.counts.shape} does not match config "
                f"({config.n_districts}, {config.n_parties})"
            )
        rows = self.counts.sum(axis=1)
        if (rows != config.capacities).any():
            bad = int(np.nonzero(rows != config.capacities)[0][0])
            raise ValidationError(
                f"district {bad} holds {int(rows[bad])} votes, capacity is "
                f"{int(config.capacities[bad])}"
            )
        cols = self.counts.sum(axis=0)
        if (cols != config.budgets).any():
            bad = int(np.nonzero(cols != config.budgets)[0][0])
            raise ValidationError(
                f"party {bad} polled {int(cols[bad])} votes, budget is "
                f"{int(config.budgets[bad])}"
            )
        return self


@dataclass(frozen=True)
class ElectionOutcome:
    """Per-district winners and margins plus per-party seat totals.

    Party indices are 0-based. `margins[s]` is the winner's fraction of
    district s's votes.
    """

    winners: np.ndarray
    margins: np.ndarray
    seats: np.ndarray = field(repr=False)


def tally(votes, config):
    """Declare a plurality winner per district and count seats.

    Ties go to the lowest party index. Raises ValidationError when the vote
    matrix does not conserve capacities/budgets (corrupted simulation output).
    """
    votes.validate(config)
    counts = votes.counts
    winners = np.argmax(counts, axis=1)
    margins = counts[np.arange(counts.shape[0]), winners] / config.capacities
    seats = np.bincount(winners, minlength=config.n_parties).astype(np.int64)
    return ElectionOutcome(winners=winners, margins=margins, seats=seats)


def write_votes_csv(votes, path):
    """Write a vote matrix as `district,party_1,...,party_K` rows."""
    counts = votes.counts
    try:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["district"] + [f"party_{k + 1}" for k in range(counts.shape[1])])
            for s in range(counts.shape[0]):
                writer.writerow([s + 1] + [int(v) for v in counts[s]])
    except OSError as exc:
        raise IOFailure(f"cannot write vote matrix to {path}: {exc}") from exc


def read_votes_csv(path):
    """Read a vote matrix written by `write_votes_csv`."""
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or header[0] != "district":
                raise ValidationError(f"{path}: expected a 'district,party_*' header")
            rows = [[int(v) for v in row[1:]] for row in reader if row]
    except OSError as exc:
        raise IOFailure(f"cannot read vote matrix from {path}: {exc}") from exc
    except ValueError as exc:
        raise ValidationError(f"{path}: non-integer vote count ({exc})") from exc
    if not rows:
        raise ValidationError(f"{path}: no district rows")
    return VoteMatrix(np.array(rows, dtype=np.int64))
