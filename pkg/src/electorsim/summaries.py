"""Summary statistics of an election result and the distance used by ABC.

The statistic vector has a fixed component order (dimension 3K + S + 2):

1. seats per party (K)
2. mean vote fraction per party across districts (K)
3. std of vote fraction per party across districts (K)
4. per-district std of party vote fractions, sorted descending (S)
5. mean and std of the winning margin (2)

Partially observed elections (only seats and margin moments reported) carry a
boolean mask; masked components are stored as NaN and never compared.
"""

import json
import warnings
from dataclasses import dataclass

import numpy as np

from .core import ValidationError, tally

SCALE_FLOOR = 1e-6


@dataclass(frozen=True)
class SummaryStats:
    """Summary-statistic vector with an availability mask."""

    seats: np.ndarray
    mean_frac: np.ndarray
    std_frac: np.ndarray
    district_spread: np.ndarray
    margin_mean: float
    margin_std: float
    mask: np.ndarray

    def __post_init__(self):
        for name in ("seats", "mean_frac", "std_frac", "district_spread"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=np.float64))
        object.__setattr__(self, "mask", np.asarray(self.mask, dtype=bool))
        if self.mask.shape != (self.dimension,):
            raise ValidationError(
                f"mask length {self.mask.shape} does not match statistic "
                f"dimension {self.dimension}"
            )

    @property
    def n_parties(self):
        return int(self.seats.shape[0])

    @property
    def n_districts(self):
        return int(self.district_spread.shape[0])

    @property
    def dimension(self):
        return 3 * self.n_parties + self.n_districts + 2

    def vector(self):
        """Flat statistic vector in the fixed component order."""
        return np.concatenate(
            [
                self.seats,
                self.mean_frac,
                self.std_frac,
                self.district_spread,
                [self.margin_mean, self.margin_std],
            ]
        )

    def to_dict(self):
        def _arr(a):
            return [None if not np.isfinite(v) else float(v) for v in np.asarray(a, dtype=float)]

        return {
            "seats": _arr(self.seats),
            "mean_frac": _arr(self.mean_frac),
            "std_frac": _arr(self.std_frac),
            "district_spread": _arr(self.district_spread),
            "margin_mean": None if not np.isfinite(self.margin_mean) else float(self.margin_mean),
            "margin_std": None if not np.isfinite(self.margin_std) else float(self.margin_std),
            "mask": [bool(m) for m in self.mask],
        }

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, obj):
        def _arr(a):
            return np.array([np.nan if v is None else float(v) for v in a])

        return cls(
            seats=_arr(obj["seats"]),
            mean_frac=_arr(obj["mean_frac"]),
            std_frac=_arr(obj["std_frac"]),
            district_spread=_arr(obj["district_spread"]),
            margin_mean=np.nan if obj["margin_mean"] is None else float(obj["margin_mean"]),
            margin_std=np.nan if obj["margin_std"] is None else float(obj["margin_std"]),
            mask=np.asarray(obj["mask"], dtype=bool),
        )

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))

    @classmethod
    def from_aggregate(cls, seats, margin_mean, margin_std, n_districts):
        """Masked statistics for an election reported only as seat totals
        plus mean/std winning margin."""
        seats = np.asarray(seats, dtype=np.float64)
        n_parties = seats.shape[0]
        mask = np.zeros(3 * n_parties + n_districts + 2, dtype=bool)
        mask[:n_parties] = True
        mask[-2] = margin_mean is not None
        mask[-1] = margin_std is not None
        return cls(
            seats=seats,
            mean_frac=np.full(n_parties, np.nan),
            std_frac=np.full(n_parties, np.nan),
            district_spread=np.full(n_districts, np.nan),
            margin_mean=np.nan if margin_mean is None else float(margin_mean),
            margin_std=np.nan if margin_std is None else float(margin_std),
            mask=mask,
        )


def summarize(votes, config):
    """Compute the full summary-statistic vector of a vote matrix."""
    outcome = tally(votes, config)
    fractions = votes.counts / config.capacities[:, None]
    return SummaryStats(
        seats=outcome.seats.astype(np.float64),
        mean_frac=fractions.mean(axis=0),
        std_frac=fractions.std(axis=0),
        district_spread=np.sort(fractions.std(axis=1))[::-1].copy(),
        margin_mean=float(outcome.margins.mean()),
        margin_std=float(outcome.margins.std()),
        mask=np.ones(3 * config.n_parties + config.n_districts + 2, dtype=bool),
    )


def estimate_scale(pool):
    """Per-component sample std over a pool of statistics, floored at 1e-6.

    Used to standardize components of very different magnitude (seat counts
    vs margins) before computing distances.
    """
    if len(pool) < 10:
        raise ValidationError(f"need at least 10 statistics to estimate a scale, got {len(pool)}")
    matrix = np.vstack([s.vector() for s in pool])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        scale = np.nanstd(matrix, axis=0, ddof=1)
    scale = np.where(np.isfinite(scale), scale, SCALE_FLOOR)
    return np.maximum(scale, SCALE_FLOOR)


def distance(a, b, scale):
    """Mask-aware standardized Euclidean distance between two statistics.

    Only components available in both vectors enter; the sum is divided by
    the number of live components so differently masked observations remain
    comparable.
    """
    if a.dimension != b.dimension:
        raise ValidationError(
            f"statistics have different dimensions ({a.dimension} vs {b.dimension})"
        )
    scale = np.asarray(scale, dtype=np.float64)
    if scale.shape != (a.dimension,):
        raise ValidationError("scale length does not match the statistic dimension")
    mask = a.mask & b.mask
    if not mask.any():
        raise ValidationError("no commonly available components to compare")
    diff = (a.vector()[mask] - b.vector()[mask]) / scale[mask]
    return float(np.sqrt(np.sum(diff * diff) / mask.sum()))
