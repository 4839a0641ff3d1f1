"""Core domain types: interaction records, id maps, rating histograms,
and the immutable train/validation/test dataset shared by all modules.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, NamedTuple

import numpy as np


class RawInteraction(NamedTuple):
    """One parsed input line, ids still in raw string form."""

    user: str
    item: str
    rating: int
    timestamp: int


class InteractionRecord(NamedTuple):
    """One (user, item, rating, timestamp) event on dense indices."""

    user: int
    item: int
    rating: int
    timestamp: int


@dataclass(frozen=True)
class IdMap:
    """Bidirectional raw-id <-> dense-index table.

    Dense indices are assigned in order of first appearance, so the map is
    a pure function of the input record order.
    """

    dense_to_raw: tuple[str, ...]
    raw_to_dense: dict[str, int]

    @classmethod
    def from_raw_ids(cls, raw_ids: Iterable[str]) -> "IdMap":
        dense_to_raw: list[str] = []
        raw_to_dense: dict[str, int] = {}
        for raw in raw_ids:
            if raw not in raw_to_dense:
                raw_to_dense[raw] = len(dense_to_raw)
                dense_to_raw.append(raw)
        return cls(tuple(dense_to_raw), raw_to_dense)

    def __len__(self) -> int:
        return len(self.dense_to_raw)

    def to_dense(self, raw: str) -> int:
        return self.raw_to_dense[raw]

    def to_raw(self, dense: int) -> str:
        return self.dense_to_raw[dense]


@dataclass(frozen=True)
class RatingHistogram:
    """Counts per discrete rating level for one item.

    counts[r - 1] is the tally for rating level r; total is the number of
    raters.  A histogram with total == 0 carries no probability information
    and callers must fall back to a global histogram.
    """

    counts: np.ndarray
    total: int

    @classmethod
    def from_ratings(cls, ratings: Iterable[int], r_max: int) -> "RatingHistogram":
        counts = np.zeros(r_max, dtype=np.int64)
        for r in ratings:
            counts[r - 1] += 1
        return cls(counts, int(counts.sum()))

    @property
    def r_max(self) -> int:
        return len(self.counts)


def probability(hist: RatingHistogram, rating: int) -> float:
    """Empirical probability of one rating level under a histogram.

    Raises ValueError on an empty histogram; the caller owns the fallback
    policy (see the weighting module's global histogram).
    """
    if not 1 <= rating <= hist.r_max:
        raise ValueError(f"rating {rating} outside [1, {hist.r_max}]")
    if hist.total == 0:
        raise ValueError("empty histogram has no defined probabilities")
    return float(hist.counts[rating - 1]) / float(hist.total)


@dataclass(frozen=True)
class SplitDataset:
    """Chronologically split interactions on dense indices.

    Per user, all training timestamps precede (or tie) validation ones,
    which precede (or tie) test ones.  The three lists are disjoint as
    multisets and jointly cover every filtered record.
    """

    train: tuple[InteractionRecord, ...]
    validation: tuple[InteractionRecord, ...]
    test: tuple[InteractionRecord, ...]
    user_count: int
    item_count: int
    r_max: int
    user_ids: IdMap
    item_ids: IdMap

    def all_records(self) -> tuple[InteractionRecord, ...]:
        return self.train + self.validation + self.test


def items_by_user(records: Iterable[InteractionRecord], user_count: int) -> list[set[int]]:
    """Set of item indices each user touches in the given records."""
    sets: list[set[int]] = [set() for _ in range(user_count)]
    for rec in records:
        sets[rec.user].add(rec.item)
    return sets
