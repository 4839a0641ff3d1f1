"""Parse interaction CSVs, apply the minimum-interaction core filter, and
produce the per-user chronological train/validation/test split.
"""

from __future__ import annotations

import csv
import math
import os
from collections import Counter, defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable, Union

from .data import IdMap, InteractionRecord, RawInteraction, SplitDataset

Source = Union[str, os.PathLike, IO[str], Iterable[str]]

# floor(ratio * n) must not lose an exact multiple to float rounding
# (0.2 * 10 is slightly below 2 in binary); the nudge is far smaller than
# any achievable ratio increment.
_FLOOR_NUDGE = 1e-9

SPLIT_NAMES = ("train", "validation", "test")


@dataclass(frozen=True)
class IngestConfig:
    """Knobs for parsing and splitting.

    min_interactions is the core-filter threshold applied to users and
    items alike; split_ratios are the train/validation/test fractions.
    """

    min_interactions: int = 10
    split_ratios: tuple[float, float, float] = (0.6, 0.2, 0.2)
    r_max: int = 5

    def __post_init__(self) -> None:
        if self.min_interactions < 1:
            raise ValueError("min_interactions must be >= 1")
        if any(r < 0 for r in self.split_ratios):
            raise ValueError("split ratios must be non-negative")
        if abs(sum(self.split_ratios) - 1.0) > 1e-9:
            raise ValueError("split ratios must sum to 1")
        if self.r_max < 1:
            raise ValueError("r_max must be >= 1")


def _iter_lines(source: Source):
    if isinstance(source, (str, os.PathLike)):
        with open(source, "r", encoding="utf-8") as handle:
            yield from handle
    else:
        yield from source


def _is_numeric(field: str) -> bool:
    try:
        float(field)
    except ValueError:
        return False
    return True


def parse_interactions(source: Source, config: IngestConfig = IngestConfig()) -> list[RawInteraction]:
    """Read `user_id,item_id,rating,timestamp` lines into raw tuples.

    A header on line 1 is detected by a non-numeric third field and
    skipped.  Malformed lines and out-of-range ratings raise ValueError
    carrying the 1-based line number.  Input order is preserved.
    """
    records: list[RawInteraction] = []
    for line_no, line in enumerate(_iter_lines(source), start=1):
        line = line.rstrip("\r\n")
        if not line:
            continue
        fields = line.split(",")
        # Header detection keys on the rating column being non-numeric; a
        # numeric fourth field means a data row with a bad rating, which
        # must error below rather than be skipped.
        if (
            line_no == 1
            and len(fields) >= 3
            and not _is_numeric(fields[2])
            and (len(fields) < 4 or not _is_numeric(fields[3]))
        ):
            continue  # header row
        if len(fields) != 4:
            raise ValueError(f"line {line_no}: expected 4 comma-separated fields, got {len(fields)}")
        user, item = fields[0], fields[1]
        if not user or not item:
            raise ValueError(f"line {line_no}: empty user or item id")
        try:
            rating = int(fields[2])
        except ValueError:
            raise ValueError(f"line {line_no}: rating {fields[2]!r} is not an integer") from None
        try:
            timestamp = int(fields[3])
        except ValueError:
            raise ValueError(f"line {line_no}: timestamp {fields[3]!r} is not an integer") from None
        if not 1 <= rating <= config.r_max:
            raise ValueError(f"line {line_no}: rating {rating} outside [1, {config.r_max}]")
        records.append(RawInteraction(user, item, rating, timestamp))
    return records


def filter_k_core(records: list, min_interactions: int) -> list:
    """Iterate removal of users/items below the threshold to a fixed point.

    Returns the maximal subset (possibly empty) in which every remaining
    user and item has at least min_interactions interactions.  Record order
    is preserved.  Works on raw or dense records alike.
    """
    current = list(records)
    while True:
        user_counts: Counter = Counter(r.user for r in current)
        item_counts: Counter = Counter(r.item for r in current)
        bad_users = {u for u, c in user_counts.items() if c < min_interactions}
        bad_items = {i for i, c in item_counts.items() if c < min_interactions}
        if not bad_users and not bad_items:
            return current
        current = [r for r in current if r.user not in bad_users and r.item not in bad_items]


def chronological_split(
    records: list[RawInteraction],
    ratios: tuple[float, float, float] = (0.6, 0.2, 0.2),
    r_max: int = 5,
) -> SplitDataset:
    """Split each user's history by time into train/validation/test.

    Dense indices are assigned by first appearance.  Per user, records are
    ordered by (timestamp, item index); the first floor(ratios[0]*n) go to
    train, the next floor(ratios[1]*n) to validation, the remainder to
    test.  Users with too few records may end up with empty train or
    validation partitions; they stay in the dataset.
    """
    user_ids = IdMap.from_raw_ids(r.user for r in records)
    item_ids = IdMap.from_raw_ids(r.item for r in records)

    per_user: dict[int, list[InteractionRecord]] = defaultdict(list)
    for raw in records:
        rec = InteractionRecord(
            user_ids.to_dense(raw.user), item_ids.to_dense(raw.item), raw.rating, raw.timestamp
        )
        per_user[rec.user].append(rec)

    train: list[InteractionRecord] = []
    validation: list[InteractionRecord] = []
    test: list[InteractionRecord] = []
    for user in range(len(user_ids)):
        history = sorted(per_user[user], key=lambda r: (r.timestamp, r.item))
        n = len(history)
        n_train = math.floor(ratios[0] * n + _FLOOR_NUDGE)
        n_val = math.floor(ratios[1] * n + _FLOOR_NUDGE)
        train.extend(history[:n_train])
        validation.extend(history[n_train : n_train + n_val])
        test.extend(history[n_train + n_val :])

    return SplitDataset(
        train=tuple(train),
        validation=tuple(validation),
        test=tuple(test),
        user_count=len(user_ids),
        item_count=len(item_ids),
        r_max=r_max,
        user_ids=user_ids,
        item_ids=item_ids,
    )


def build_dataset(source: Source, config: IngestConfig = IngestConfig()) -> tuple[SplitDataset, int]:
    """Parse, core-filter, and split in one call.

    Returns the dataset and the number of raw records read before
    filtering.
    """
    raw = parse_interactions(source, config)
    kept = filter_k_core(raw, config.min_interactions)
    dataset = chronological_split(kept, config.split_ratios, config.r_max)
    return dataset, len(raw)


def write_split(dataset: SplitDataset, output_dir: Union[str, os.PathLike]) -> None:
    """Write train/validation/test CSVs (dense indices) and both id maps."""
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, records in zip(SPLIT_NAMES, (dataset.train, dataset.validation, dataset.test)):
        with open(out / f"{name}.csv", "w", encoding="utf-8", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(["user_id", "item_id", "rating", "timestamp"])
            writer.writerows(records)
    for name, id_map in (("users", dataset.user_ids), ("items", dataset.item_ids)):
        with open(out / f"id_map_{name}.csv", "w", encoding="utf-8", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(["raw_id", "dense_index"])
            for dense, raw in enumerate(id_map.dense_to_raw):
                writer.writerow([raw, dense])


def _read_records(path: Path) -> list[InteractionRecord]:
    records = []
    with open(path, "r", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        next(reader)  # header written by write_split
        for row in reader:
            records.append(InteractionRecord(int(row[0]), int(row[1]), int(row[2]), int(row[3])))
    return records


def _read_id_map(path: Path) -> IdMap:
    dense_to_raw = []
    with open(path, "r", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        next(reader)
        for raw, dense in reader:
            assert int(dense) == len(dense_to_raw), "id map rows must be dense-index ordered"
            dense_to_raw.append(raw)
    return IdMap(tuple(dense_to_raw), {raw: i for i, raw in enumerate(dense_to_raw)})


def load_split(split_dir: Union[str, os.PathLike], r_max: int = 5) -> SplitDataset:
    """Read back a directory written by write_split."""
    d = Path(split_dir)
    train, validation, test = (_read_records(d / f"{name}.csv") for name in SPLIT_NAMES)
    user_ids = _read_id_map(d / "id_map_users.csv")
    item_ids = _read_id_map(d / "id_map_items.csv")
    return SplitDataset(
        train=tuple(train),
        validation=tuple(validation),
        test=tuple(test),
        user_count=len(user_ids),
        item_count=len(item_ids),
        r_max=r_max,
        user_ids=user_ids,
        item_ids=item_ids,
    )
