"""Sampled-negatives top-K evaluation protocol.

Each evaluated user's ground-truth items are ranked jointly against a
fixed-size pool of sampled negatives; precision, recall, F1, and NDCG are
macro-averaged over users in a fixed order so the reduction is
deterministic regardless of worker count.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from . import seeding
from .data import SplitDataset, items_by_user
from .scoring import order_by_score

ScoreFn = Callable[[int, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class EvalConfig:
    """Protocol knobs: negative-pool size, cutoffs, and the run seed that
    namespaces the per-user negative streams."""

    negatives: int = 1000
    cutoffs: tuple[int, ...] = (1, 5, 10)
    seed: int = 0

    def __post_init__(self) -> None:
        if self.negatives < 0:
            raise ValueError("negatives must be non-negative")
        if not self.cutoffs or any(k < 1 for k in self.cutoffs):
            raise ValueError("cutoffs must be positive integers")


class MetricValues(NamedTuple):
    precision: float
    recall: float
    f1: float
    ndcg: float


@dataclass(frozen=True)
class RankingMetrics:
    """Macro-averaged metric values keyed by cutoff K."""

    at: dict[int, MetricValues]


class UserMetrics(NamedTuple):
    user: int
    at: dict[int, MetricValues]


def sample_eval_negatives(
    rng: np.random.Generator,
    user: int,
    dataset: SplitDataset,
    count: int = 1000,
    touched: set[int] | None = None,
) -> np.ndarray:
    """Distinct items the user never interacted with, in any split.

    Raises when the catalog cannot supply `count` eligible items.
    """
    if touched is None:
        touched = {r.item for r in dataset.all_records() if r.user == user}
    eligible = np.setdiff1d(
        np.arange(dataset.item_count, dtype=np.intp),
        np.fromiter(touched, dtype=np.intp, count=len(touched)),
    )
    if eligible.size < count:
        raise ValueError(
            f"catalog too small: user {user} leaves {eligible.size} eligible items, "
            f"need {count} negatives"
        )
    return rng.choice(eligible, size=count, replace=False).astype(np.intp)


def metrics_at_k(ranked, relevant: set[int], k: int) -> tuple[float, float, float, float]:
    """(precision, recall, F1, NDCG) of one ranking at one cutoff.

    Binary gain, discount 1/log2(rank+1) with ranks starting at 1, ideal
    DCG over min(k, |relevant|) relevant items at the top.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if not relevant:
        raise ValueError("relevant set must be non-empty")
    hits = 0
    dcg = 0.0
    for rank, item in enumerate(ranked[:k], start=1):
        if item in relevant:
            hits += 1
            dcg += 1.0 / np.log2(rank + 1)
    idcg = sum(1.0 / np.log2(rank + 1) for rank in range(1, min(k, len(relevant)) + 1))
    precision = hits / k
    recall = hits / len(relevant)
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return precision, recall, f1, float(dcg / idcg)


def evaluate(
    score_fn: ScoreFn,
    dataset: SplitDataset,
    config: EvalConfig,
    partition: str = "test",
    collect_per_user: bool = False,
    workers: int = 1,
):
    """Macro-averaged RankingMetrics over all users with ground truth in
    the chosen partition ("test" or "validation").

    Per user, the partition's items are ranked together with that user's
    sampled negatives; ties break by item index.  The negative pool depends
    only on (seed, user), so different models evaluated under the same
    config see identical pools.  With collect_per_user, returns
    (metrics, per-user rows).
    """
    if partition not in ("test", "validation"):
        raise ValueError(f"unknown partition {partition!r}")
    records = getattr(dataset, partition)
    relevant_by_user: dict[int, set[int]] = {}
    for rec in records:
        relevant_by_user.setdefault(rec.user, set()).add(rec.item)
    if not relevant_by_user:
        raise ValueError(f"no users with {partition} records to evaluate")
    touched = items_by_user(dataset.all_records(), dataset.user_count)
    eval_users = sorted(relevant_by_user)

    def one_user(user: int) -> UserMetrics:
        rng = seeding.stream(config.seed, seeding.EVAL_NEGATIVES, user)
        negatives = sample_eval_negatives(rng, user, dataset, config.negatives, touched[user])
        relevant = relevant_by_user[user]
        candidates = np.concatenate(
            [np.fromiter(sorted(relevant), dtype=np.intp, count=len(relevant)), negatives]
        )
        scores = np.asarray(score_fn(user, candidates), dtype=float)
        ranked = candidates[order_by_score(candidates, scores)]
        return UserMetrics(
            user, {k: MetricValues(*metrics_at_k(ranked, relevant, k)) for k in config.cutoffs}
        )

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(one_user, eval_users))
    else:
        rows = [one_user(u) for u in eval_users]

    averaged = {
        k: MetricValues(
            *(float(np.mean([row.at[k][i] for row in rows])) for i in range(4))
        )
        for k in config.cutoffs
    }
    metrics = RankingMetrics(at=averaged)
    return (metrics, rows) if collect_per_user else metrics
