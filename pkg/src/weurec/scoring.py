"""Expected-utility scoring and deterministic candidate ranking.

A score for (user, item) sums, over rating levels the item was actually
given in training, the utility of each level's outcome times the weighted
probability of that level.  Identity weighting recovers plain expected
utility; no noise is ever injected at inference.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .utility import WeuParameters, materialize_alpha_beta, materialize_pwf_params
from .weighting import HistogramStore, PwfKind, weight


@dataclass(frozen=True)
class ScoreRequest:
    """One ranking request: which user, which candidate items, which variant."""

    user: int
    candidates: Sequence[int]
    kind: PwfKind


def score_items(
    params: WeuParameters,
    hists: HistogramStore,
    user: int,
    items: np.ndarray,
    kind: PwfKind,
) -> np.ndarray:
    """Scores for one user against an array of items.

    Zero-probability levels contribute exactly zero because every weighting
    variant pins w(0) = 0, so no explicit skip is needed.
    """
    items = np.asarray(items, dtype=np.intp)
    levels = np.arange(1, params.r_max + 1, dtype=float)
    o = levels - params.ref_points[user]
    tanh_o = np.tanh(o)
    gain = o >= 0.0

    alpha, beta = materialize_alpha_beta(params, items, user)
    scale = np.where(gain[None, :], np.asarray(alpha)[:, None], np.asarray(beta)[:, None])
    pw = materialize_pwf_params(params, user, kind)
    w = weight(kind, hists.prob_matrix[items], pw)
    return (scale * tanh_o[None, :] * w).sum(axis=1)


def weu_score(
    params: WeuParameters, hists: HistogramStore, user: int, item: int, kind: PwfKind
) -> float:
    """Score one (user, item) pair under the given weighting variant."""
    return float(score_items(params, hists, user, np.array([item]), kind)[0])


def order_by_score(candidates: np.ndarray, scores: np.ndarray) -> np.ndarray:
    """Positions sorted by score descending, ties broken by item ascending.

    Shared by ranking, prediction, and evaluation so the tie rule cannot
    drift between surfaces.
    """
    return np.lexsort((candidates, -np.asarray(scores, dtype=float)))


def rank_candidates(
    params: WeuParameters, hists: HistogramStore, request: ScoreRequest
) -> list[tuple[int, float]]:
    """Candidates sorted by score descending, ties broken by item index.

    Returns (item, score) pairs; the result is a permutation of the
    request's candidates.
    """
    candidates = np.asarray(request.candidates, dtype=np.intp)
    if candidates.size == 0:
        raise ValueError("candidate list must be non-empty")
    scores = score_items(params, hists, request.user, candidates, request.kind)
    order = order_by_score(candidates, scores)
    return [(int(candidates[i]), float(scores[i])) for i in order]


@dataclass(frozen=True)
class WeuScorer:
    """Callable (user, items) -> scores handle for the evaluation harness."""

    params: WeuParameters
    hists: HistogramStore
    kind: PwfKind

    def __call__(self, user: int, items: np.ndarray) -> np.ndarray:
        return score_items(self.params, self.hists, user, items, self.kind)
