"""Outcome probabilities from rating histograms, and the probability
weighting functions that distort them.

All weighting variants are pinned exactly to w(0) = 0 and w(1) = 1, so a
zero-probability outcome contributes exactly nothing to a weighted sum and
skipping it is not an approximation.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .data import InteractionRecord, RatingHistogram

# Lower clamp applied before ln/pow on interior probabilities; far below any
# empirical probability from a finite rater count, so it only guards overflow.
P_CLAMP = 1e-12


class PwfKind(enum.Enum):
    """Scoring variant: identity weighting or one of the PWF families.

    The unplussed variants pin theta to 1; the plus variants learn it.
    Values double as the model names accepted on the command line.
    """

    IDENTITY = "eu"
    TF = "tf"
    TF_PLUS = "tf+"
    PRELEC = "prelec"
    PRELEC_PLUS = "prelec+"

    @property
    def theta_is_free(self) -> bool:
        return self in (PwfKind.TF_PLUS, PwfKind.PRELEC_PLUS)

    @property
    def has_weighting(self) -> bool:
        return self is not PwfKind.IDENTITY

    @property
    def tf_family(self) -> bool:
        return self in (PwfKind.TF, PwfKind.TF_PLUS)

    @property
    def prelec_family(self) -> bool:
        return self in (PwfKind.PRELEC, PwfKind.PRELEC_PLUS)


@dataclass(frozen=True)
class PwfParams:
    """One user's weighting parameters: 0 < delta < 1, gamma > 0, 0 < theta <= 1."""

    delta: float
    gamma: float
    theta: float = 1.0


def _tf_array(p: np.ndarray, delta: float, gamma: float, theta: float) -> np.ndarray:
    out = np.zeros_like(p)
    interior = (p > 0.0) & (p < 1.0)
    pc = np.clip(p[interior], P_CLAMP, 1.0)
    a = delta * pc**gamma
    b = theta * (1.0 - pc) ** gamma
    out[interior] = a / (a + b)
    out[p >= 1.0] = 1.0
    return out


def _prelec_array(p: np.ndarray, delta: float, gamma: float, theta: float) -> np.ndarray:
    out = np.zeros_like(p)
    interior = (p > 0.0) & (p < 1.0)
    pc = np.clip(p[interior], P_CLAMP, 1.0)
    out[interior] = np.exp(-delta * (-theta * np.log(pc)) ** gamma)
    out[p >= 1.0] = 1.0
    return out


def weight_tf(p, params: PwfParams):
    """delta*p^gamma / (delta*p^gamma + theta*(1-p)^gamma), pinned at 0 and 1.

    Accepts a scalar or an array; returns the matching shape.
    """
    arr = _tf_array(np.asarray(p, dtype=float), params.delta, params.gamma, params.theta)
    return float(arr) if np.ndim(p) == 0 else arr


def weight_prelec(p, params: PwfParams):
    """exp(-delta * (-theta*ln p)^gamma) on (0, 1]; 0 at p = 0 (the limit).

    Accepts a scalar or an array; returns the matching shape.
    """
    arr = _prelec_array(np.asarray(p, dtype=float), params.delta, params.gamma, params.theta)
    return float(arr) if np.ndim(p) == 0 else arr


def weight(kind: PwfKind, p, params: PwfParams):
    """Dispatch to the kind's weighting; theta is forced to 1 for TF/Prelec."""
    if kind is PwfKind.IDENTITY:
        arr = np.asarray(p, dtype=float)
        return float(arr) if np.ndim(p) == 0 else arr.copy()
    theta = params.theta if kind.theta_is_free else 1.0
    effective = PwfParams(params.delta, params.gamma, theta)
    if kind.tf_family:
        return weight_tf(p, effective)
    return weight_prelec(p, effective)


def weight_with_grads(
    kind: PwfKind, p: np.ndarray, delta: float, gamma: float, theta: float
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Weights plus partial derivatives in (delta, gamma, theta).

    Zero-probability entries get zero weight and zero gradients (they are
    skipped outcomes, not differentiable points).  For kinds with pinned
    theta the caller must pass theta = 1; the theta gradient column is then
    meaningless and the caller must not apply it.
    """
    p = np.asarray(p, dtype=float)
    zero = np.zeros_like(p)
    if kind is PwfKind.IDENTITY:
        return p.copy(), zero, zero.copy(), zero.copy()

    w = np.zeros_like(p)
    dd = np.zeros_like(p)
    dg = np.zeros_like(p)
    dt = np.zeros_like(p)
    pos = p > 0.0
    pc = np.clip(p[pos], P_CLAMP, 1.0)
    ln_p = np.log(pc)

    if kind.tf_family:
        q = 1.0 - pc
        pg = pc**gamma
        qg = q**gamma
        a = delta * pg
        b = theta * qg
        denom = a + b
        # ln q underflows at p = 1; b is exactly 0 there so b*ln q -> 0.
        ln_q = np.log(np.maximum(q, P_CLAMP))
        w[pos] = a / denom
        dd[pos] = pg * b / denom**2
        dg[pos] = (a * ln_p * b - a * b * ln_q) / denom**2
        dt[pos] = -a * qg / denom**2
    else:
        t = -theta * ln_p  # >= 0, exactly 0 at p = 1
        z = t**gamma
        val = np.exp(-delta * z)
        ln_t = np.log(np.maximum(t, P_CLAMP))
        w[pos] = val
        dd[pos] = -z * val
        dg[pos] = -delta * z * ln_t * val  # z*ln t -> 0 as t -> 0 for gamma > 0
        dt[pos] = -delta * gamma * z / theta * val

    exact_one = p >= 1.0
    w[exact_one] = 1.0
    return w, dd, dg, dt


@dataclass(frozen=True)
class HistogramStore:
    """Per-item rating histograms built from training data only.

    prob_matrix[i] is item i's probability vector over rating levels; items
    with no training ratings carry the global training distribution (or the
    uniform distribution when there is no training data at all).
    """

    per_item: tuple[RatingHistogram, ...]
    global_hist: RatingHistogram
    prob_matrix: np.ndarray
    r_max: int

    def item_probs(self, item: int) -> np.ndarray:
        return self.prob_matrix[item]


def build_histograms(
    train: tuple[InteractionRecord, ...], item_count: int, r_max: int
) -> HistogramStore:
    """Count training ratings per item and precompute probability rows."""
    counts = np.zeros((item_count, r_max), dtype=np.int64)
    for rec in train:
        counts[rec.item, rec.rating - 1] += 1
    totals = counts.sum(axis=1)

    global_counts = counts.sum(axis=0)
    global_total = int(global_counts.sum())
    if global_total > 0:
        global_row = global_counts / global_total
    else:
        global_row = np.full(r_max, 1.0 / r_max)

    prob_matrix = np.where(
        (totals > 0)[:, None], counts / np.maximum(totals, 1)[:, None], global_row[None, :]
    )

    per_item = tuple(RatingHistogram(counts[i], int(totals[i])) for i in range(item_count))
    return HistogramStore(
        per_item=per_item,
        global_hist=RatingHistogram(global_counts, global_total),
        prob_matrix=prob_matrix,
        r_max=r_max,
    )


def pwf_grid(kind: PwfKind, params: PwfParams, step: float = 0.01) -> tuple[np.ndarray, np.ndarray]:
    """Evaluate the kind's weighting on an even p-grid including both endpoints."""
    n = round(1.0 / step)
    p = np.linspace(0.0, 1.0, n + 1)
    return p, weight(kind, p, params)
