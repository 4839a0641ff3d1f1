"""Interpretability exports: per-user mean utility scales over the test
item universe, their histograms, and the mean learned weighting curve.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import SplitDataset
from .utility import WeuParameters, materialize_alpha_beta, materialize_pwf_params
from .weighting import PwfKind, PwfParams, pwf_grid

HISTOGRAM_BINS = 50


@dataclass(frozen=True)
class UserScaleSummary:
    """One test user's mean gain scale, mean loss scale, and their gap."""

    user: int
    mean_alpha: float
    mean_beta: float
    diff: float  # mean_alpha - mean_beta


def _test_users(dataset: SplitDataset) -> list[int]:
    return sorted({r.user for r in dataset.test})


def _test_items(dataset: SplitDataset) -> np.ndarray:
    return np.fromiter(sorted({r.item for r in dataset.test}), dtype=np.intp)


def user_scale_summaries(params: WeuParameters, dataset: SplitDataset) -> list[UserScaleSummary]:
    """Mean materialized alpha and beta per test user, averaged over the
    set of all items that appear in the test partition."""
    items = _test_items(dataset)
    summaries = []
    for user in _test_users(dataset):
        alpha, beta = materialize_alpha_beta(params, items, user)
        mean_alpha = float(np.mean(alpha))
        mean_beta = float(np.mean(beta))
        summaries.append(UserScaleSummary(user, mean_alpha, mean_beta, mean_alpha - mean_beta))
    return summaries


def mean_pwf_params(params: WeuParameters, dataset: SplitDataset, kind: PwfKind) -> PwfParams:
    """Weighting parameters averaged (as materialized values) over test users."""
    users = _test_users(dataset)
    materialized = [materialize_pwf_params(params, u, kind) for u in users]
    return PwfParams(
        delta=float(np.mean([m.delta for m in materialized])),
        gamma=float(np.mean([m.gamma for m in materialized])),
        theta=float(np.mean([m.theta for m in materialized])),
    )


def export_mean_pwf_curve(
    params: WeuParameters,
    dataset: SplitDataset,
    kind: PwfKind | None = None,
    grid_step: float = 0.01,
) -> list[tuple[float, float, float]]:
    """(p, w_model, w_identity) rows for the mean-parameter weighting curve.

    The identity column is the undistorted diagonal for comparison.
    """
    if kind is None:
        kind = params.kind
    mean_params = mean_pwf_params(params, dataset, kind)
    grid, w = pwf_grid(kind, mean_params, grid_step)
    return [(float(p), float(wv), float(p)) for p, wv in zip(grid, w)]


def _write_csv(path, header_comment: str, columns: list[str], rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        handle.write(header_comment)
        writer = csv.writer(handle)
        writer.writerow(columns)
        writer.writerows(rows)


def write_user_scales_csv(summaries: list[UserScaleSummary], path, header_comment: str = "") -> None:
    rows = [
        (s.user, repr(s.mean_alpha), repr(s.mean_beta), repr(s.diff)) for s in summaries
    ]
    _write_csv(path, header_comment, ["user", "mean_alpha", "mean_beta", "diff"], rows)


def scale_histogram_rows(
    summaries: list[UserScaleSummary], bins: int = HISTOGRAM_BINS
) -> list[tuple[float, float, int, int, int]]:
    """Equal-width bins over the pooled observed range of the three series."""
    alphas = np.array([s.mean_alpha for s in summaries])
    betas = np.array([s.mean_beta for s in summaries])
    diffs = np.array([s.diff for s in summaries])
    pooled = np.concatenate([alphas, betas, diffs])
    lo, hi = float(pooled.min()), float(pooled.max())
    if hi <= lo:
        hi = lo + 1.0  # degenerate single-value case still gets one usable bin
    edges = np.linspace(lo, hi, bins + 1)
    count_a, _ = np.histogram(alphas, bins=edges)
    count_b, _ = np.histogram(betas, bins=edges)
    count_d, _ = np.histogram(diffs, bins=edges)
    return [
        (float(edges[i]), float(edges[i + 1]), int(count_a[i]), int(count_b[i]), int(count_d[i]))
        for i in range(bins)
    ]


def write_scale_histogram_csv(
    summaries: list[UserScaleSummary], path, header_comment: str = "", bins: int = HISTOGRAM_BINS
) -> None:
    rows = [
        (repr(lo), repr(hi), ca, cb, cd)
        for lo, hi, ca, cb, cd in scale_histogram_rows(summaries, bins)
    ]
    _write_csv(
        path, header_comment, ["bin_lo", "bin_hi", "count_alpha", "count_beta", "count_diff"], rows
    )


def write_pwf_curve_csv(rows: list[tuple[float, float, float]], path, header_comment: str = "") -> None:
    formatted = [(repr(p), repr(w), repr(ident)) for p, w, ident in rows]
    _write_csv(path, header_comment, ["p", "w_model", "w_identity"], formatted)
