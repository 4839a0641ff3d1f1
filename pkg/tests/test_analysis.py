"""Per-user scale summaries, histogram export, and the mean weighting curve."""

import csv

import numpy as np
import pytest

from helpers import make_dataset
from weurec.analysis import (
    UserScaleSummary,
    export_mean_pwf_curve,
    mean_pwf_params,
    scale_histogram_rows,
    user_scale_summaries,
    write_pwf_curve_csv,
    write_scale_histogram_csv,
    write_user_scales_csv,
)
from weurec.utility import init_weu_parameters, materialize_alpha_beta
from weurec.weighting import PwfKind

SCALAR_FIELDS = ("a_alpha", "a_beta", "a_delta", "a_gamma", "a_theta")
ARRAY_FIELDS = (
    "b_alpha",
    "l_alpha",
    "i_alpha",
    "j_alpha",
    "b_beta",
    "l_beta",
    "i_beta",
    "j_beta",
    "l_delta",
    "l_gamma",
    "l_theta",
)


def zeroed_params(kind, dataset, latent_dim=3):
    params = init_weu_parameters(kind, dataset, latent_dim=latent_dim, seed=0)
    for name in SCALAR_FIELDS:
        setattr(params, name, 0.0)
    for name in ARRAY_FIELDS:
        getattr(params, name)[:] = 0.0
    return params


def randomized_params(rng, kind, dataset, latent_dim=3):
    params = init_weu_parameters(kind, dataset, latent_dim=latent_dim, seed=int(rng.integers(2**31)))
    params.a_alpha = float(rng.uniform(0.5, 2.0))
    params.a_beta = float(rng.uniform(0.5, 2.0))
    for name in ("b_alpha", "l_alpha", "b_beta", "l_beta"):
        getattr(params, name)[:] = rng.normal(0.0, 0.3, size=getattr(params, name).shape)
    for name in ("i_alpha", "j_alpha", "i_beta", "j_beta"):
        getattr(params, name)[:] = rng.normal(0.0, 0.2, size=getattr(params, name).shape)
    params.a_delta = 0.5
    params.l_delta[:] = rng.uniform(-0.2, 0.2, size=params.user_count)
    params.a_gamma = 1.0
    params.l_gamma[:] = rng.uniform(-0.3, 0.3, size=params.user_count)
    params.a_theta = 0.8
    params.l_theta[:] = rng.uniform(-0.1, 0.1, size=params.user_count)
    return params


def ten_item_dataset():
    train = [(u, i, 3, u * 10 + i) for u in range(3) for i in range(3)]
    test = [(u, i, 4, 100 + u * 10 + i) for u in range(3) for i in range(10)]
    return make_dataset(train=train, test=test, user_count=3, item_count=10)


class TestUserScaleSummaries:
    def test_zero_model_all_zero(self):
        ds = ten_item_dataset()
        params = zeroed_params(PwfKind.TF_PLUS, ds)
        for summary in user_scale_summaries(params, ds):
            assert summary.mean_alpha == 0.0
            assert summary.mean_beta == 0.0
            assert summary.diff == 0.0

    def test_single_item_universe(self):
        ds = make_dataset(
            train=[(0, 0, 3, 0), (1, 0, 4, 1)],
            test=[(0, 1, 5, 2), (1, 1, 2, 3)],
            user_count=2,
            item_count=2,
        )
        rng = np.random.default_rng(7)
        params = randomized_params(rng, PwfKind.PRELEC_PLUS, ds)
        summaries = user_scale_summaries(params, ds)
        for summary in summaries:
            alpha, beta = materialize_alpha_beta(params, np.array([1]), summary.user)
            assert summary.mean_alpha == pytest.approx(float(alpha[0]), abs=1e-15)
            assert summary.mean_beta == pytest.approx(float(beta[0]), abs=1e-15)

    def test_matches_direct_summation(self):
        ds = ten_item_dataset()
        rng = np.random.default_rng(8)
        params = randomized_params(rng, PwfKind.TF_PLUS, ds)
        summaries = user_scale_summaries(params, ds)
        items = sorted({r.item for r in ds.test})
        assert len(items) == 10
        for summary in summaries:
            total_a = 0.0
            total_b = 0.0
            for item in items:
                alpha, beta = materialize_alpha_beta(params, np.array([item]), summary.user)
                total_a += float(alpha[0])
                total_b += float(beta[0])
            assert summary.mean_alpha == pytest.approx(total_a / 10, abs=1e-12)
            assert summary.mean_beta == pytest.approx(total_b / 10, abs=1e-12)

    def test_diff_is_exact_difference(self):
        ds = ten_item_dataset()
        rng = np.random.default_rng(9)
        params = randomized_params(rng, PwfKind.TF, ds)
        for summary in user_scale_summaries(params, ds):
            assert summary.diff == summary.mean_alpha - summary.mean_beta

    def test_only_test_users_reported(self):
        ds = make_dataset(
            train=[(0, 0, 3, 0), (1, 0, 4, 1), (2, 0, 5, 2)],
            test=[(0, 1, 5, 3), (2, 1, 4, 4)],
            user_count=3,
            item_count=2,
        )
        params = zeroed_params(PwfKind.TF, ds)
        assert [s.user for s in user_scale_summaries(params, ds)] == [0, 2]

    def test_item_universe_shared_across_users(self):
        # both users average over the union of test items, not their own
        ds = make_dataset(
            train=[(0, 0, 3, 0), (1, 1, 4, 1)],
            test=[(0, 2, 5, 2), (1, 3, 4, 3)],
            user_count=2,
            item_count=4,
        )
        rng = np.random.default_rng(10)
        params = randomized_params(rng, PwfKind.TF_PLUS, ds)
        summaries = user_scale_summaries(params, ds)
        both_items = np.array([2, 3])
        for summary in summaries:
            alpha, _ = materialize_alpha_beta(params, both_items, summary.user)
            assert summary.mean_alpha == pytest.approx(float(np.mean(alpha)), abs=1e-15)


class TestMeanPwfParams:
    def test_average_of_user_biases(self):
        ds = make_dataset(
            train=[(0, 0, 3, 0), (1, 0, 4, 1)],
            test=[(0, 1, 5, 2), (1, 1, 3, 3)],
            user_count=2,
            item_count=2,
        )
        params = zeroed_params(PwfKind.TF_PLUS, ds)
        params.a_delta = 0.5
        params.l_delta[:] = [0.1, 0.3]
        params.a_gamma = 1.0
        params.l_gamma[:] = [-0.2, 0.2]
        params.a_theta = 0.7
        params.l_theta[:] = [0.05, -0.05]
        mean = mean_pwf_params(params, ds, PwfKind.TF_PLUS)
        assert mean.delta == pytest.approx(0.7, abs=1e-15)
        assert mean.gamma == pytest.approx(1.0, abs=1e-15)
        assert mean.theta == pytest.approx(0.7, abs=1e-15)

    def test_theta_pinned_for_unplussed_kind(self):
        ds = ten_item_dataset()
        params = zeroed_params(PwfKind.TF, ds)
        params.a_theta = 0.4
        assert mean_pwf_params(params, ds, PwfKind.TF).theta == 1.0


class TestExportMeanPwfCurve:
    def tf_params(self, ds):
        params = zeroed_params(PwfKind.TF, ds)
        params.a_delta = 0.9
        params.a_gamma = 0.5
        params.a_theta = 1.0
        return params

    def test_identity_kind_is_diagonal(self):
        ds = ten_item_dataset()
        params = zeroed_params(PwfKind.IDENTITY, ds)
        for p, w_model, w_identity in export_mean_pwf_curve(params, ds):
            assert w_model == pytest.approx(p, abs=1e-15)
            assert w_identity == p

    def test_curve_pinned_at_endpoints(self):
        ds = ten_item_dataset()
        rng = np.random.default_rng(11)
        for kind in (PwfKind.TF, PwfKind.TF_PLUS, PwfKind.PRELEC, PwfKind.PRELEC_PLUS):
            params = randomized_params(rng, kind, ds)
            rows = export_mean_pwf_curve(params, ds)
            assert rows[0] == (0.0, 0.0, 0.0)
            assert rows[-1] == (1.0, 1.0, 1.0)

    def test_tf_mean_curve_anchor(self):
        ds = ten_item_dataset()
        rows = export_mean_pwf_curve(self.tf_params(ds), ds)
        by_p = {round(p, 6): w for p, w, _ in rows}
        assert by_p[0.25] == pytest.approx(0.34193868804200437, abs=1e-12)
        assert by_p[0.25] == pytest.approx(0.3419, abs=1e-4)

    def test_grid_step_controls_row_count(self):
        ds = ten_item_dataset()
        params = self.tf_params(ds)
        assert len(export_mean_pwf_curve(params, ds)) == 101
        assert len(export_mean_pwf_curve(params, ds, grid_step=0.1)) == 11

    def test_identity_column_always_diagonal(self):
        ds = ten_item_dataset()
        rng = np.random.default_rng(12)
        params = randomized_params(rng, PwfKind.PRELEC_PLUS, ds)
        for p, _, w_identity in export_mean_pwf_curve(params, ds):
            assert w_identity == p

    def test_kind_override(self):
        ds = ten_item_dataset()
        params = self.tf_params(ds)
        rows = export_mean_pwf_curve(params, ds, kind=PwfKind.IDENTITY)
        for p, w_model, _ in rows:
            assert w_model == pytest.approx(p, abs=1e-15)


class TestScaleHistogramRows:
    def two_value_summaries(self):
        return [
            UserScaleSummary(0, 0.0, 0.0, 0.0),
            UserScaleSummary(1, 1.0, 1.0, 0.0),
        ]

    def test_hand_binning(self):
        rows = scale_histogram_rows(self.two_value_summaries(), bins=2)
        assert len(rows) == 2
        lo0, hi0, a0, b0, d0 = rows[0]
        lo1, hi1, a1, b1, d1 = rows[1]
        assert (lo0, hi0) == (0.0, 0.5)
        assert (lo1, hi1) == (0.5, 1.0)
        assert (a0, a1) == (1, 1)
        assert (b0, b1) == (1, 1)
        assert (d0, d1) == (2, 0)  # both diffs are 0.0, landing in the low bin

    def test_counts_sum_to_user_count(self):
        rng = np.random.default_rng(13)
        summaries = [
            UserScaleSummary(u, float(rng.normal(1.0, 0.4)), float(rng.normal(1.5, 0.4)), 0.0)
            for u in range(40)
        ]
        summaries = [
            UserScaleSummary(s.user, s.mean_alpha, s.mean_beta, s.mean_alpha - s.mean_beta)
            for s in summaries
        ]
        rows = scale_histogram_rows(summaries)
        assert len(rows) == 50
        assert sum(r[2] for r in rows) == 40
        assert sum(r[3] for r in rows) == 40
        assert sum(r[4] for r in rows) == 40

    def test_pooled_range_covers_all_series(self):
        summaries = [
            UserScaleSummary(0, -2.0, 3.0, -5.0),
            UserScaleSummary(1, 0.0, 1.0, -1.0),
        ]
        rows = scale_histogram_rows(summaries, bins=10)
        assert rows[0][0] == -5.0
        assert rows[-1][1] == 3.0

    def test_degenerate_single_value(self):
        summaries = [UserScaleSummary(u, 2.0, 2.0, 0.0) for u in range(5)]
        rows = scale_histogram_rows(summaries, bins=4)
        # the observed spread is zero: the range widens so counts stay usable
        assert rows[0][0] == 0.0
        assert sum(r[2] for r in rows) == 5
        assert sum(r[4] for r in rows) == 5


def read_csv_with_comment(path):
    comments = []
    rows = []
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            if line.startswith("#"):
                comments.append(line)
            else:
                rows.append(line.rstrip("\n"))
    parsed = list(csv.reader(rows))
    return comments, parsed[0], parsed[1:]


class TestCsvWriters:
    def test_user_scales_round_trip(self, tmp_path):
        summaries = [
            UserScaleSummary(0, 1.25, 0.375, 0.875),
            UserScaleSummary(3, -0.1, 0.3, -0.4),
        ]
        path = tmp_path / "user_scales.csv"
        write_user_scales_csv(summaries, path, header_comment="# model=tf+\n# seed=4\n")
        comments, header, rows = read_csv_with_comment(path)
        assert comments == ["# model=tf+\n", "# seed=4\n"]
        assert header == ["user", "mean_alpha", "mean_beta", "diff"]
        parsed = [
            UserScaleSummary(int(u), float(a), float(b), float(d)) for u, a, b, d in rows
        ]
        assert parsed == summaries

    def test_histogram_csv_round_trip(self, tmp_path):
        summaries = [
            UserScaleSummary(0, 0.0, 0.0, 0.0),
            UserScaleSummary(1, 1.0, 1.0, 0.0),
        ]
        path = tmp_path / "scale_histogram.csv"
        write_scale_histogram_csv(summaries, path, bins=2)
        _, header, rows = read_csv_with_comment(path)
        assert header == ["bin_lo", "bin_hi", "count_alpha", "count_beta", "count_diff"]
        parsed = [
            (float(lo), float(hi), int(a), int(b), int(d)) for lo, hi, a, b, d in rows
        ]
        assert parsed == scale_histogram_rows(summaries, bins=2)

    def test_pwf_curve_csv_round_trip(self, tmp_path):
        ds = ten_item_dataset()
        params = zeroed_params(PwfKind.TF, ds)
        params.a_delta = 0.9
        params.a_gamma = 0.5
        params.a_theta = 1.0
        rows = export_mean_pwf_curve(params, ds, grid_step=0.05)
        path = tmp_path / "pwf_curve.csv"
        write_pwf_curve_csv(rows, path, header_comment="# model=tf\n")
        comments, header, parsed = read_csv_with_comment(path)
        assert comments == ["# model=tf\n"]
        assert header == ["p", "w_model", "w_identity"]
        assert [(float(p), float(w), float(i)) for p, w, i in parsed] == rows
