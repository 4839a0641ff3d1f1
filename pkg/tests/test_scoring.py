"""Item scoring under each weighting variant and the ranking rules."""

import numpy as np
import pytest

from helpers import make_dataset
from weurec.scoring import (
    ScoreRequest,
    WeuScorer,
    order_by_score,
    rank_candidates,
    score_items,
    weu_score,
)
from weurec.utility import init_weu_parameters, materialize_alpha_beta, materialize_pwf_params, utility
from weurec.weighting import PwfKind, build_histograms, weight


def two_level_setup(alpha, beta, kind):
    """One user, one item whose train histogram is P(4)=P(2)=0.5, ref 3."""
    ds = make_dataset(
        train=[(0, 0, 4, 0), (0, 0, 2, 1)],
        user_count=1,
        item_count=1,
    )
    hists = build_histograms(ds.train, ds.item_count, ds.r_max)
    params = init_weu_parameters(kind, ds, latent_dim=2, seed=0)
    params.i_alpha[:] = 0.0
    params.j_alpha[:] = 0.0
    params.i_beta[:] = 0.0
    params.j_beta[:] = 0.0
    params.a_alpha = alpha
    params.a_beta = beta
    params.ref_points[0] = 3.0
    return params, hists


def random_instance(rng, kind, item_count=5, r_max=5):
    """Small dense instance with randomized histograms and parameters."""
    rows = []
    t = 0
    for i in range(item_count):
        for _ in range(int(rng.integers(1, 7))):
            rows.append((int(rng.integers(0, 3)), i, int(rng.integers(1, r_max + 1)), t))
            t += 1
    ds = make_dataset(rows, user_count=3, item_count=item_count, r_max=r_max)
    params = init_weu_parameters(kind, ds, latent_dim=3, seed=int(rng.integers(2**31)))
    params.b_alpha[:] = rng.normal(0, 0.3, item_count)
    params.b_beta[:] = rng.normal(0, 0.3, item_count)
    params.l_alpha[:] = rng.normal(0, 0.3, 3)
    params.l_beta[:] = rng.normal(0, 0.3, 3)
    params.i_alpha[:] = rng.normal(0, 0.2, params.i_alpha.shape)
    params.j_alpha[:] = rng.normal(0, 0.2, params.j_alpha.shape)
    params.a_delta = float(rng.uniform(0.1, 0.9))
    params.l_delta[:] = rng.uniform(-0.05, 0.05, 3)
    params.a_gamma = float(rng.uniform(0.3, 2.0))
    params.a_theta = float(rng.uniform(0.2, 1.0))
    params.ref_points[:] = rng.uniform(1.0, r_max, 3)
    hists = build_histograms(ds.train, ds.item_count, ds.r_max)
    return ds, params, hists


def brute_force_score(params, hists, user, item, kind):
    """Exhaustive sum over every rating level with w(0) = 0 spelled out."""
    pw = materialize_pwf_params(params, user, kind)
    alpha, beta = materialize_alpha_beta(params, item, user)
    total = 0.0
    for r in range(1, params.r_max + 1):
        p = float(hists.prob_matrix[item, r - 1])
        w = weight(kind, p, pw) if p > 0 else 0.0
        total += utility(r - params.ref_points[user], alpha, beta) * w
    return total


class TestAnchors:
    def test_symmetric_outcomes_cancel(self):
        params, hists = two_level_setup(alpha=1.0, beta=1.0, kind=PwfKind.IDENTITY)
        assert weu_score(params, hists, 0, 0, PwfKind.IDENTITY) == pytest.approx(0.0, abs=1e-12)

    def test_asymmetric_tf_hand_value(self):
        # w(0.5) = 0.9*sqrt(0.5) / (0.9*sqrt(0.5) + sqrt(0.5)) = 0.9/1.9;
        # score = w*tanh(1) - w*2*tanh(1) = -w*tanh(1)
        params, hists = two_level_setup(alpha=1.0, beta=2.0, kind=PwfKind.TF)
        params.a_delta = 0.9
        params.a_gamma = 0.5
        score = weu_score(params, hists, 0, 0, PwfKind.TF)
        w = 0.9 / 1.9
        assert w == pytest.approx(0.47368, abs=1e-5)
        assert score == pytest.approx(-w * np.tanh(1.0), abs=1e-15)
        assert score == pytest.approx(-0.3607551265053623, abs=1e-12)
        assert score == pytest.approx(-0.36076, abs=1e-5)

    def test_identity_is_plain_expected_utility(self):
        rng = np.random.default_rng(97)
        for _ in range(30):
            ds, params, hists = random_instance(rng, PwfKind.IDENTITY)
            user = int(rng.integers(0, 3))
            item = int(rng.integers(0, ds.item_count))
            alpha, beta = materialize_alpha_beta(params, item, user)
            eu = sum(
                float(hists.prob_matrix[item, r - 1])
                * utility(r - params.ref_points[user], alpha, beta)
                for r in range(1, 6)
            )
            got = weu_score(params, hists, user, item, PwfKind.IDENTITY)
            assert got == pytest.approx(eu, abs=1e-12)


class TestBruteForce:
    def test_matches_exhaustive_sum(self):
        rng = np.random.default_rng(101)
        for kind in PwfKind:
            for _ in range(20):
                ds, params, hists = random_instance(rng, kind)
                user = int(rng.integers(0, 3))
                items = np.arange(ds.item_count)
                scores = score_items(params, hists, user, items, kind)
                for item in items:
                    want = brute_force_score(params, hists, user, int(item), kind)
                    assert scores[item] == pytest.approx(want, abs=1e-12)

    def test_monotone_response_to_mass_shift(self):
        # moving one unit of histogram mass to a higher rating never lowers
        # an identity-weighted score when both scales are positive
        rng = np.random.default_rng(103)
        for _ in range(50):
            counts = rng.integers(0, 5, size=5)
            counts[int(rng.integers(0, 4))] += 1  # ensure movable mass below 5
            ds = make_dataset(
                train=[(0, 0, r + 1, t) for r in range(5) for t in [0] * int(counts[r])],
                user_count=1,
                item_count=1,
            )
            params = init_weu_parameters(PwfKind.IDENTITY, ds, latent_dim=2, seed=0)
            params.ref_points[0] = float(rng.uniform(1, 5))
            hists_before = build_histograms(ds.train, 1, 5)
            movable = [r for r in range(4) if hists_before.per_item[0].counts[r] > 0]
            r_from = int(rng.choice(movable))
            r_to = int(rng.integers(r_from + 1, 5))
            shifted = list(ds.train)
            shifted.remove((0, 0, r_from + 1, 0))
            shifted.append((0, 0, r_to + 1, 0))
            ds2 = make_dataset(shifted, user_count=1, item_count=1)
            hists_after = build_histograms(ds2.train, 1, 5)
            before = weu_score(params, hists_before, 0, 0, PwfKind.IDENTITY)
            after = weu_score(params, hists_after, 0, 0, PwfKind.IDENTITY)
            assert after >= before - 1e-12


class TestRanking:
    def test_sorted_descending(self):
        rng = np.random.default_rng(107)
        ds, params, hists = random_instance(rng, PwfKind.TF_PLUS, item_count=5)
        request = ScoreRequest(user=0, candidates=[0, 1, 2, 3, 4], kind=PwfKind.TF_PLUS)
        ranked = rank_candidates(params, hists, request)
        scores = [s for _, s in ranked]
        assert scores == sorted(scores, reverse=True)
        assert sorted(i for i, _ in ranked) == [0, 1, 2, 3, 4]

    def test_equal_scores_break_by_index(self):
        # identical histograms and item-independent parameters give every
        # candidate the same score
        ds = make_dataset(
            train=[(0, i, 3, i) for i in range(4)], user_count=1, item_count=4
        )
        params = init_weu_parameters(PwfKind.IDENTITY, ds, latent_dim=2, seed=0)
        params.i_alpha[:] = 0.0
        params.j_alpha[:] = 0.0
        params.i_beta[:] = 0.0
        params.j_beta[:] = 0.0
        hists = build_histograms(ds.train, ds.item_count, ds.r_max)
        request = ScoreRequest(user=0, candidates=[2, 0, 3, 1], kind=PwfKind.IDENTITY)
        ranked = rank_candidates(params, hists, request)
        assert [i for i, _ in ranked] == [0, 1, 2, 3]

    def test_empty_candidates_raise(self):
        rng = np.random.default_rng(109)
        ds, params, hists = random_instance(rng, PwfKind.TF)
        with pytest.raises(ValueError):
            rank_candidates(params, hists, ScoreRequest(0, [], PwfKind.TF))

    def test_scorer_callable_matches_score_items(self):
        rng = np.random.default_rng(113)
        ds, params, hists = random_instance(rng, PwfKind.PRELEC_PLUS)
        scorer = WeuScorer(params, hists, PwfKind.PRELEC_PLUS)
        items = np.array([4, 0, 2])
        np.testing.assert_array_equal(
            scorer(1, items), score_items(params, hists, 1, items, PwfKind.PRELEC_PLUS)
        )


class TestOrderByScore:
    def test_shift_invariance(self):
        rng = np.random.default_rng(127)
        for _ in range(100):
            n = int(rng.integers(2, 30))
            candidates = rng.permutation(1000)[:n]
            scores = rng.normal(size=n)
            c = float(rng.normal() * 10)
            base = order_by_score(candidates, scores)
            shifted = order_by_score(candidates, scores + c)
            np.testing.assert_array_equal(base, shifted)

    def test_two_scores(self):
        order = order_by_score(np.array([7, 9]), np.array([0.5, 0.2]))
        assert order.tolist() == [0, 1]
        order = order_by_score(np.array([9, 7]), np.array([0.2, 0.5]))
        assert order.tolist() == [1, 0]

    def test_tie_prefers_lower_item(self):
        order = order_by_score(np.array([9, 7, 8]), np.array([1.0, 1.0, 1.0]))
        assert order.tolist() == [1, 2, 0]
