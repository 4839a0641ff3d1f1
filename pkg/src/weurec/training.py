"""Discrete-choice training of the weighted-expected-utility model.

Each training purchase is treated as a choice of the purchased item over a
uniformly sampled candidate set.  One SGD-with-momentum ascent step per
pair maximizes the log choice probability minus an L2 penalty on every
parameter the pair touches; bounded parameters are clipped back into their
domains after every step.  Gradients flow through the utility and the
weighting but never through the empirical probabilities, which are data.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np

from . import seeding
from .data import SplitDataset
from .evaluation import EvalConfig, evaluate
from .scoring import WeuScorer
from .utility import (
    WeuParameters,
    init_weu_parameters,
    materialize_alpha_beta,
    materialize_pwf_params,
    save_params,
)
from .weighting import HistogramStore, PwfKind, build_histograms, weight_with_grads


@dataclass(frozen=True)
class TrainConfig:
    """Optimization knobs for the choice-model SGD loop."""

    kind: PwfKind
    epochs: int = 20
    learning_rate: float = 0.05
    momentum: float = 0.0
    l2: float = 1e-3
    candidate_set_size: int = 11
    latent_dim: int = 64
    seed: int = 0
    noise_enabled: bool = True
    projection_epsilon: float = 1e-3

    def __post_init__(self) -> None:
        if self.candidate_set_size < 2:
            raise ValueError("candidate_set_size must be >= 2")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.l2 < 0:
            raise ValueError("l2 must be non-negative")
        if self.epochs < 0:
            raise ValueError("epochs must be non-negative")
        if not 0 <= self.momentum < 1:
            raise ValueError("momentum must lie in [0, 1)")


@dataclass
class TrainState:
    """Mutable cross-epoch state: epoch counter and momentum buffers."""

    epoch: int
    velocity: dict


def new_train_state(params: WeuParameters) -> TrainState:
    velocity: dict = {}
    for name in (
        "b_alpha", "l_alpha", "i_alpha", "j_alpha",
        "b_beta", "l_beta", "i_beta", "j_beta",
        "l_delta", "l_gamma", "l_theta", "ref_points",
    ):
        velocity[name] = np.zeros_like(getattr(params, name))
    for name in ("a_alpha", "a_beta", "a_delta", "a_gamma", "a_theta"):
        velocity[name] = 0.0
    return TrainState(epoch=0, velocity=velocity)


def sample_candidates(
    rng: np.random.Generator, positive_item: int, item_count: int, n: int
) -> np.ndarray:
    """The positive item plus n-1 distinct others drawn uniformly.

    The positive sits at index 0 of the returned array.
    """
    if n > item_count:
        raise ValueError(f"candidate set size {n} exceeds catalog size {item_count}")
    others = rng.choice(item_count - 1, size=n - 1, replace=False)
    others = others + (others >= positive_item)  # skip over the positive index
    return np.concatenate(([positive_item], others)).astype(np.intp)


def choice_log_prob(scores, positive_position: int, noise=None) -> float:
    """Log softmax of (scores + noise) at the positive position.

    Stabilized by max subtraction; noise, when present, must be one draw
    per candidate.
    """
    logits = np.asarray(scores, dtype=float)
    if logits.size == 0:
        raise ValueError("scores must be non-empty")
    if noise is not None:
        noise = np.asarray(noise, dtype=float)
        if noise.shape != logits.shape:
            raise ValueError("noise must have one entry per candidate")
        logits = logits + noise
    m = logits.max()
    return float(logits[positive_position] - m - math.log(np.exp(logits - m).sum()))


@dataclass
class PairGrads:
    """Ascent gradients of one pair's regularized objective.

    Per-candidate arrays align with `candidates`; user-level entries are
    scalars.  A None entry means the parameter is not learned under the
    current weighting kind.
    """

    user: int
    candidates: np.ndarray
    a_alpha: float
    b_alpha: np.ndarray
    l_alpha: float
    i_alpha: np.ndarray
    j_alpha: np.ndarray
    a_beta: float
    b_beta: np.ndarray
    l_beta: float
    i_beta: np.ndarray
    j_beta: np.ndarray
    a_delta: float | None
    l_delta: float | None
    a_gamma: float | None
    l_gamma: float | None
    a_theta: float | None
    l_theta: float | None
    ref: float


def _pair_forward_backward(
    params: WeuParameters,
    hists: HistogramStore,
    user: int,
    candidates: np.ndarray,
    positive_position: int,
    l2: float,
    noise,
    want_grads: bool,
):
    kind = params.kind
    candidates = np.asarray(candidates, dtype=np.intp)
    levels = np.arange(1, params.r_max + 1, dtype=float)
    o = levels - params.ref_points[user]
    tanh_o = np.tanh(o)
    gain = o >= 0.0

    alpha, beta = materialize_alpha_beta(params, candidates, user)
    alpha = np.asarray(alpha)
    beta = np.asarray(beta)
    pw = materialize_pwf_params(params, user, kind)
    probs = hists.prob_matrix[candidates]
    w, dw_dd, dw_dg, dw_dt = weight_with_grads(kind, probs, pw.delta, pw.gamma, pw.theta)

    scale = np.where(gain[None, :], alpha[:, None], beta[:, None])
    u_val = scale * tanh_o[None, :]
    scores = (u_val * w).sum(axis=1)

    log_prob = choice_log_prob(scores, positive_position, noise)

    # Touched-parameter L2 penalty: both utility-scale families, the user's
    # reference point, and whichever weighting biases the kind learns.
    penalty = (
        params.a_alpha**2
        + params.a_beta**2
        + float(params.b_alpha[candidates] @ params.b_alpha[candidates])
        + float(params.b_beta[candidates] @ params.b_beta[candidates])
        + params.l_alpha[user] ** 2
        + params.l_beta[user] ** 2
        + float((params.i_alpha[candidates] ** 2).sum())
        + float((params.i_beta[candidates] ** 2).sum())
        + float(params.j_alpha[user] @ params.j_alpha[user])
        + float(params.j_beta[user] @ params.j_beta[user])
        + float(params.ref_points[user] ** 2)
    )
    if kind.has_weighting:
        penalty += params.a_delta**2 + params.l_delta[user] ** 2
        penalty += params.a_gamma**2 + params.l_gamma[user] ** 2
        if kind.theta_is_free:
            penalty += params.a_theta**2 + params.l_theta[user] ** 2
    objective = float(log_prob - l2 * penalty)

    if not want_grads:
        return objective, None

    logits = scores if noise is None else scores + np.asarray(noise, dtype=float)
    shifted = logits - logits.max()
    soft = np.exp(shifted)
    soft /= soft.sum()
    g = -soft
    g[positive_position] += 1.0

    # Per-candidate partials of the score.
    d_alpha = (w * (tanh_o * gain)[None, :]).sum(axis=1)
    d_beta = (w * (tanh_o * ~gain)[None, :]).sum(axis=1)
    d_ref = -(w * scale * (1.0 - tanh_o**2)[None, :]).sum(axis=1)

    coeff_a = g * d_alpha
    coeff_b = g * d_beta
    two_l2 = 2.0 * l2

    grads = PairGrads(
        user=user,
        candidates=candidates,
        a_alpha=float(coeff_a.sum()) - two_l2 * params.a_alpha,
        b_alpha=coeff_a - two_l2 * params.b_alpha[candidates],
        l_alpha=float(coeff_a.sum()) - two_l2 * params.l_alpha[user],
        i_alpha=coeff_a[:, None] * params.j_alpha[user][None, :] - two_l2 * params.i_alpha[candidates],
        j_alpha=coeff_a @ params.i_alpha[candidates] - two_l2 * params.j_alpha[user],
        a_beta=float(coeff_b.sum()) - two_l2 * params.a_beta,
        b_beta=coeff_b - two_l2 * params.b_beta[candidates],
        l_beta=float(coeff_b.sum()) - two_l2 * params.l_beta[user],
        i_beta=coeff_b[:, None] * params.j_beta[user][None, :] - two_l2 * params.i_beta[candidates],
        j_beta=coeff_b @ params.i_beta[candidates] - two_l2 * params.j_beta[user],
        a_delta=None,
        l_delta=None,
        a_gamma=None,
        l_gamma=None,
        a_theta=None,
        l_theta=None,
        ref=float(g @ d_ref) - two_l2 * params.ref_points[user],
    )
    if kind.has_weighting:
        d_delta = float(g @ (u_val * dw_dd).sum(axis=1))
        d_gamma = float(g @ (u_val * dw_dg).sum(axis=1))
        grads.a_delta = d_delta - two_l2 * params.a_delta
        grads.l_delta = d_delta - two_l2 * params.l_delta[user]
        grads.a_gamma = d_gamma - two_l2 * params.a_gamma
        grads.l_gamma = d_gamma - two_l2 * params.l_gamma[user]
        if kind.theta_is_free:
            d_theta = float(g @ (u_val * dw_dt).sum(axis=1))
            grads.a_theta = d_theta - two_l2 * params.a_theta
            grads.l_theta = d_theta - two_l2 * params.l_theta[user]
    return objective, grads


def pair_objective(
    params: WeuParameters,
    hists: HistogramStore,
    user: int,
    candidates,
    positive_position: int,
    l2: float = 0.0,
    noise=None,
) -> float:
    """Regularized per-pair objective: log choice probability minus the L2
    penalty on touched parameters.  Noise is treated as fixed data.
    """
    objective, _ = _pair_forward_backward(
        params, hists, user, np.asarray(candidates), positive_position, l2, noise, want_grads=False
    )
    return objective


def pair_gradients(
    params: WeuParameters,
    hists: HistogramStore,
    user: int,
    candidates,
    positive_position: int,
    l2: float = 0.0,
    noise=None,
) -> tuple[float, PairGrads]:
    """Objective value and analytic ascent gradients for one pair."""
    objective, grads = _pair_forward_backward(
        params, hists, user, np.asarray(candidates), positive_position, l2, noise, want_grads=True
    )
    return objective, grads


def _apply_step(
    params: WeuParameters, velocity: dict, grads: PairGrads, lr: float, mu: float
) -> None:
    c, u = grads.candidates, grads.user

    def scalar(name: str, g) -> None:
        if g is None:
            return
        v = mu * velocity[name] + g
        velocity[name] = v
        setattr(params, name, getattr(params, name) + lr * v)

    def rows(name: str, idx, g) -> None:
        if g is None:
            return
        buf = velocity[name]
        buf[idx] = mu * buf[idx] + g
        getattr(params, name)[idx] += lr * buf[idx]

    scalar("a_alpha", grads.a_alpha)
    rows("b_alpha", c, grads.b_alpha)
    rows("l_alpha", u, grads.l_alpha)
    rows("i_alpha", c, grads.i_alpha)
    rows("j_alpha", u, grads.j_alpha)
    scalar("a_beta", grads.a_beta)
    rows("b_beta", c, grads.b_beta)
    rows("l_beta", u, grads.l_beta)
    rows("i_beta", c, grads.i_beta)
    rows("j_beta", u, grads.j_beta)
    scalar("a_delta", grads.a_delta)
    rows("l_delta", u, grads.l_delta)
    scalar("a_gamma", grads.a_gamma)
    rows("l_gamma", u, grads.l_gamma)
    scalar("a_theta", grads.a_theta)
    rows("l_theta", u, grads.l_theta)
    rows("ref_points", u, grads.ref)


def _project_user(params: WeuParameters, user: int, eps: float) -> None:
    """Clip one user's materialized values back into their domains.

    The global bias is clamped first, then the user offset is clipped so
    the sum lands in bounds.
    """
    kind = params.kind
    if kind.has_weighting:
        params.a_delta = min(max(params.a_delta, eps), 1.0 - eps)
        params.l_delta[user] = min(
            max(params.l_delta[user], eps - params.a_delta), (1.0 - eps) - params.a_delta
        )
        params.a_gamma = max(params.a_gamma, eps)
        params.l_gamma[user] = max(params.l_gamma[user], eps - params.a_gamma)
        if kind.theta_is_free:
            params.a_theta = min(max(params.a_theta, eps), 1.0)
            params.l_theta[user] = min(
                max(params.l_theta[user], eps - params.a_theta), 1.0 - params.a_theta
            )
    params.ref_points[user] = min(max(params.ref_points[user], 1.0), float(params.r_max))


def _project_all(params: WeuParameters, eps: float) -> None:
    """Full projection sweep: every user's materialized values in bounds."""
    kind = params.kind
    if kind.has_weighting:
        params.a_delta = min(max(params.a_delta, eps), 1.0 - eps)
        np.clip(
            params.l_delta, eps - params.a_delta, (1.0 - eps) - params.a_delta, out=params.l_delta
        )
        params.a_gamma = max(params.a_gamma, eps)
        np.clip(params.l_gamma, eps - params.a_gamma, None, out=params.l_gamma)
        if kind.theta_is_free:
            params.a_theta = min(max(params.a_theta, eps), 1.0)
            np.clip(
                params.l_theta, eps - params.a_theta, 1.0 - params.a_theta, out=params.l_theta
            )
    np.clip(params.ref_points, 1.0, float(params.r_max), out=params.ref_points)


def _check_shapes(params: WeuParameters, dataset: SplitDataset, config: TrainConfig) -> None:
    if (
        params.user_count != dataset.user_count
        or params.item_count != dataset.item_count
        or params.r_max != dataset.r_max
    ):
        raise ValueError(
            "configuration mismatch: parameters are "
            f"({params.user_count} users, {params.item_count} items, r_max {params.r_max}) "
            f"but dataset is ({dataset.user_count} users, {dataset.item_count} items, "
            f"r_max {dataset.r_max})"
        )
    if params.kind is not config.kind:
        raise ValueError(f"configuration mismatch: parameters are {params.kind.value}, config wants {config.kind.value}")


def epoch(
    params: WeuParameters,
    dataset: SplitDataset,
    hists: HistogramStore,
    config: TrainConfig,
    state: TrainState | None = None,
) -> tuple[WeuParameters, float]:
    """One pass over the training pairs in a seeded-shuffled order.

    Mutates params in place and returns (params, mean per-pair objective).
    Each pair resamples its candidate set and, when enabled, fresh
    Gaussian(1, 1) noise per candidate.
    """
    _check_shapes(params, dataset, config)
    if state is None:
        state = new_train_state(params)
    n = len(dataset.train)
    if n == 0:
        state.epoch += 1
        return params, 0.0

    users = np.fromiter((r.user for r in dataset.train), dtype=np.intp, count=n)
    items = np.fromiter((r.item for r in dataset.train), dtype=np.intp, count=n)
    e = state.epoch
    order = seeding.stream(config.seed, seeding.SHUFFLE, e).permutation(n)
    cand_rng = seeding.stream(config.seed, seeding.CANDIDATES, e)
    noise_rng = seeding.stream(config.seed, seeding.NOISE, e)
    eps = config.projection_epsilon

    total = 0.0
    for idx in order:
        user = int(users[idx])
        cands = sample_candidates(cand_rng, int(items[idx]), dataset.item_count, config.candidate_set_size)
        noise = noise_rng.normal(1.0, 1.0, cands.size) if config.noise_enabled else None
        # Global-bias motion since the last sweep can push an untouched
        # user slightly out of bounds; re-project before scoring with them.
        _project_user(params, user, eps)
        objective, grads = pair_gradients(
            params, hists, user, cands, 0, l2=config.l2, noise=noise
        )
        _apply_step(params, state.velocity, grads, config.learning_rate, config.momentum)
        _project_user(params, user, eps)
        total += objective

    _project_all(params, eps)
    state.epoch += 1
    return params, float(total / n)


class TraceRow(NamedTuple):
    epoch: int
    objective: float
    val_ndcg10: float


@dataclass
class FitResult:
    """Selected parameters plus the per-epoch training trace."""

    params: WeuParameters
    hists: HistogramStore
    trace: list[TraceRow]
    best_epoch: int
    state: TrainState
    val_metric_name: str = "val_ndcg10"


def fit(dataset: SplitDataset, config: TrainConfig, eval_config: EvalConfig | None = None) -> FitResult:
    """Run the configured number of epochs and keep the parameters with the
    best validation NDCG@10.

    Zero epochs returns the initialization unchanged.
    """
    params = init_weu_parameters(config.kind, dataset, config.latent_dim, config.seed)
    hists = build_histograms(dataset.train, dataset.item_count, dataset.r_max)
    negatives = eval_config.negatives if eval_config is not None else 1000
    val_config = EvalConfig(negatives=negatives, cutoffs=(10,), seed=config.seed)

    state = new_train_state(params)
    best = params.copy()
    best_ndcg = -np.inf
    best_epoch = -1
    trace: list[TraceRow] = []
    for e in range(config.epochs):
        params, objective = epoch(params, dataset, hists, config, state)
        metrics = evaluate(
            WeuScorer(params, hists, config.kind), dataset, val_config, partition="validation"
        )
        ndcg10 = metrics.at[10].ndcg
        trace.append(TraceRow(e, objective, ndcg10))
        if ndcg10 > best_ndcg:
            best_ndcg = ndcg10
            best_epoch = e
            best = params.copy()
    return FitResult(
        params=best, hists=hists, trace=trace, best_epoch=best_epoch, state=state
    )


def save_checkpoint(
    params: WeuParameters, state: TrainState, config: TrainConfig, path
) -> None:
    """Write the parameter store plus a sidecar training-state document.

    The sidecar records the end-of-training state: epoch counter, the rng
    derivation (run seed and next epoch index fully determine upcoming
    streams), and the momentum buffers.
    """
    save_params(params, path)
    sidecar = {
        "epoch": state.epoch,
        "rng": {"seed": config.seed, "next_epoch": state.epoch},
        "momentum_buffers": {
            name: (np.asarray(v).ravel().tolist() if isinstance(v, np.ndarray) else float(v))
            for name, v in state.velocity.items()
        },
    }
    Path(str(path) + ".state.json").write_text(json.dumps(sidecar), encoding="utf-8")
