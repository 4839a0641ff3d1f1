"""Classical baselines under the same data and evaluation protocol:
a biased latent-factor rating predictor trained on squared error, and a
pairwise ranker trained on sampled (positive, negative) item pairs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from . import seeding
from .data import SplitDataset, items_by_user
from .evaluation import EvalConfig, evaluate
from .training import TrainConfig, TraceRow

LATENT_INIT_SCALE = 0.01


@dataclass
class MfParameters:
    """Global bias, item/user biases, and latent factors."""

    user_count: int
    item_count: int
    latent_dim: int
    a: float
    b: np.ndarray  # (item_count,) item biases
    l: np.ndarray  # (user_count,) user biases
    q: np.ndarray  # (item_count, latent_dim) item latents
    p: np.ndarray  # (user_count, latent_dim) user latents

    def copy(self) -> "MfParameters":
        kwargs = {}
        for f in fields(self):
            value = getattr(self, f.name)
            kwargs[f.name] = value.copy() if isinstance(value, np.ndarray) else value
        return MfParameters(**kwargs)


def init_mf_parameters(
    dataset: SplitDataset, latent_dim: int, seed: int, global_bias: float | None = None
) -> MfParameters:
    """Zero biases, tiny uniform latents.  The global bias defaults to the
    mean training rating (pass 0.0 for rating-free pairwise training)."""
    rng = seeding.stream(seed, seeding.INIT)
    scale = LATENT_INIT_SCALE / np.sqrt(latent_dim)
    if global_bias is None:
        ratings = [r.rating for r in dataset.train]
        global_bias = float(np.mean(ratings)) if ratings else 0.0
    return MfParameters(
        user_count=dataset.user_count,
        item_count=dataset.item_count,
        latent_dim=latent_dim,
        a=global_bias,
        b=np.zeros(dataset.item_count),
        l=np.zeros(dataset.user_count),
        q=rng.uniform(-scale, scale, size=(dataset.item_count, latent_dim)),
        p=rng.uniform(-scale, scale, size=(dataset.user_count, latent_dim)),
    )


def mf_predict(params: MfParameters, item, user: int):
    """Predicted rating: global bias + item bias + user bias + latent dot.

    Accepts a scalar item or an item array.
    """
    value = params.a + params.b[item] + params.l[user] + params.q[item] @ params.p[user]
    return float(value) if np.ndim(item) == 0 else value


@dataclass(frozen=True)
class MfScorer:
    """Callable (user, items) -> scores; ranks by predicted rating (or by
    preference score for pairwise-trained parameters)."""

    params: MfParameters

    def __call__(self, user: int, items: np.ndarray) -> np.ndarray:
        return mf_predict(self.params, items, user)


@dataclass
class MfFitResult:
    params: MfParameters
    trace: list[TraceRow]
    best_epoch: int
    val_metric_name: str


# ---------------------------------------------------------------------------
# Squared-error rating model


def mf_example_objective(
    params: MfParameters, user: int, item: int, rating: float, l2: float = 0.0
) -> float:
    """One record's loss: squared error plus L2 on the touched parameters."""
    err = rating - mf_predict(params, item, user)
    penalty = (
        params.a**2
        + params.b[item] ** 2
        + params.l[user] ** 2
        + float(params.q[item] @ params.q[item])
        + float(params.p[user] @ params.p[user])
    )
    return float(err**2 + l2 * penalty)


def mf_example_gradients(
    params: MfParameters, user: int, item: int, rating: float, l2: float = 0.0
) -> tuple[float, dict]:
    """Loss value and its descent gradients for one record."""
    err = rating - mf_predict(params, item, user)
    two_l2 = 2.0 * l2
    grads = {
        "a": -2.0 * err + two_l2 * params.a,
        "b": -2.0 * err + two_l2 * params.b[item],
        "l": -2.0 * err + two_l2 * params.l[user],
        "q": -2.0 * err * params.p[user] + two_l2 * params.q[item],
        "p": -2.0 * err * params.q[item] + two_l2 * params.p[user],
    }
    objective = mf_example_objective(params, user, item, rating, l2)
    return objective, grads


def _descend(params: MfParameters, velocity: dict, user: int, item: int, grads: dict, lr: float, mu: float) -> None:
    for name, idx in (("a", None), ("b", item), ("l", user), ("q", item), ("p", user)):
        g = grads[name]
        if idx is None:
            v = mu * velocity[name] + g
            velocity[name] = v
            params.a -= lr * v
        else:
            buf = velocity[name]
            buf[idx] = mu * buf[idx] + g
            getattr(params, name)[idx] -= lr * buf[idx]


def _new_velocity(params: MfParameters) -> dict:
    return {
        "a": 0.0,
        "b": np.zeros_like(params.b),
        "l": np.zeros_like(params.l),
        "q": np.zeros_like(params.q),
        "p": np.zeros_like(params.p),
    }


def _val_rmse(params: MfParameters, dataset: SplitDataset) -> float:
    if not dataset.validation:
        return float("nan")
    sq = [
        (r.rating - mf_predict(params, r.item, r.user)) ** 2 for r in dataset.validation
    ]
    return float(np.sqrt(np.mean(sq)))


def mf_fit(dataset: SplitDataset, config: TrainConfig) -> MfFitResult:
    """SGD with momentum on per-record squared error; keeps the epoch with
    the lowest validation RMSE."""
    params = init_mf_parameters(dataset, config.latent_dim, config.seed)
    velocity = _new_velocity(params)
    n = len(dataset.train)
    users = np.fromiter((r.user for r in dataset.train), dtype=np.intp, count=n)
    items = np.fromiter((r.item for r in dataset.train), dtype=np.intp, count=n)
    ratings = np.fromiter((r.rating for r in dataset.train), dtype=float, count=n)

    best = params.copy()
    best_rmse = np.inf
    best_epoch = -1
    trace: list[TraceRow] = []
    for e in range(config.epochs):
        order = seeding.stream(config.seed, seeding.SHUFFLE, e).permutation(n)
        total = 0.0
        for idx in order:
            user, item, rating = int(users[idx]), int(items[idx]), float(ratings[idx])
            objective, grads = mf_example_gradients(params, user, item, rating, config.l2)
            _descend(params, velocity, user, item, grads, config.learning_rate, config.momentum)
            total += objective
        rmse = _val_rmse(params, dataset)
        trace.append(TraceRow(e, total / max(n, 1), rmse))
        if rmse < best_rmse:
            best_rmse = rmse
            best_epoch = e
            best = params.copy()
    return MfFitResult(params=best, trace=trace, best_epoch=best_epoch, val_metric_name="val_rmse")


# ---------------------------------------------------------------------------
# Pairwise preference model


def _pair_score(params: MfParameters, user: int, item: int) -> float:
    # User-independent terms cancel in pairwise differences; the global and
    # user biases stay untouched at their initial values.
    return float(params.b[item] + params.q[item] @ params.p[user])


def bpr_example_objective(
    params: MfParameters, user: int, pos: int, neg: int, l2: float = 0.0
) -> float:
    """ln sigmoid(score difference) minus L2 on the touched parameters."""
    x = _pair_score(params, user, pos) - _pair_score(params, user, neg)
    penalty = (
        params.b[pos] ** 2
        + params.b[neg] ** 2
        + float(params.q[pos] @ params.q[pos])
        + float(params.q[neg] @ params.q[neg])
        + float(params.p[user] @ params.p[user])
    )
    return float(-np.logaddexp(0.0, -x) - l2 * penalty)


def bpr_example_gradients(
    params: MfParameters, user: int, pos: int, neg: int, l2: float = 0.0
) -> tuple[float, dict]:
    """Objective value and ascent gradients for one (user, pos, neg) triple."""
    x = _pair_score(params, user, pos) - _pair_score(params, user, neg)
    ds = float(np.exp(-np.logaddexp(0.0, x)))  # sigmoid(-x), stable at both tails
    two_l2 = 2.0 * l2
    grads = {
        "b_pos": ds - two_l2 * params.b[pos],
        "b_neg": -ds - two_l2 * params.b[neg],
        "q_pos": ds * params.p[user] - two_l2 * params.q[pos],
        "q_neg": -ds * params.p[user] - two_l2 * params.q[neg],
        "p": ds * (params.q[pos] - params.q[neg]) - two_l2 * params.p[user],
    }
    return bpr_example_objective(params, user, pos, neg, l2), grads


def bpr_fit(
    dataset: SplitDataset, config: TrainConfig, eval_config: EvalConfig | None = None
) -> MfFitResult:
    """Pairwise SGD over (user, purchased, sampled-unpurchased) triples.

    Negatives are uniform over items the user did not purchase in train,
    resampled per epoch.  Keeps the epoch with the best validation
    NDCG@10.
    """
    params = init_mf_parameters(dataset, config.latent_dim, config.seed, global_bias=0.0)
    velocity = _new_velocity(params)
    purchased = items_by_user(dataset.train, dataset.user_count)
    n = len(dataset.train)
    users = np.fromiter((r.user for r in dataset.train), dtype=np.intp, count=n)
    items = np.fromiter((r.item for r in dataset.train), dtype=np.intp, count=n)
    negatives = eval_config.negatives if eval_config is not None else 1000
    val_config = EvalConfig(negatives=negatives, cutoffs=(10,), seed=config.seed)

    best = params.copy()
    best_ndcg = -np.inf
    best_epoch = -1
    trace: list[TraceRow] = []
    for e in range(config.epochs):
        order = seeding.stream(config.seed, seeding.SHUFFLE, e).permutation(n)
        neg_rng = seeding.stream(config.seed, seeding.CANDIDATES, e)
        total = 0.0
        count = 0
        for idx in order:
            user, pos = int(users[idx]), int(items[idx])
            if len(purchased[user]) >= dataset.item_count:
                continue  # no negative exists for this user
            neg = int(neg_rng.integers(dataset.item_count))
            while neg in purchased[user]:
                neg = int(neg_rng.integers(dataset.item_count))
            objective, grads = bpr_example_gradients(params, user, pos, neg, config.l2)
            vb, vq, vp = velocity["b"], velocity["q"], velocity["p"]
            lr, mu = config.learning_rate, config.momentum
            for name, arr, buf, index in (
                ("b_pos", params.b, vb, pos),
                ("b_neg", params.b, vb, neg),
                ("q_pos", params.q, vq, pos),
                ("q_neg", params.q, vq, neg),
                ("p", params.p, vp, user),
            ):
                buf[index] = mu * buf[index] + grads[name]
                arr[index] += lr * buf[index]
            total += objective
            count += 1
        metrics = evaluate(MfScorer(params), dataset, val_config, partition="validation")
        ndcg10 = metrics.at[10].ndcg
        trace.append(TraceRow(e, total / max(count, 1), ndcg10))
        if ndcg10 > best_ndcg:
            best_ndcg = ndcg10
            best_epoch = e
            best = params.copy()
    return MfFitResult(params=best, trace=trace, best_epoch=best_epoch, val_metric_name="val_ndcg10")


# ---------------------------------------------------------------------------
# Serialization (same document style as the main parameter store)

_MF_ARRAYS = ("b", "l", "q", "p")


def save_mf_params(params: MfParameters, path, model_type: str) -> None:
    doc = {
        "model_type": model_type,
        "user_count": params.user_count,
        "item_count": params.item_count,
        "latent_dim": params.latent_dim,
        "arrays": {name: np.asarray(getattr(params, name)).ravel().tolist() for name in _MF_ARRAYS},
        "scalars": {"a": float(params.a)},
    }
    Path(path).write_text(json.dumps(doc), encoding="utf-8")


def load_mf_params(path) -> tuple[MfParameters, str]:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    user_count, item_count, latent_dim = doc["user_count"], doc["item_count"], doc["latent_dim"]
    shapes = {
        "b": (item_count,),
        "l": (user_count,),
        "q": (item_count, latent_dim),
        "p": (user_count, latent_dim),
    }
    arrays = {
        name: np.asarray(doc["arrays"][name], dtype=float).reshape(shapes[name])
        for name in _MF_ARRAYS
    }
    params = MfParameters(
        user_count=user_count,
        item_count=item_count,
        latent_dim=latent_dim,
        a=float(doc["scalars"]["a"]),
        **arrays,
    )
    return params, doc["model_type"]
