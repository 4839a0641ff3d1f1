"""Gain/loss-asymmetric utility and the learnable parameter store.

Utility scales (alpha for gains, beta for losses) materialize per
(item, user) from a global bias, an item bias, a user bias, and a latent
dot product.  The weighting parameters (delta, gamma, theta) and the
reference point materialize per user.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from . import seeding
from .data import SplitDataset
from .weighting import PwfKind, PwfParams

# Fresh-model bias values: symmetric utility, mid-range weighting.
INIT_ALPHA = 1.0
INIT_BETA = 1.0
INIT_DELTA = 0.5
INIT_GAMMA = 1.0
INIT_THETA = 1.0
LATENT_INIT_SCALE = 0.01

_ARRAY_FIELDS = (
    "b_alpha", "l_alpha", "i_alpha", "j_alpha",
    "b_beta", "l_beta", "i_beta", "j_beta",
    "l_delta", "l_gamma", "l_theta", "ref_points",
)
_SCALAR_FIELDS = ("a_alpha", "a_beta", "a_delta", "a_gamma", "a_theta")


@dataclass
class WeuParameters:
    """Every learnable quantity of one weighted-expected-utility model.

    Only the training loop writes to these arrays; every other module
    treats an instance as read-only.
    """

    kind: PwfKind
    user_count: int
    item_count: int
    latent_dim: int
    r_max: int
    a_alpha: float
    b_alpha: np.ndarray  # (item_count,)
    l_alpha: np.ndarray  # (user_count,)
    i_alpha: np.ndarray  # (item_count, latent_dim)
    j_alpha: np.ndarray  # (user_count, latent_dim)
    a_beta: float
    b_beta: np.ndarray
    l_beta: np.ndarray
    i_beta: np.ndarray
    j_beta: np.ndarray
    a_delta: float
    l_delta: np.ndarray  # (user_count,)
    a_gamma: float
    l_gamma: np.ndarray
    a_theta: float
    l_theta: np.ndarray
    ref_points: np.ndarray  # (user_count,)

    def copy(self) -> "WeuParameters":
        kwargs = {}
        for f in fields(self):
            value = getattr(self, f.name)
            kwargs[f.name] = value.copy() if isinstance(value, np.ndarray) else value
        return WeuParameters(**kwargs)


def init_weu_parameters(
    kind: PwfKind, dataset: SplitDataset, latent_dim: int = 64, seed: int = 0
) -> WeuParameters:
    """Fresh parameters: neutral biases, tiny random latents, data-driven
    reference points.

    Each user's reference point starts at their mean training rating
    (users without training records fall back to the global training mean,
    or the rating-scale midpoint on an empty train set), clipped into
    [1, r_max].
    """
    rng = seeding.stream(seed, seeding.INIT)
    scale = LATENT_INIT_SCALE / np.sqrt(latent_dim)

    def latents(rows: int) -> np.ndarray:
        return rng.uniform(-scale, scale, size=(rows, latent_dim))

    sums = np.zeros(dataset.user_count)
    counts = np.zeros(dataset.user_count)
    for rec in dataset.train:
        sums[rec.user] += rec.rating
        counts[rec.user] += 1
    global_mean = sums.sum() / counts.sum() if counts.sum() > 0 else (1 + dataset.r_max) / 2
    ref = np.where(counts > 0, sums / np.maximum(counts, 1), global_mean)
    ref = np.clip(ref, 1.0, float(dataset.r_max))

    return WeuParameters(
        kind=kind,
        user_count=dataset.user_count,
        item_count=dataset.item_count,
        latent_dim=latent_dim,
        r_max=dataset.r_max,
        a_alpha=INIT_ALPHA,
        b_alpha=np.zeros(dataset.item_count),
        l_alpha=np.zeros(dataset.user_count),
        i_alpha=latents(dataset.item_count),
        j_alpha=latents(dataset.user_count),
        a_beta=INIT_BETA,
        b_beta=np.zeros(dataset.item_count),
        l_beta=np.zeros(dataset.user_count),
        i_beta=latents(dataset.item_count),
        j_beta=latents(dataset.user_count),
        a_delta=INIT_DELTA,
        l_delta=np.zeros(dataset.user_count),
        a_gamma=INIT_GAMMA,
        l_gamma=np.zeros(dataset.user_count),
        a_theta=INIT_THETA,
        l_theta=np.zeros(dataset.user_count),
        ref_points=ref,
    )


def outcome(rating, ref_point):
    """Signed satisfaction: rating minus the reference point."""
    return rating - ref_point


def utility(o, alpha, beta):
    """alpha*tanh(o) for o >= 0, beta*tanh(o) otherwise.

    The o = 0 boundary belongs to the gain branch.  Accepts scalars or
    broadcastable arrays.
    """
    o_arr = np.asarray(o, dtype=float)
    value = np.where(o_arr >= 0.0, alpha, beta) * np.tanh(o_arr)
    return float(value) if np.ndim(value) == 0 else value


def materialize_alpha_beta(params: WeuParameters, item, user: int):
    """(alpha, beta) for one user against one item or an item array.

    Each scale is global bias + item bias + user bias + latent dot.
    """
    alpha = (
        params.a_alpha
        + params.b_alpha[item]
        + params.l_alpha[user]
        + params.i_alpha[item] @ params.j_alpha[user]
    )
    beta = (
        params.a_beta
        + params.b_beta[item]
        + params.l_beta[user]
        + params.i_beta[item] @ params.j_beta[user]
    )
    if np.ndim(item) == 0:
        return float(alpha), float(beta)
    return alpha, beta


def materialize_pwf_params(params: WeuParameters, user: int, kind: PwfKind | None = None) -> PwfParams:
    """One user's weighting parameters; theta is pinned to 1 unless the
    kind learns it.

    Returned values are the raw bias sums: training keeps them inside
    their bounds by projecting after every step.
    """
    if kind is None:
        kind = params.kind
    theta = params.a_theta + params.l_theta[user] if kind.theta_is_free else 1.0
    return PwfParams(
        delta=float(params.a_delta + params.l_delta[user]),
        gamma=float(params.a_gamma + params.l_gamma[user]),
        theta=float(theta),
    )


def save_params(params: WeuParameters, path, model_type: str | None = None) -> None:
    """Serialize to a single JSON document with shape metadata and flat
    arrays; float repr round-trips exactly.
    """
    doc = {
        "model_type": model_type or params.kind.value,
        "kind": params.kind.value,
        "user_count": params.user_count,
        "item_count": params.item_count,
        "latent_dim": params.latent_dim,
        "r_max": params.r_max,
        "arrays": {name: np.asarray(getattr(params, name)).ravel().tolist() for name in _ARRAY_FIELDS},
        "scalars": {name: float(getattr(params, name)) for name in _SCALAR_FIELDS},
    }
    Path(path).write_text(json.dumps(doc), encoding="utf-8")


def _array_shape(name: str, user_count: int, item_count: int, latent_dim: int) -> tuple[int, ...]:
    if name.startswith("b_"):
        return (item_count,)
    if name.startswith("i_"):
        return (item_count, latent_dim)
    if name.startswith("j_"):
        return (user_count, latent_dim)
    return (user_count,)  # l_* and ref_points


def load_params(path) -> WeuParameters:
    """Read back a document written by save_params."""
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    kind = PwfKind(doc["kind"])
    user_count, item_count, latent_dim = doc["user_count"], doc["item_count"], doc["latent_dim"]
    kwargs = dict(
        kind=kind,
        user_count=user_count,
        item_count=item_count,
        latent_dim=latent_dim,
        r_max=doc["r_max"],
    )
    for name in _SCALAR_FIELDS:
        kwargs[name] = float(doc["scalars"][name])
    for name in _ARRAY_FIELDS:
        shape = _array_shape(name, user_count, item_count, latent_dim)
        kwargs[name] = np.asarray(doc["arrays"][name], dtype=float).reshape(shape)
    return WeuParameters(**kwargs)
