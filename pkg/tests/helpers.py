"""Builders and gradient-check utilities shared across test modules."""

import numpy as np

from weurec.data import IdMap, InteractionRecord, SplitDataset
from weurec.utility import init_weu_parameters
from weurec.weighting import build_histograms


def make_dataset(train, validation=(), test=(), user_count=None, item_count=None, r_max=5):
    """Assemble a SplitDataset from bare (user, item, rating, timestamp) rows.

    Counts default to one past the largest index seen, so small hand-built
    cases stay terse.
    """
    train = tuple(InteractionRecord(*r) for r in train)
    validation = tuple(InteractionRecord(*r) for r in validation)
    test = tuple(InteractionRecord(*r) for r in test)
    everything = train + validation + test
    if user_count is None:
        user_count = max(r.user for r in everything) + 1
    if item_count is None:
        item_count = max(r.item for r in everything) + 1
    return SplitDataset(
        train=train,
        validation=validation,
        test=test,
        user_count=user_count,
        item_count=item_count,
        r_max=r_max,
        user_ids=IdMap.from_raw_ids([f"u{j}" for j in range(user_count)]),
        item_ids=IdMap.from_raw_ids([f"i{i}" for i in range(item_count)]),
    )


def random_dataset(rng, user_count=6, item_count=10, train_per_user=5, r_max=5):
    """Random dataset where every user also holds one validation and one
    test record on items distinct from their train items."""
    assert item_count >= train_per_user + 2
    train, validation, test = [], [], []
    for user in range(user_count):
        items = rng.permutation(item_count)[: train_per_user + 2]
        for t, item in enumerate(items[:train_per_user]):
            train.append((user, int(item), int(rng.integers(1, r_max + 1)), t))
        validation.append(
            (user, int(items[train_per_user]), int(rng.integers(1, r_max + 1)), train_per_user)
        )
        test.append(
            (user, int(items[train_per_user + 1]), int(rng.integers(1, r_max + 1)), train_per_user + 1)
        )
    return make_dataset(
        train, validation, test, user_count=user_count, item_count=item_count, r_max=r_max
    )


def interior_weu_instance(rng, kind, user_count=3, item_count=6, latent_dim=3, r_max=5):
    """Random instance with every parameter strictly inside its feasible
    region and reference points kept away from integer rating levels, so a
    central difference stencil never crosses a kink or a bound.
    """
    rows = []
    t = 0
    for i in range(item_count):
        for _ in range(int(rng.integers(2, 6))):
            rows.append((int(rng.integers(0, user_count)), i, int(rng.integers(1, r_max + 1)), t))
            t += 1
    ds = make_dataset(rows, user_count=user_count, item_count=item_count, r_max=r_max)
    params = init_weu_parameters(kind, ds, latent_dim=latent_dim, seed=int(rng.integers(2**31)))
    params.b_alpha[:] = rng.normal(0, 0.3, item_count)
    params.b_beta[:] = rng.normal(0, 0.3, item_count)
    params.l_alpha[:] = rng.normal(0, 0.3, user_count)
    params.l_beta[:] = rng.normal(0, 0.3, user_count)
    for name in ("i_alpha", "j_alpha", "i_beta", "j_beta"):
        arr = getattr(params, name)
        arr[:] = rng.normal(0, 0.2, arr.shape)
    params.a_delta = float(rng.uniform(0.15, 0.8))
    params.l_delta[:] = rng.uniform(-0.05, 0.05, user_count)
    params.a_gamma = float(rng.uniform(0.4, 1.8))
    params.l_gamma[:] = rng.uniform(-0.1, 0.1, user_count)
    params.a_theta = float(rng.uniform(0.3, 0.9))
    params.l_theta[:] = rng.uniform(-0.05, 0.05, user_count)
    ref = rng.uniform(1.1, r_max - 0.1, user_count)
    ref = np.where(np.abs(ref - np.round(ref)) < 0.05, ref + 0.07, ref)
    params.ref_points[:] = ref
    hists = build_histograms(ds.train, ds.item_count, ds.r_max)
    return ds, params, hists


def touched_weu_coords(grads):
    """Map (field, index) -> analytic gradient for every touched coordinate.

    Index None addresses a scalar field; tuples address array entries.
    """
    coords = {
        ("a_alpha", None): grads.a_alpha,
        ("a_beta", None): grads.a_beta,
        ("l_alpha", (grads.user,)): grads.l_alpha,
        ("l_beta", (grads.user,)): grads.l_beta,
        ("ref_points", (grads.user,)): grads.ref,
    }
    for k, item in enumerate(grads.candidates):
        item = int(item)
        coords[("b_alpha", (item,))] = grads.b_alpha[k]
        coords[("b_beta", (item,))] = grads.b_beta[k]
        for f in range(grads.i_alpha.shape[1]):
            coords[("i_alpha", (item, f))] = grads.i_alpha[k, f]
            coords[("i_beta", (item, f))] = grads.i_beta[k, f]
    for f in range(len(grads.j_alpha)):
        coords[("j_alpha", (grads.user, f))] = grads.j_alpha[f]
        coords[("j_beta", (grads.user, f))] = grads.j_beta[f]
    for name, value in (
        ("a_delta", grads.a_delta),
        ("a_gamma", grads.a_gamma),
        ("a_theta", grads.a_theta),
    ):
        if value is not None:
            coords[(name, None)] = value
    for name, value in (
        ("l_delta", grads.l_delta),
        ("l_gamma", grads.l_gamma),
        ("l_theta", grads.l_theta),
    ):
        if value is not None:
            coords[(name, (grads.user,))] = value
    return coords


def perturb(obj, name, idx, delta):
    if idx is None:
        setattr(obj, name, getattr(obj, name) + delta)
    else:
        getattr(obj, name)[idx] += delta


def central_difference(fn, obj, name, idx, h=1e-5):
    """Two-sided difference of fn() under a temporary coordinate bump."""
    perturb(obj, name, idx, +h)
    hi = fn()
    perturb(obj, name, idx, -2 * h)
    lo = fn()
    perturb(obj, name, idx, +h)
    return (hi - lo) / (2 * h)


def grad_close(analytic, numeric, rel=1e-4, floor=1e-7):
    scale = max(abs(analytic), abs(numeric))
    return abs(analytic - numeric) <= max(floor, rel * scale)
