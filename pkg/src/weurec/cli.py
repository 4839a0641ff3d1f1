"""Command-line entry point.

Subcommands: ingest, train, evaluate, predict, analyze, export-pwf.  Every
report CSV starts with `# key=value` comment lines recording the model
type, the run seed, and the cutoff list, so results stay attributable
after the files leave the run directory.  Report commands also render a
figure next to each CSV unless --no-figures is given.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

import numpy as np

from .baselines import MfScorer, bpr_fit, load_mf_params, mf_fit, save_mf_params
from .data import SplitDataset, items_by_user
from .evaluation import EvalConfig, evaluate
from .ingest import IngestConfig, build_dataset, load_split, write_split
from .scoring import WeuScorer, order_by_score
from .training import TrainConfig, fit, save_checkpoint
from .utility import load_params
from .weighting import PwfKind, build_histograms

WEU_MODELS = ("eu", "tf", "tf+", "prelec", "prelec+")
BASELINE_MODELS = ("cf-lfm", "bpr")
MODEL_CHOICES = WEU_MODELS + BASELINE_MODELS

PARAMS_FILE = "params.json"
STATS_FILE = "dataset_stats.json"


class CliError(Exception):
    """User-facing failure; printed to stderr with exit status 1."""


def _eval_workers() -> int:
    raw = os.environ.get("WEU_THREADS", "1")
    try:
        value = int(raw)
    except ValueError:
        raise CliError(f"WEU_THREADS must be an integer, got {raw!r}") from None
    return max(1, value)


def _header(model: str, seed: int, ks=None) -> str:
    lines = [f"# model={model}", f"# seed={seed}"]
    if ks is not None:
        lines.append("# k=" + ",".join(str(k) for k in ks))
    return "\n".join(lines) + "\n"


def _parse_k_list(text: str) -> tuple[int, ...]:
    try:
        ks = tuple(int(tok) for tok in text.split(",") if tok.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not ks:
        raise argparse.ArgumentTypeError("cutoff list is empty")
    return ks


def _load_dataset(split_dir, r_max_flag: int | None) -> SplitDataset:
    d = Path(split_dir)
    if not d.is_dir():
        raise CliError(f"split directory not found: {d}")
    r_max = r_max_flag
    if r_max is None:
        stats_path = d / STATS_FILE
        if stats_path.exists():
            r_max = int(json.loads(stats_path.read_text(encoding="utf-8"))["r_max"])
        else:
            r_max = 5
    return load_split(d, r_max=r_max)


def _load_checkpoint(path):
    p = Path(path)
    if not p.exists():
        raise CliError(f"checkpoint not found: {p}")
    doc = json.loads(p.read_text(encoding="utf-8"))
    model_type = doc.get("model_type")
    if model_type in BASELINE_MODELS:
        params, _ = load_mf_params(p)
        return params, model_type
    params = load_params(p)
    return params, model_type or params.kind.value


def _require_shape_match(params, dataset: SplitDataset) -> None:
    have = (params.user_count, params.item_count)
    want = (dataset.user_count, dataset.item_count)
    if have != want:
        raise CliError(
            "checkpoint/dataset shape mismatch: checkpoint has "
            f"(users={have[0]}, items={have[1]}), dataset has "
            f"(users={want[0]}, items={want[1]})"
        )
    if hasattr(params, "r_max") and params.r_max != dataset.r_max:
        raise CliError(
            f"checkpoint/dataset shape mismatch: checkpoint has r_max={params.r_max}, "
            f"dataset has r_max={dataset.r_max}"
        )


def _make_scorer(params, model_type: str, dataset: SplitDataset):
    if model_type in BASELINE_MODELS:
        return MfScorer(params)
    hists = build_histograms(dataset.train, dataset.item_count, dataset.r_max)
    return WeuScorer(params, hists, params.kind)


def _require_weu(params, model_type: str, command: str):
    if model_type in BASELINE_MODELS:
        raise CliError(
            f"{command} requires a weighted-utility checkpoint; got model {model_type!r}"
        )
    return params


def _out_dir(args) -> Path:
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_report_csv(path, header_comment: str, columns, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        handle.write(header_comment)
        writer = csv.writer(handle)
        writer.writerow(columns)
        writer.writerows(rows)


def cmd_ingest(args) -> int:
    config = IngestConfig(min_interactions=args.min_interactions, r_max=args.r_max)
    dataset, raw_count = build_dataset(args.input, config)
    out = _out_dir(args)
    write_split(dataset, out)
    interactions = len(dataset.train) + len(dataset.validation) + len(dataset.test)
    cells = dataset.user_count * dataset.item_count
    stats = {
        "users": dataset.user_count,
        "items": dataset.item_count,
        "interactions": interactions,
        "sparsity": interactions / cells if cells else 0.0,
        "r_max": dataset.r_max,
        "min_interactions": args.min_interactions,
        "seed": args.seed,
    }
    (out / STATS_FILE).write_text(json.dumps(stats, indent=2) + "\n", encoding="utf-8")
    print(
        f"ingested {raw_count} raw records -> {interactions} kept "
        f"({dataset.user_count} users, {dataset.item_count} items); wrote {out}"
    )
    return 0


def cmd_train(args) -> int:
    dataset = _load_dataset(args.input, args.r_max)
    out = _out_dir(args)
    model = args.model
    kind = PwfKind(model) if model in WEU_MODELS else PwfKind.IDENTITY
    config = TrainConfig(
        kind=kind,
        epochs=args.epochs,
        learning_rate=args.lr,
        momentum=args.momentum,
        l2=args.l2,
        candidate_set_size=args.candidates,
        latent_dim=args.latent_dim,
        seed=args.seed,
        noise_enabled=not args.no_noise,
    )
    val_config = EvalConfig(negatives=args.eval_negatives, cutoffs=(10,), seed=args.seed)

    params_path = out / PARAMS_FILE
    if model in WEU_MODELS:
        result = fit(dataset, config, eval_config=val_config)
        save_checkpoint(result.params, result.state, config, params_path)
    elif model == "cf-lfm":
        result = mf_fit(dataset, config)
        save_mf_params(result.params, params_path, model)
    else:
        result = bpr_fit(dataset, config, eval_config=val_config)
        save_mf_params(result.params, params_path, model)

    log_path = out / "training_log.csv"
    rows = [(row.epoch, repr(row.objective), repr(row.val_ndcg10)) for row in result.trace]
    _write_report_csv(
        log_path,
        _header(model, args.seed),
        ["epoch", "objective", result.val_metric_name],
        rows,
    )
    if not args.no_figures and rows:
        from . import plots

        plots.render_training_log(log_path, out / "training_log.png")
    best = result.best_epoch
    print(f"trained {model} for {args.epochs} epochs; best epoch {best}; wrote {params_path}")
    return 0


def cmd_evaluate(args) -> int:
    dataset = _load_dataset(args.input, args.r_max)
    params, model_type = _load_checkpoint(args.checkpoint)
    _require_shape_match(params, dataset)
    scorer = _make_scorer(params, model_type, dataset)
    config = EvalConfig(negatives=args.eval_negatives, cutoffs=args.k, seed=args.seed)
    workers = _eval_workers()

    out = _out_dir(args)
    header = _header(model_type, args.seed, args.k)
    if args.per_user:
        metrics, per_user = evaluate(
            scorer, dataset, config, collect_per_user=True, workers=workers
        )
        detail_rows = []
        for row in per_user:
            raw = dataset.user_ids.to_raw(row.user)
            for k in args.k:
                m = row.at[k]
                detail_rows.append(
                    (raw, k, repr(m.precision), repr(m.recall), repr(m.f1), repr(m.ndcg))
                )
        _write_report_csv(
            out / "metrics_per_user.csv",
            header,
            ["user_id", "K", "precision", "recall", "f1", "ndcg"],
            detail_rows,
        )
    else:
        metrics = evaluate(scorer, dataset, config, workers=workers)

    metrics_path = out / "metrics.csv"
    rows = [
        (model_type, k, repr(m.precision), repr(m.recall), repr(m.f1), repr(m.ndcg))
        for k, m in sorted(metrics.at.items())
    ]
    _write_report_csv(
        metrics_path, header, ["model", "K", "precision", "recall", "f1", "ndcg"], rows
    )
    if not args.no_figures:
        from . import plots

        plots.render_metrics(metrics_path, out / "metrics.png")
    for k, m in sorted(metrics.at.items()):
        print(
            f"{model_type} @ {k}: precision={m.precision:.6f} recall={m.recall:.6f} "
            f"f1={m.f1:.6f} ndcg={m.ndcg:.6f}"
        )
    return 0


def cmd_predict(args) -> int:
    dataset = _load_dataset(args.input, args.r_max)
    params, model_type = _load_checkpoint(args.checkpoint)
    _require_shape_match(params, dataset)
    scorer = _make_scorer(params, model_type, dataset)
    top_k = args.top_k

    # Recommend over the catalog minus items already touched in train or
    # validation; test items stay eligible so held-out hits are visible.
    seen = items_by_user(
        tuple(dataset.train) + tuple(dataset.validation), dataset.user_count
    )
    catalog = np.arange(dataset.item_count)
    out = _out_dir(args)
    rows = []
    for user in range(dataset.user_count):
        candidates = np.setdiff1d(catalog, np.fromiter(seen[user], dtype=np.intp, count=len(seen[user])))
        if len(candidates) < top_k:
            raise CliError(
                f"user {dataset.user_ids.to_raw(user)} has only {len(candidates)} "
                f"unseen items; cannot produce top-k={top_k}"
            )
        scores = np.asarray(scorer(user, candidates), dtype=float)
        order = order_by_score(candidates, scores)[:top_k]
        raw_user = dataset.user_ids.to_raw(user)
        for rank, pos in enumerate(order, start=1):
            rows.append(
                (raw_user, dataset.item_ids.to_raw(int(candidates[pos])), rank, repr(float(scores[pos])))
            )
    predictions_path = out / "predictions.csv"
    _write_report_csv(
        predictions_path,
        _header(model_type, args.seed, (top_k,)),
        ["user_raw_id", "item_raw_id", "rank", "score"],
        rows,
    )
    print(f"wrote {len(rows)} rows ({top_k} per user) to {predictions_path}")
    return 0


def cmd_analyze(args) -> int:
    from . import analysis

    dataset = _load_dataset(args.input, args.r_max)
    params, model_type = _load_checkpoint(args.checkpoint)
    _require_weu(params, model_type, "analyze")
    _require_shape_match(params, dataset)
    out = _out_dir(args)
    header = _header(model_type, args.seed)

    summaries = analysis.user_scale_summaries(params, dataset)
    analysis.write_user_scales_csv(summaries, out / "user_scales.csv", header)
    analysis.write_scale_histogram_csv(summaries, out / "scale_histogram.csv", header)
    if not args.no_figures:
        from . import plots

        plots.render_scale_histograms(out / "scale_histogram.csv", out / "scale_histogram.png")
    diffs = [s.diff for s in summaries]
    mean_diff = float(np.mean(diffs)) if diffs else 0.0
    print(
        f"analyzed {len(summaries)} test users; mean(alpha - beta) = {mean_diff:.6f}; wrote {out}"
    )
    return 0


def cmd_export_pwf(args) -> int:
    from . import analysis

    dataset = _load_dataset(args.input, args.r_max)
    params, model_type = _load_checkpoint(args.checkpoint)
    _require_weu(params, model_type, "export-pwf")
    _require_shape_match(params, dataset)
    out = _out_dir(args)

    rows = analysis.export_mean_pwf_curve(params, dataset, grid_step=args.grid_step)
    curve_path = out / "pwf_curve.csv"
    analysis.write_pwf_curve_csv(rows, curve_path, _header(model_type, args.seed))
    if not args.no_figures:
        from . import plots

        plots.render_pwf_curve(curve_path, out / "pwf_curve.png")
    print(f"wrote {len(rows)} curve points to {curve_path}")
    return 0


def _add_io(parser, input_help: str) -> None:
    parser.add_argument("--input", required=True, help=input_help)
    parser.add_argument("--output-dir", required=True, help="directory for outputs")
    parser.add_argument("--seed", type=int, default=0, help="run seed (default 0)")


def _add_split_input(parser) -> None:
    _add_io(parser, "split directory produced by ingest")
    parser.add_argument(
        "--r-max",
        type=int,
        default=None,
        help="rating-scale maximum (default: read dataset_stats.json, else 5)",
    )


def _add_checkpoint(parser) -> None:
    parser.add_argument("--checkpoint", required=True, help="trained params.json")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="weurec",
        description="Risk-aware recommendation: ingest data, train scoring models, "
        "evaluate rankings, and export behavioral summaries.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse, core-filter, and chronologically split a ratings CSV")
    _add_io(p, "raw interaction CSV (user_id,item_id,rating,timestamp)")
    p.add_argument("--min-interactions", type=int, default=10, help="core-filter threshold (default 10)")
    p.add_argument("--r-max", type=int, default=5, help="rating-scale maximum (default 5)")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("train", help="fit a model on a split directory")
    _add_split_input(p)
    p.add_argument("--model", required=True, choices=MODEL_CHOICES)
    p.add_argument("--latent-dim", type=int, default=64, help="latent dimension (default 64)")
    p.add_argument("--lr", type=float, default=0.05, help="learning rate (default 0.05)")
    p.add_argument("--momentum", type=float, default=0.0, help="momentum coefficient (default 0)")
    p.add_argument("--lambda", dest="l2", type=float, default=1e-3, help="L2 strength (default 1e-3)")
    p.add_argument("--epochs", type=int, default=20, help="training epochs (default 20)")
    p.add_argument("--candidates", type=int, default=11, help="choice-set size N (default 11)")
    p.add_argument(
        "--eval-negatives", type=int, default=1000, help="validation negatives (default 1000)"
    )
    p.add_argument("--no-noise", action="store_true", help="disable per-candidate Gaussian noise")
    p.add_argument("--no-figures", action="store_true", help="skip figure rendering")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="ranking metrics on the held-out partition")
    _add_split_input(p)
    _add_checkpoint(p)
    p.add_argument("--k", type=_parse_k_list, default=(1, 5, 10), help="cutoffs (default 1,5,10)")
    p.add_argument(
        "--eval-negatives", type=int, default=1000, help="sampled negatives per user (default 1000)"
    )
    p.add_argument("--per-user", action="store_true", help="also write per-user metric rows")
    p.add_argument("--no-figures", action="store_true", help="skip figure rendering")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("predict", help="top-k recommendations per user")
    _add_split_input(p)
    _add_checkpoint(p)
    p.add_argument("--top-k", type=int, default=10, help="rows per user (default 10)")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("analyze", help="per-user gain/loss scale summaries")
    _add_split_input(p)
    _add_checkpoint(p)
    p.add_argument("--no-figures", action="store_true", help="skip figure rendering")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("export-pwf", help="mean probability-weighting curve")
    _add_split_input(p)
    _add_checkpoint(p)
    p.add_argument("--grid-step", type=float, default=0.01, help="curve grid step (default 0.01)")
    p.add_argument("--no-figures", action="store_true", help="skip figure rendering")
    p.set_defaults(func=cmd_export_pwf)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (CliError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
