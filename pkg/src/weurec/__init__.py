"""Risk-aware recommendation from explicit ratings.

Items are scored as gambles: each candidate's rating histogram gives
outcome probabilities, a reference point splits outcomes into gains and
losses, a bounded asymmetric utility scales them, and a probability
weighting function distorts the histogram probabilities before the
expectation is taken.  Training fits all of it through a discrete choice
likelihood over sampled candidate sets; matrix-factorization and pairwise
ranking baselines share the data and evaluation stack.
"""

from .data import (
    IdMap,
    InteractionRecord,
    RatingHistogram,
    RawInteraction,
    SplitDataset,
    probability,
)
from .evaluation import EvalConfig, RankingMetrics, evaluate, metrics_at_k
from .ingest import IngestConfig, build_dataset, chronological_split, filter_k_core, load_split, parse_interactions, write_split
from .scoring import ScoreRequest, WeuScorer, rank_candidates, score_items, weu_score
from .training import TrainConfig, epoch, fit, pair_gradients, pair_objective, sample_candidates
from .utility import (
    WeuParameters,
    init_weu_parameters,
    load_params,
    materialize_alpha_beta,
    materialize_pwf_params,
    outcome,
    save_params,
    utility,
)
from .weighting import (
    HistogramStore,
    PwfKind,
    PwfParams,
    build_histograms,
    weight,
    weight_prelec,
    weight_tf,
)

__version__ = "0.1.0"

__all__ = [
    "EvalConfig",
    "HistogramStore",
    "IdMap",
    "IngestConfig",
    "InteractionRecord",
    "PwfKind",
    "PwfParams",
    "RankingMetrics",
    "RatingHistogram",
    "RawInteraction",
    "ScoreRequest",
    "SplitDataset",
    "TrainConfig",
    "WeuParameters",
    "WeuScorer",
    "build_dataset",
    "build_histograms",
    "chronological_split",
    "epoch",
    "evaluate",
    "filter_k_core",
    "fit",
    "init_weu_parameters",
    "load_params",
    "load_split",
    "materialize_alpha_beta",
    "materialize_pwf_params",
    "metrics_at_k",
    "outcome",
    "pair_gradients",
    "pair_objective",
    "parse_interactions",
    "probability",
    "rank_candidates",
    "sample_candidates",
    "save_params",
    "score_items",
    "utility",
    "weight",
    "weight_prelec",
    "weight_tf",
    "weu_score",
    "write_split",
]
