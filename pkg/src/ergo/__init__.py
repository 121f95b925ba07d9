"""Event-pair relational graph engine for document-level event causality identification.

The package turns annotated documents into graphs whose nodes are event
pairs, runs neighborhood multi-head attention layers over them, classifies
each pair as causal or not under a class-balanced focal loss, and evaluates
with cross-validated precision/recall/F1. Event embeddings arrive either
from a synthetic provider or from interchange files written by an external
encoder exporter.
"""

from .corpus import (
    Corpus,
    Document,
    EventPair,
    FoldPlan,
    corpus_stats,
    enumerate_pairs,
    load_corpus,
    save_corpus,
    split_folds,
)
from .encoding import (
    EventEmbeddings,
    PrecomputedEmbeddingProvider,
    SyntheticEmbeddingProvider,
    aggregate_markers,
    load_precomputed,
    plan_windows,
    write_embeddings,
)
from .errors import ConfigError, DataError, ErgoError, NumericError, ShapeError
from .evaluation import (
    PredictionRecord,
    dump_attention,
    predict_documents,
    probability_histogram,
    prf1,
    run_cross_validation,
)
from .model import PairGraphModel, RGTConfig, param_count
from .relgraph import RelationalGraph, build_graph, neighbors
from .synthetic import make_synthetic_corpus
from .tensor import Tensor, backward, clip_global_norm, set_profile
from .training import FocalConfig, TrainConfig, adamw_step, focal_loss, lr_at, train

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "Corpus",
    "DataError",
    "Document",
    "ErgoError",
    "EventEmbeddings",
    "EventPair",
    "FocalConfig",
    "FoldPlan",
    "NumericError",
    "PairGraphModel",
    "PrecomputedEmbeddingProvider",
    "PredictionRecord",
    "RGTConfig",
    "RelationalGraph",
    "ShapeError",
    "SyntheticEmbeddingProvider",
    "Tensor",
    "TrainConfig",
    "adamw_step",
    "aggregate_markers",
    "backward",
    "build_graph",
    "clip_global_norm",
    "corpus_stats",
    "dump_attention",
    "enumerate_pairs",
    "focal_loss",
    "load_corpus",
    "load_precomputed",
    "lr_at",
    "make_synthetic_corpus",
    "neighbors",
    "param_count",
    "plan_windows",
    "predict_documents",
    "prf1",
    "probability_histogram",
    "run_cross_validation",
    "save_corpus",
    "set_profile",
    "split_folds",
    "train",
    "write_embeddings",
]
