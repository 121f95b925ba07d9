"""Scoring, cross-validation orchestration, histograms, attention dumps."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from .corpus import CTB_SCHEME, Corpus, FoldPlan
from .encoding import EventEmbeddings
from .errors import ConfigError, DataError
from .model import PairGraphModel, RGTConfig
from .relgraph import RelationalGraph, SHARED_EVENT, build_graph, neighbors

DECISION_THRESHOLD = 0.5


@dataclass(frozen=True)
class PredictionRecord:
    doc_id: str
    event_a: str
    event_b: str
    scope: str
    gold: str
    p_positive: float

    @property
    def predicted(self) -> str:
        return "positive" if self.p_positive > DECISION_THRESHOLD else "negative"

    def as_dict(self) -> dict:
        return {
            "doc_id": self.doc_id,
            "event_a": self.event_a,
            "event_b": self.event_b,
            "scope": self.scope,
            "gold": self.gold,
            "p_positive": self.p_positive,
            "predicted": self.predicted,
        }


def record_from_dict(raw: dict) -> PredictionRecord:
    try:
        return PredictionRecord(
            raw["doc_id"], raw["event_a"], raw["event_b"], raw["scope"], raw["gold"],
            float(raw["p_positive"]),
        )
    except KeyError as exc:
        raise DataError(f"prediction record missing field {exc}") from exc


def predict_documents(
    model: PairGraphModel,
    docs,
    provider,
    strategy: str = SHARED_EVENT,
    self_loops: bool = True,
) -> list[PredictionRecord]:
    """Eval-mode predictions for every pair of every document with >= 2 events."""
    records = []
    for doc in docs:
        if len(doc.events) < 2:
            continue
        graph = build_graph(doc, strategy, self_loops)
        probs = model.forward(provider(doc), graph, train=False)
        for pair, p in zip(graph.nodes, probs.values[:, 1]):
            records.append(
                PredictionRecord(doc.doc_id, pair.event_a, pair.event_b, pair.scope, pair.label, float(p))
            )
    return records


def f1_score(precision: float, recall: float) -> float:
    if precision + recall == 0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def prf1(records, scope: str = "both") -> dict:
    """Micro precision/recall/F1 over records, optionally filtered by scope."""
    if scope not in ("intra", "inter", "both"):
        raise ConfigError(f"scope must be intra, inter or both, got {scope!r}")
    tp = fp = fn = 0
    for r in records:
        if scope != "both" and r.scope != scope:
            continue
        gold_pos = r.gold == "positive"
        pred_pos = r.predicted == "positive"
        tp += gold_pos and pred_pos
        fp += pred_pos and not gold_pos
        fn += gold_pos and not pred_pos
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    return {
        "P": precision,
        "R": recall,
        "F1": f1_score(precision, recall),
        "TP": tp,
        "FP": fp,
        "FN": fn,
    }


def _settings_report(records, intra_only: bool) -> dict:
    if intra_only:
        return {"intra": prf1(records, "intra")}
    return {
        "intra": prf1(records, "intra"),
        "inter": prf1(records, "inter"),
        "combined": prf1(records, "both"),
    }


def _fold_seed(seed: int, fold: int) -> int:
    return int(np.random.SeedSequence([seed, fold]).generate_state(1)[0])


def run_cross_validation(
    corpus: Corpus,
    plan: FoldPlan,
    provider,
    model_config: RGTConfig,
    focal,
    train_config,
    strategy: str = SHARED_EVENT,
    self_loops: bool = True,
    jobs: int = 1,
) -> tuple[dict, list[PredictionRecord]]:
    """Train on everything but each fold, test on the fold, pool the records.

    Returns the report and the pooled prediction records. Fold seeds are
    derived from the configured seed, so results do not depend on the order
    or parallelism with which folds run.
    """
    from .training import train  # local import: training uses prf1 for early stopping

    dev_ids = set(plan.dev_docs)
    fold_inputs = []
    for k, fold in enumerate(plan.folds):
        test_ids = set(fold)
        train_docs = [
            d for d in corpus.documents if d.doc_id not in test_ids and d.doc_id not in dev_ids
        ]
        test_docs = [corpus.document(i) for i in fold]
        dev_docs = [corpus.document(i) for i in plan.dev_docs]
        fold_config = dataclasses.replace(train_config, seed=_fold_seed(train_config.seed, k))
        fold_inputs.append((k, train_docs, dev_docs, test_docs, fold_config))

    def run_fold(item):
        k, train_docs, dev_docs, test_docs, fold_config = item
        result = train(
            train_docs, dev_docs, provider, model_config, focal, fold_config, strategy, self_loops
        )
        records = predict_documents(result.model, test_docs, provider, strategy, self_loops)
        if plan.scheme == CTB_SCHEME:
            records = [r for r in records if r.scope == "intra"]
        return k, records

    if jobs > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=jobs) as pool:
            fold_records = dict(pool.map(run_fold, fold_inputs))
    else:
        fold_records = dict(run_fold(item) for item in fold_inputs)

    intra_only = plan.scheme == CTB_SCHEME
    pooled_records = [r for k in sorted(fold_records) for r in fold_records[k]]
    per_fold = [
        {"fold": k, "records": len(fold_records[k])} | _settings_report(fold_records[k], intra_only)
        for k in sorted(fold_records)
    ]
    settings = ("intra",) if intra_only else ("intra", "inter", "combined")
    per_fold_mean = {
        setting: {
            metric: float(np.mean([f[setting][metric] for f in per_fold])) for metric in ("P", "R", "F1")
        }
        for setting in settings
    }
    report = {
        "scheme": plan.scheme,
        "scope_policy": "intra_only" if intra_only else "all",
        "folds": len(plan.folds),
        "pooled": _settings_report(pooled_records, intra_only),
        "per_fold": per_fold,
        "per_fold_mean": per_fold_mean,
    }
    return report, pooled_records


def probability_histogram(records, bin_width: float = 0.05) -> dict:
    """Per-class counts of predicted positive probability over [0, 1] bins.

    The last bin is closed, so a probability of exactly 1.0 lands in it.
    """
    n_bins = round(1.0 / bin_width)
    if abs(n_bins * bin_width - 1.0) > 1e-9:
        raise ConfigError(f"bin width {bin_width} does not divide 1 evenly")
    pos = [0] * n_bins
    neg = [0] * n_bins
    for r in records:
        if not 0.0 <= r.p_positive <= 1.0:
            raise DataError(f"probability {r.p_positive} outside [0, 1]")
        k = min(int(r.p_positive / bin_width), n_bins - 1)
        (pos if r.gold == "positive" else neg)[k] += 1
    return {
        "bin_width": bin_width,
        "bins": [
            {"lo": i * bin_width, "hi": (i + 1) * bin_width, "pos": pos[i], "neg": neg[i]}
            for i in range(n_bins)
        ],
    }


def histogram_to_csv(histogram: dict) -> str:
    lines = ["bin_lo,bin_hi,pos_count,neg_count"]
    for b in histogram["bins"]:
        lines.append(f"{b['lo']:.2f},{b['hi']:.2f},{b['pos']},{b['neg']}")
    return "\n".join(lines) + "\n"


def dump_attention(
    model: PairGraphModel, graph: RelationalGraph, node_id: int, layer: int, head: int
) -> list[tuple[int, float]]:
    """Retained attention of one node over its neighbors, largest first.

    Reads the tensors kept by the most recent forward pass; run one first.
    """
    nbrs = neighbors(graph, node_id)
    att = model.attention(layer, head)
    if att.shape[0] != graph.n_nodes:
        raise ConfigError(
            f"retained attention covers {att.shape[0]} nodes but the graph has {graph.n_nodes}"
        )
    entries = [(j, float(att[node_id, j])) for j in nbrs]
    entries.sort(key=lambda e: (-e[1], e[0]))
    return entries


def attention_to_csv(graph: RelationalGraph, entries) -> str:
    lines = ["neighbor_a,neighbor_b,alpha"]
    for j, alpha in entries:
        pair = graph.nodes[j]
        lines.append(f"{pair.event_a},{pair.event_b},{alpha!r}")
    return "\n".join(lines) + "\n"
