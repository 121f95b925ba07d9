"""Batch command-line interface.

Exit codes: 0 success, 2 config error, 3 data error, 4 numeric failure.
The ``ERGO_PROFILE`` environment variable ({f32, f64}) selects the numeric
profile. Every command honors ``--seed`` and writes its JSON artifacts
under ``--out``.
"""

from __future__ import annotations

import argparse
import itertools
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import tensor as T
from .config import RunConfig, build_run_config, grid_axis
from .corpus import corpus_stats, load_corpus, split_folds
from .encoding import PrecomputedEmbeddingProvider, SyntheticEmbeddingProvider
from .errors import ConfigError, DataError, ErgoError, NumericError, ShapeError
from .evaluation import (
    attention_to_csv,
    dump_attention,
    histogram_to_csv,
    predict_documents,
    probability_histogram,
    prf1,
    record_from_dict,
    run_cross_validation,
)
from .model import (
    GAT_COMPLEXITY,
    GCN_KIND,
    PairGraphModel,
    RGTConfig,
    param_count,
)
from .training import FocalConfig, TrainConfig, train


def _write_json(path: Path, payload) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def _write_records(path: Path, records) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for r in records:
            fh.write(json.dumps(r.as_dict(), sort_keys=True) + "\n")


def _read_records(path: Path):
    path = Path(path)
    if not path.is_file():
        raise DataError(f"records file {path} does not exist")
    records = []
    for line in path.read_text(encoding="utf-8").splitlines():
        if line.strip():
            records.append(record_from_dict(json.loads(line)))
    return records


def _config_from_args(args) -> RunConfig:
    overrides = {}
    for key in vars(args):
        if key in ("command", "config", "handler", "doc", "node", "layer", "head", "checkpoint", "records", "dim_flag", "dk_flag", "kind_flag", "scope"):
            continue
        value = getattr(args, key)
        if value is not None:
            overrides[key] = value
    return build_run_config(args.config, overrides)


def _provider(config: RunConfig, corpus):
    if config.embeddings:
        return PrecomputedEmbeddingProvider(Path(config.embeddings))
    return SyntheticEmbeddingProvider(
        corpus, dim=config.embedding_dim, seed=config.seed, leaky=config.leaky
    )


def _load_corpus(config: RunConfig):
    if not config.corpus:
        raise ConfigError("no corpus configured; pass --corpus or set it in the config file")
    return load_corpus(Path(config.corpus))


def _model_config(config: RunConfig, event_dim: int) -> RGTConfig:
    return RGTConfig(
        input_dim=2 * event_dim,
        output_dim=config.output_dim,
        layers=config.layers,
        heads=config.heads,
        head_dim=config.head_dim,
        dropout_rate=config.dropout,
        layer_kind=config.layer_kind,
    )


def _focal_config(config: RunConfig) -> FocalConfig:
    return FocalConfig(gamma=config.gamma, alpha=config.alpha)


def _train_config(config: RunConfig) -> TrainConfig:
    return TrainConfig(
        learning_rate=config.lr,
        warmup_fraction=config.warmup,
        max_epochs=config.max_epochs,
        patience=config.patience,
        clip_norm=config.clip,
        seed=config.seed,
        dev_scope=config.dev_scope,
    )


def _train_dev_split(config: RunConfig, corpus):
    plan = split_folds(corpus, config.scheme)
    dev_ids = set(plan.dev_docs)
    train_docs = [d for d in corpus.documents if d.doc_id not in dev_ids]
    dev_docs = [corpus.document(i) for i in plan.dev_docs]
    return train_docs, dev_docs


def cmd_stats(args) -> int:
    config = _config_from_args(args)
    stats = corpus_stats(_load_corpus(config)).as_dict()
    _write_json(Path(config.out) / "stats.json", stats)
    print(json.dumps(stats, sort_keys=True, indent=2))
    return 0


def cmd_make_graph(args) -> int:
    from .relgraph import build_graph, graph_to_dict

    config = _config_from_args(args)
    corpus = _load_corpus(config)
    try:
        doc = corpus.document(args.doc)
    except KeyError:
        raise DataError(f"doc_id {args.doc!r} not in corpus")
    dump = graph_to_dict(build_graph(doc, config.strategy, config.self_loops))
    _write_json(Path(config.out) / f"graph-{doc.doc_id}.json", dump)
    print(json.dumps(dump, sort_keys=True))
    return 0


def cmd_train(args) -> int:
    config = _config_from_args(args)
    corpus = _load_corpus(config)
    provider = _provider(config, corpus)
    train_docs, dev_docs = _train_dev_split(config, corpus)
    result = train(
        train_docs,
        dev_docs,
        provider,
        _model_config(config, provider.dim),
        _focal_config(config),
        _train_config(config),
        config.strategy,
        config.self_loops,
    )
    out = Path(config.out)
    result.model.save(out / "best.ckpt")
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "log.jsonl", "w", encoding="utf-8") as fh:
        for record in result.log:
            fh.write(json.dumps(record, sort_keys=True) + "\n")
    report = {
        "epochs_run": len(result.log),
        "best_f1": result.best_f1,
        "best_epoch": result.best_epoch,
        "checkpoint": str(out / "best.ckpt"),
    }
    _write_json(out / "train_report.json", report)
    print(json.dumps(report, sort_keys=True))
    return 0


def cmd_cv(args) -> int:
    config = _config_from_args(args)
    corpus = _load_corpus(config)
    provider = _provider(config, corpus)
    plan = split_folds(corpus, config.scheme)
    report, records = run_cross_validation(
        corpus,
        plan,
        provider,
        _model_config(config, provider.dim),
        _focal_config(config),
        _train_config(config),
        config.strategy,
        config.self_loops,
        jobs=config.jobs,
    )
    out = Path(config.out)
    _write_json(out / "cv_report.json", report)
    _write_records(out / "records.jsonl", records)
    print(json.dumps(report["pooled"], sort_keys=True))
    return 0


def cmd_predict(args) -> int:
    config = _config_from_args(args)
    corpus = _load_corpus(config)
    model = PairGraphModel.load(Path(args.checkpoint))
    provider = _provider(config, corpus)
    records = predict_documents(model, corpus.documents, provider, config.strategy, config.self_loops)
    out = Path(config.out)
    _write_records(out / "records.jsonl", records)
    print(json.dumps({"records": len(records), "path": str(out / "records.jsonl")}))
    return 0


def cmd_eval(args) -> int:
    config = _config_from_args(args)
    records = _read_records(args.records)
    report = {
        "intra": prf1(records, "intra"),
        "inter": prf1(records, "inter"),
        "combined": prf1(records, "both"),
    }
    _write_json(Path(config.out) / "eval_report.json", report)
    print(json.dumps(report, sort_keys=True, indent=2))
    return 0


def cmd_hist(args) -> int:
    config = _config_from_args(args)
    records = _read_records(args.records)
    hist = probability_histogram(records)
    out = Path(config.out)
    _write_json(out / "histogram.json", hist)
    csv = histogram_to_csv(hist)
    out.mkdir(parents=True, exist_ok=True)
    (out / "histogram.csv").write_text(csv, encoding="utf-8")
    print(csv, end="")
    return 0


def cmd_dump_attention(args) -> int:
    from .relgraph import build_graph

    config = _config_from_args(args)
    corpus = _load_corpus(config)
    try:
        doc = corpus.document(args.doc)
    except KeyError:
        raise DataError(f"doc_id {args.doc!r} not in corpus")
    model = PairGraphModel.load(Path(args.checkpoint))
    provider = _provider(config, corpus)
    graph = build_graph(doc, config.strategy, config.self_loops)
    model.forward(provider(doc), graph, train=False)
    entries = dump_attention(model, graph, args.node, args.layer, args.head)
    csv = attention_to_csv(graph, entries)
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    name = f"attention-{doc.doc_id}-n{args.node}-l{args.layer}-h{args.head}.csv"
    (out / name).write_text(csv, encoding="utf-8")
    print(csv, end="")
    return 0


def cmd_param_count(args) -> int:
    config = _config_from_args(args)
    dim = args.dim_flag if args.dim_flag is not None else config.output_dim
    kind = args.kind_flag or config.layer_kind
    shared = dict(
        input_dim=dim, output_dim=dim, layers=config.layers, heads=config.heads,
        head_dim=args.dk_flag if args.dk_flag is not None else config.head_dim,
    )
    rgt_count, rgt_class = param_count(RGTConfig(layer_kind="rgt", **shared))
    gcn_count, gcn_class = param_count(RGTConfig(layer_kind=GCN_KIND, **shared))
    selected = rgt_count if kind == "rgt" else gcn_count
    payload = {
        "count": selected,
        "layer_kind": kind,
        "table": {
            "rgt": {"count": rgt_count, "complexity": rgt_class},
            "gcn": {"count": gcn_count, "complexity": gcn_class},
            "gat": {"complexity": GAT_COMPLEXITY},
        },
    }
    _write_json(Path(config.out) / "param_count.json", payload)
    print(json.dumps(payload, sort_keys=True, indent=2))
    return 0


def cmd_gridsearch(args) -> int:
    config = _config_from_args(args)
    corpus = _load_corpus(config)
    provider = _provider(config, corpus)
    train_docs, dev_docs = _train_dev_split(config, corpus)
    if not dev_docs:
        raise ConfigError(f"gridsearch needs a scheme with a dev split, not {config.scheme!r}")
    axes = (
        grid_axis(config.grid_layers, "grid_layers", as_int=True),
        grid_axis(config.grid_heads, "grid_heads", as_int=True),
        grid_axis(config.grid_dropout, "grid_dropout", as_int=False),
        grid_axis(config.grid_gamma, "grid_gamma", as_int=False),
    )
    results = []
    for layers, heads, dropout, gamma in itertools.product(*axes):
        model_config = RGTConfig(
            input_dim=2 * provider.dim,
            output_dim=config.output_dim,
            layers=layers,
            heads=heads,
            head_dim=config.head_dim,
            dropout_rate=dropout,
            layer_kind=config.layer_kind,
        )
        result = train(
            train_docs,
            dev_docs,
            provider,
            model_config,
            FocalConfig(gamma=gamma, alpha=config.alpha),
            _train_config(config),
            config.strategy,
            config.self_loops,
        )
        results.append(
            {
                "layers": layers,
                "heads": heads,
                "dropout": dropout,
                "gamma": gamma,
                "dev_f1": result.best_f1,
                "best_epoch": result.best_epoch,
            }
        )
    results.sort(key=lambda r: (-(r["dev_f1"] or 0.0), r["layers"], r["heads"], r["dropout"], r["gamma"]))
    payload = {"configurations": len(results), "ranked": results}
    _write_json(Path(config.out) / "grid_report.json", payload)
    print(json.dumps(results[0], sort_keys=True))
    return 0


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", type=Path, default=None, help="key = value config file")
    sub.add_argument("--out", default=None, help="artifact output directory")
    sub.add_argument("--seed", type=int, default=None)
    sub.add_argument("--corpus", default=None, help="corpus directory of JSON documents")


def _add_model_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--embeddings", default=None, help="directory of interchange embedding files")
    sub.add_argument("--embedding-dim", dest="embedding_dim", type=int, default=None)
    sub.add_argument("--leaky", dest="leaky", action=argparse.BooleanOptionalAction, default=None)
    sub.add_argument("--strategy", choices=("shared_event", "complete"), default=None)
    sub.add_argument("--self-loops", dest="self_loops", action=argparse.BooleanOptionalAction, default=None)
    sub.add_argument("--layers", type=int, default=None)
    sub.add_argument("--heads", type=int, default=None)
    sub.add_argument("--output-dim", dest="output_dim", type=int, default=None)
    sub.add_argument("--head-dim", dest="head_dim", type=int, default=None)
    sub.add_argument("--dropout", type=float, default=None)
    sub.add_argument("--layer-kind", dest="layer_kind", choices=("rgt", "gcn"), default=None)
    sub.add_argument("--gamma", type=float, default=None)
    sub.add_argument("--alpha", type=float, default=None)
    sub.add_argument("--lr", type=float, default=None)
    sub.add_argument("--warmup", type=float, default=None)
    sub.add_argument("--clip", type=float, default=None)
    sub.add_argument("--max-epochs", dest="max_epochs", type=int, default=None)
    sub.add_argument("--patience", type=int, default=None)
    sub.add_argument("--dev-scope", dest="dev_scope", choices=("intra", "inter", "both"), default=None)
    sub.add_argument("--scheme", choices=("esl_5fold_topic", "ctb_10fold_doc"), default=None)
    sub.add_argument("--jobs", type=int, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ergo",
        description="Event-pair relational graph experiments: train, cross-validate, inspect.",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    sub = commands.add_parser("stats", help="corpus statistics report")
    _add_common(sub)
    sub.set_defaults(handler=cmd_stats)

    sub = commands.add_parser("make-graph", help="dump one document's pair graph")
    _add_common(sub)
    sub.add_argument("--doc", required=True)
    sub.add_argument("--strategy", choices=("shared_event", "complete"), default=None)
    sub.add_argument("--self-loops", dest="self_loops", action=argparse.BooleanOptionalAction, default=None)
    sub.set_defaults(handler=cmd_make_graph)

    sub = commands.add_parser("train", help="train on the non-dev split, early stop on dev")
    _add_common(sub)
    _add_model_flags(sub)
    sub.set_defaults(handler=cmd_train)

    sub = commands.add_parser("cv", help="cross-validation over the configured fold scheme")
    _add_common(sub)
    _add_model_flags(sub)
    sub.set_defaults(handler=cmd_cv)

    sub = commands.add_parser("predict", help="write prediction records for a corpus")
    _add_common(sub)
    _add_model_flags(sub)
    sub.add_argument("--checkpoint", required=True)
    sub.set_defaults(handler=cmd_predict)

    sub = commands.add_parser("eval", help="precision/recall/F1 from prediction records")
    _add_common(sub)
    sub.add_argument("--records", required=True)
    sub.set_defaults(handler=cmd_eval)

    sub = commands.add_parser("hist", help="predicted-probability histogram from records")
    _add_common(sub)
    sub.add_argument("--records", required=True)
    sub.set_defaults(handler=cmd_hist)

    sub = commands.add_parser("dump-attention", help="one node's neighbor attention weights")
    _add_common(sub)
    _add_model_flags(sub)
    sub.add_argument("--checkpoint", required=True)
    sub.add_argument("--doc", required=True)
    sub.add_argument("--node", type=int, required=True)
    sub.add_argument("--layer", type=int, default=0)
    sub.add_argument("--head", type=int, default=0)
    sub.set_defaults(handler=cmd_dump_attention)

    sub = commands.add_parser("param-count", help="stored-parameter accounting and comparison table")
    _add_common(sub)
    sub.add_argument("--layers", type=int, default=None)
    sub.add_argument("--heads", type=int, default=None)
    sub.add_argument("--dim", dest="dim_flag", type=int, default=None, help="node feature dimension")
    sub.add_argument("--dk", dest="dk_flag", type=int, default=None, help="per-head dimension")
    sub.add_argument("--kind", dest="kind_flag", choices=("rgt", "gcn"), default=None)
    sub.set_defaults(handler=cmd_param_count)

    sub = commands.add_parser("gridsearch", help="cartesian search over layers/heads/dropout/gamma")
    _add_common(sub)
    _add_model_flags(sub)
    sub.add_argument("--grid-layers", dest="grid_layers", default=None)
    sub.add_argument("--grid-heads", dest="grid_heads", default=None)
    sub.add_argument("--grid-dropout", dest="grid_dropout", default=None)
    sub.add_argument("--grid-gamma", dest="grid_gamma", default=None)
    sub.set_defaults(handler=cmd_gridsearch)

    return parser


def _fail(category: str, message: str) -> None:
    flat = " ".join(str(message).split())
    print(f"error: {category}: {flat}", file=sys.stderr)


def main(argv=None) -> int:
    profile = os.environ.get("ERGO_PROFILE")
    if profile is not None:
        if profile not in T.PROFILES:
            _fail("config", f"ERGO_PROFILE must be one of {sorted(T.PROFILES)}, got {profile!r}")
            return 2
        T.set_profile(profile)
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except ConfigError as exc:
        _fail("config", str(exc))
        return 2
    except DataError as exc:
        _fail("data", str(exc))
        return 3
    except (NumericError, ShapeError) as exc:
        _fail("numeric", str(exc))
        return 4
    except ErgoError as exc:
        _fail("error", str(exc))
        return 1


if __name__ == "__main__":
    sys.exit(main())
