import json

import numpy as np
import pytest

from ergo.corpus import CTB_SCHEME, ESL_SCHEME, split_folds
from ergo.encoding import SyntheticEmbeddingProvider
from ergo.errors import ConfigError
from ergo.evaluation import (
    PredictionRecord,
    attention_to_csv,
    dump_attention,
    f1_score,
    histogram_to_csv,
    predict_documents,
    probability_histogram,
    prf1,
    record_from_dict,
    run_cross_validation,
)
from ergo.model import PairGraphModel, RGTConfig
from ergo.relgraph import build_graph
from ergo.synthetic import make_synthetic_corpus, make_synthetic_document
from ergo.training import FocalConfig, TrainConfig
from ergo import tensor as T


def record(gold, p, scope="intra", doc="d", a="e0", b="e1"):
    return PredictionRecord(doc, a, b, scope, gold, p)


class TestPRF1:
    def test_formula(self):
        records = [
            record("positive", 0.9),
            record("positive", 0.8),
            record("negative", 0.7),
            record("positive", 0.2),
            record("positive", 0.1),
            record("negative", 0.3),
        ]
        out = prf1(records)
        assert out["TP"] == 2 and out["FP"] == 1 and out["FN"] == 2
        assert out["P"] == pytest.approx(2 / 3)
        assert out["R"] == pytest.approx(1 / 2)
        assert out["F1"] == pytest.approx(4 / 7)

    def test_paper_style_pr_to_f1(self):
        assert f1_score(22.5, 98.6) == pytest.approx(36.6, abs=0.1)

    def test_degenerate_all_zero(self):
        out = prf1([record("negative", 0.1)])
        assert (out["P"], out["R"], out["F1"]) == (0.0, 0.0, 0.0)

    def test_permutation_invariant_and_scope_counts_sum(self, rng):
        records = [
            record("positive" if rng.random() < 0.3 else "negative", float(rng.random()),
                   scope="intra" if rng.random() < 0.5 else "inter")
            for _ in range(60)
        ]
        shuffled = list(records)
        rng.shuffle(shuffled)
        assert prf1(records) == prf1(shuffled)
        intra, inter, both = prf1(records, "intra"), prf1(records, "inter"), prf1(records, "both")
        for key in ("TP", "FP", "FN"):
            assert intra[key] + inter[key] == both[key]

    def test_f1_harmonic_mean_bounds(self, rng):
        for _ in range(50):
            p, r = rng.random(), rng.random()
            if p == 0 or r == 0:
                continue
            f1 = f1_score(p, r)
            assert min(p, r) - 1e-12 <= f1 <= max(p, r) + 1e-12

    def test_bad_scope(self):
        with pytest.raises(ConfigError):
            prf1([], scope="everything")

    def test_record_round_trip(self):
        r = record("positive", 0.75, scope="inter")
        assert record_from_dict(r.as_dict()) == r
        assert r.as_dict()["predicted"] == "positive"


def tiny_cv_setup(scheme, n_docs, n_topics, seed=0):
    corpus = make_synthetic_corpus(n_docs=n_docs, events_range=(3, 5), n_topics=n_topics, seed=7)
    plan = split_folds(corpus, scheme)
    provider = SyntheticEmbeddingProvider(corpus, dim=4, seed=8, leaky=True)
    model_config = RGTConfig(input_dim=8, output_dim=6, layers=1, heads=2, dropout_rate=0.0)
    train_config = TrainConfig(learning_rate=0.02, max_epochs=2, patience=5, seed=seed)
    return corpus, plan, provider, model_config, train_config


class TestCrossValidation:
    def test_every_document_predicted_exactly_once(self):
        corpus, plan, provider, model_config, train_config = tiny_cv_setup(ESL_SCHEME, 14, 7)
        report, records = run_cross_validation(
            corpus, plan, provider, model_config, FocalConfig(), train_config
        )
        predicted_docs = {r.doc_id for r in records}
        test_docs = {d for fold in plan.folds for d in fold}
        eligible = {d for d in test_docs if len(corpus.document(d).events) >= 2}
        assert predicted_docs == eligible
        per_doc_pairs = {}
        for r in records:
            per_doc_pairs.setdefault(r.doc_id, set())
            key = (r.event_a, r.event_b)
            assert key not in per_doc_pairs[r.doc_id]
            per_doc_pairs[r.doc_id].add(key)
        assert report["pooled"]["combined"] == prf1(records)
        assert len(report["per_fold"]) == 5

    def test_ctb_excludes_inter_from_scoring(self):
        corpus, plan, provider, model_config, train_config = tiny_cv_setup(CTB_SCHEME, 10, 5)
        report, records = run_cross_validation(
            corpus, plan, provider, model_config, FocalConfig(), train_config
        )
        assert report["scope_policy"] == "intra_only"
        assert all(r.scope == "intra" for r in records)
        assert set(report["pooled"]) == {"intra"}

    def test_deterministic_across_runs_and_jobs(self):
        corpus, plan, provider, model_config, train_config = tiny_cv_setup(ESL_SCHEME, 14, 7, seed=4)
        r1, _ = run_cross_validation(corpus, plan, provider, model_config, FocalConfig(), train_config)
        r2, _ = run_cross_validation(corpus, plan, provider, model_config, FocalConfig(), train_config)
        r3, _ = run_cross_validation(
            corpus, plan, provider, model_config, FocalConfig(), train_config, jobs=3
        )
        assert json.dumps(r1, sort_keys=True) == json.dumps(r2, sort_keys=True)
        assert json.dumps(r1, sort_keys=True) == json.dumps(r3, sort_keys=True)


class TestHistogram:
    def test_example_bins(self):
        records = [record("positive", 0.92), record("negative", 0.03)]
        hist = probability_histogram(records)
        bins = hist["bins"]
        assert len(bins) == 20
        assert bins[18]["lo"] == pytest.approx(0.90) and bins[18]["pos"] == 1
        assert bins[0]["neg"] == 1

    def test_counts_conserved(self, rng):
        records = [
            record("positive" if rng.random() < 0.4 else "negative", float(rng.random()))
            for _ in range(200)
        ]
        hist = probability_histogram(records)
        assert sum(b["pos"] for b in hist["bins"]) == sum(r.gold == "positive" for r in records)
        assert sum(b["neg"] for b in hist["bins"]) == sum(r.gold == "negative" for r in records)

    def test_probability_one_in_final_bin(self):
        hist = probability_histogram([record("positive", 1.0)])
        assert hist["bins"][-1]["pos"] == 1

    def test_bad_bin_width(self):
        with pytest.raises(ConfigError):
            probability_histogram([], bin_width=0.03)

    def test_csv(self):
        csv = histogram_to_csv(probability_histogram([record("positive", 0.5)]))
        lines = csv.strip().split("\n")
        assert lines[0] == "bin_lo,bin_hi,pos_count,neg_count"
        assert len(lines) == 21


class TestDumpAttention:
    def make_model_and_graph(self, rng, m=4, heads=2):
        doc = make_synthetic_document("d", "t", rng, m, 2)
        graph = build_graph(doc, self_loops=True)
        corpus_like = {e.event_id: rng.normal(size=5) for e in doc.events}
        from ergo.encoding import EventEmbeddings

        emb = EventEmbeddings(rng.normal(size=5), corpus_like)
        model = PairGraphModel.for_event_dim(5, output_dim=6, rng=rng, layers=2, heads=heads, dropout_rate=0.0)
        model.forward(emb, graph)
        return model, graph

    def test_singleton_node(self, rng):
        model, graph = self.make_model_and_graph(rng, m=2)
        assert dump_attention(model, graph, 0, 0, 0) == [(0, 1.0)]

    def test_zero_query_uniform(self, rng):
        model, graph = self.make_model_and_graph(rng, m=4)
        model.params["layer0.head0.query"] = T.Tensor(np.zeros(model.params["layer0.head0.query"].shape))
        doc_emb = None
        # rerun forward with the zeroed query
        from ergo.encoding import EventEmbeddings

        emb = EventEmbeddings(np.zeros(5), {p: np.zeros(5) for n in graph.nodes for p in (n.event_a, n.event_b)})
        model.forward(emb, graph)
        entries = dump_attention(model, graph, 0, 0, 0)
        values = [v for _, v in entries]
        np.testing.assert_allclose(values, 1.0 / len(values), atol=1e-12)

    def test_descending_and_normalized_and_bit_exact(self, rng):
        model, graph = self.make_model_and_graph(rng, m=5)
        entries = dump_attention(model, graph, 2, 1, 1)
        values = [v for _, v in entries]
        assert values == sorted(values, reverse=True)
        assert sum(values) == pytest.approx(1.0, abs=1e-6)
        att = model.attention(1, 1)
        for j, v in entries:
            assert v == att[2, j]

    def test_invalid_indices(self, rng):
        model, graph = self.make_model_and_graph(rng)
        with pytest.raises(Exception):
            dump_attention(model, graph, 99, 0, 0)
        with pytest.raises(ConfigError):
            dump_attention(model, graph, 0, 9, 0)

    def test_csv_lists_neighbor_events(self, rng):
        model, graph = self.make_model_and_graph(rng)
        csv = attention_to_csv(graph, dump_attention(model, graph, 0, 0, 0))
        lines = csv.strip().split("\n")
        assert lines[0] == "neighbor_a,neighbor_b,alpha"
        assert len(lines) == 1 + len(graph.adjacency[0])


class TestPredictDocuments:
    def test_skips_tiny_documents_and_orders_pairs(self, rng):
        corpus = make_synthetic_corpus(n_docs=4, events_range=(2, 4), seed=3)
        provider = SyntheticEmbeddingProvider(corpus, dim=4, seed=3)
        model = PairGraphModel.for_event_dim(4, output_dim=4, rng=rng, layers=1, heads=2)
        records = predict_documents(model, corpus.documents, provider)
        for r in records:
            assert 0.0 <= r.p_positive <= 1.0
            assert r.predicted in ("positive", "negative")
        docs_with_pairs = [d.doc_id for d in corpus.documents if len(d.events) >= 2]
        assert {r.doc_id for r in records} == set(docs_with_pairs)
