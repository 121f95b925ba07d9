"""Deterministic synthetic corpora for desk-scale experiments and tests.

Causal links are drawn as a clique over a random subset of each document's
events, so "participates in a causal link" exactly characterizes positive
pairs. Combined with the label-leaky embedding mode this makes the learning
problem solvable by the pair classifier, which is what overfit sanity
checks need.
"""

from __future__ import annotations

import numpy as np

from .corpus import CausalLink, Corpus, Document, EventMention


def make_synthetic_document(
    doc_id: str,
    topic_id: str,
    rng: np.random.Generator,
    n_events: int,
    clique_size: int,
) -> Document:
    n_sentences = int(rng.integers(2, 5))
    lengths = rng.integers(6, 11, size=n_sentences)
    boundaries = np.cumsum(lengths)
    n_tokens = int(boundaries[-1])
    tokens = [f"w{i}" for i in range(n_tokens)]

    positions = sorted(rng.choice(n_tokens, size=min(n_events, n_tokens), replace=False).tolist())
    events = []
    for k, pos in enumerate(positions):
        sentence = int(np.searchsorted(boundaries, pos, side="right"))
        events.append(EventMention(f"e{k}", sentence, (pos, pos + 1), tokens[pos]))

    clique = sorted(rng.choice(len(events), size=min(clique_size, len(events)), replace=False).tolist())
    links = [
        CausalLink(events[a].event_id, events[b].event_id)
        for i, a in enumerate(clique)
        for b in clique[i + 1 :]
    ]
    return Document(
        doc_id,
        topic_id,
        tuple(tokens),
        tuple(int(b) for b in boundaries),
        tuple(events),
        tuple(links),
    )


def make_synthetic_corpus(
    n_docs: int = 20,
    events_range: tuple[int, int] = (4, 8),
    clique_range: tuple[int, int] = (2, 3),
    n_topics: int = 10,
    seed: int = 0,
) -> Corpus:
    rng = np.random.default_rng(seed)
    docs = []
    for i in range(n_docs):
        n_events = int(rng.integers(events_range[0], events_range[1] + 1))
        clique = int(rng.integers(clique_range[0], clique_range[1] + 1))
        docs.append(
            make_synthetic_document(f"doc{i:03d}", f"t{i % n_topics:02d}", rng, n_events, clique)
        )
    return Corpus(tuple(sorted(docs, key=lambda d: d.doc_id)))
