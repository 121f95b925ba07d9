"""Corpus model: documents, event pairs, fold plans, and statistics.

A corpus is a directory of JSON documents. Each document carries tokens,
sentence boundaries (strictly increasing sentence end offsets, the last
equal to the token count), gold event mentions, and undirected causal
links. Event pairs are unordered and binary labeled: a pair is positive
when any link connects its two events in either direction.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import DataError

ESL_SCHEME = "esl_5fold_topic"
CTB_SCHEME = "ctb_10fold_doc"


@dataclass(frozen=True)
class EventMention:
    event_id: str
    sentence_index: int
    token_span: tuple[int, int]
    surface: str


@dataclass(frozen=True)
class CausalLink:
    source: str
    target: str
    direction: str | None = None


@dataclass(frozen=True)
class EventPair:
    doc_id: str
    event_a: str
    event_b: str
    label: str  # "positive" | "negative"
    scope: str  # "intra" | "inter"


@dataclass(frozen=True)
class Document:
    doc_id: str
    topic_id: str
    tokens: tuple[str, ...]
    sentence_boundaries: tuple[int, ...]
    events: tuple[EventMention, ...]  # sorted by (span start, span end, id)
    links: tuple[CausalLink, ...]

    def event_ids(self) -> list[str]:
        return [e.event_id for e in self.events]

    def event(self, event_id: str) -> EventMention:
        for e in self.events:
            if e.event_id == event_id:
                return e
        raise KeyError(event_id)


@dataclass(frozen=True)
class Corpus:
    documents: tuple[Document, ...]  # sorted by doc_id

    def __len__(self) -> int:
        return len(self.documents)

    def document(self, doc_id: str) -> Document:
        for d in self.documents:
            if d.doc_id == doc_id:
                return d
        raise KeyError(doc_id)

    def topic_ids(self) -> list[str]:
        return sorted({d.topic_id for d in self.documents})


@dataclass(frozen=True)
class FoldPlan:
    scheme: str
    dev_docs: tuple[str, ...]
    folds: tuple[tuple[str, ...], ...]


@dataclass
class CorpusStats:
    topics: int = 0
    documents: int = 0
    events: int = 0
    intra_pairs: int = 0
    inter_pairs: int = 0
    intra_positive: int = 0
    inter_positive: int = 0

    @property
    def pairs(self) -> int:
        return self.intra_pairs + self.inter_pairs

    @property
    def positive(self) -> int:
        return self.intra_positive + self.inter_positive

    def as_dict(self) -> dict:
        return {
            "topics": self.topics,
            "documents": self.documents,
            "events": self.events,
            "pairs": {"intra": self.intra_pairs, "inter": self.inter_pairs, "total": self.pairs},
            "positive": {
                "intra": self.intra_positive,
                "inter": self.inter_positive,
                "total": self.positive,
            },
        }


def _bad(doc_id: str, problem: str) -> DataError:
    return DataError(f"document {doc_id!r}: {problem}")


def document_from_dict(raw: dict, origin: str = "<dict>") -> Document:
    """Validate a raw document mapping and freeze it into a Document."""
    doc_id = raw.get("doc_id")
    if not isinstance(doc_id, str) or not doc_id:
        raise DataError(f"{origin}: missing or invalid doc_id")
    topic_id = raw.get("topic_id")
    if not isinstance(topic_id, str) or not topic_id:
        raise _bad(doc_id, "missing or invalid topic_id")
    tokens = raw.get("tokens")
    if not isinstance(tokens, list) or any(not isinstance(t, str) for t in tokens):
        raise _bad(doc_id, "tokens must be a list of strings")
    bounds = raw.get("sentence_boundaries")
    if not isinstance(bounds, list) or any(not isinstance(b, int) for b in bounds):
        raise _bad(doc_id, "sentence_boundaries must be a list of ints")
    if any(b2 <= b1 for b1, b2 in zip(bounds, bounds[1:])):
        raise _bad(doc_id, "sentence_boundaries must be strictly increasing")
    if tokens and (not bounds or bounds[-1] != len(tokens)):
        raise _bad(doc_id, "last sentence boundary must equal the token count")

    events = []
    seen_ids = set()
    for e in raw.get("events", []):
        event_id = e.get("event_id")
        if not isinstance(event_id, str) or not event_id:
            raise _bad(doc_id, "event with missing event_id")
        if event_id in seen_ids:
            raise _bad(doc_id, f"duplicate event_id {event_id!r}")
        seen_ids.add(event_id)
        span = e.get("token_span")
        if not (isinstance(span, list) and len(span) == 2):
            raise _bad(doc_id, f"event {event_id!r}: token_span must be [start, end)")
        start, end = span
        if not (0 <= start < end <= len(tokens)):
            raise _bad(doc_id, f"event {event_id!r}: span [{start}, {end}) outside [0, {len(tokens)})")
        sent = e.get("sentence_index")
        if not isinstance(sent, int) or not 0 <= sent < len(bounds):
            raise _bad(doc_id, f"event {event_id!r}: sentence_index {sent} invalid")
        events.append(
            EventMention(event_id, sent, (start, end), e.get("surface", " ".join(tokens[start:end])))
        )

    events.sort(key=lambda e: (e.token_span[0], e.token_span[1], e.event_id))
    for prev, nxt in zip(events, events[1:]):
        if nxt.token_span[0] < prev.token_span[1]:
            raise _bad(doc_id, f"events {prev.event_id!r} and {nxt.event_id!r} overlap")

    links = []
    for ln in raw.get("links", []):
        src, tgt = ln.get("source"), ln.get("target")
        for ref in (src, tgt):
            if ref not in seen_ids:
                raise _bad(doc_id, f"link references unknown event {ref!r}")
        if src == tgt:
            raise _bad(doc_id, f"link from event {src!r} to itself")
        links.append(CausalLink(src, tgt, ln.get("direction")))

    return Document(doc_id, topic_id, tuple(tokens), tuple(bounds), tuple(events), tuple(links))


def document_to_dict(doc: Document) -> dict:
    out = {
        "doc_id": doc.doc_id,
        "topic_id": doc.topic_id,
        "tokens": list(doc.tokens),
        "sentence_boundaries": list(doc.sentence_boundaries),
        "events": [
            {
                "event_id": e.event_id,
                "sentence_index": e.sentence_index,
                "token_span": list(e.token_span),
                "surface": e.surface,
            }
            for e in doc.events
        ],
        "links": [
            {"source": ln.source, "target": ln.target}
            | ({"direction": ln.direction} if ln.direction else {})
            for ln in doc.links
        ],
    }
    return out


def load_document(path: Path) -> Document:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(raw, dict):
        raise DataError(f"{path}: expected a JSON object")
    return document_from_dict(raw, origin=str(path))


def load_corpus(directory: Path) -> Corpus:
    """Load every ``*.json`` document under a directory. Empty directory is fine."""
    directory = Path(directory)
    if not directory.is_dir():
        raise DataError(f"corpus directory {directory} does not exist")
    docs: dict[str, Document] = {}
    for path in sorted(directory.glob("*.json")):
        doc = load_document(path)
        if doc.doc_id in docs:
            raise DataError(f"duplicate doc_id {doc.doc_id!r} (second copy in {path})")
        docs[doc.doc_id] = doc
    return Corpus(tuple(docs[k] for k in sorted(docs)))


def save_corpus(corpus: Corpus, directory: Path) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for doc in corpus.documents:
        path = directory / f"{doc.doc_id}.json"
        path.write_text(json.dumps(document_to_dict(doc), indent=1, sort_keys=True), encoding="utf-8")


def enumerate_pairs(doc: Document) -> list[EventPair]:
    """All unordered event pairs in mention order: C(m, 2) of them."""
    linked = {frozenset((ln.source, ln.target)) for ln in doc.links}
    pairs = []
    for i, a in enumerate(doc.events):
        for b in doc.events[i + 1 :]:
            label = "positive" if frozenset((a.event_id, b.event_id)) in linked else "negative"
            scope = "intra" if a.sentence_index == b.sentence_index else "inter"
            pairs.append(EventPair(doc.doc_id, a.event_id, b.event_id, label, scope))
    return pairs


def split_folds(corpus: Corpus, scheme: str) -> FoldPlan:
    """Build the cross-validation plan for a corpus.

    ``esl_5fold_topic``: topics sorted by id, last two held out as dev,
    the rest dealt round-robin into 5 folds of whole topics.
    ``ctb_10fold_doc``: documents sorted by id into 10 near-equal folds,
    no dev set.
    """
    if scheme == ESL_SCHEME:
        topics = corpus.topic_ids()
        if len(topics) < 7:
            raise DataError(f"{scheme} needs at least 7 topics, corpus has {len(topics)}")
        dev_topics = set(topics[-2:])
        by_topic: dict[str, list[str]] = {t: [] for t in topics}
        for d in corpus.documents:
            by_topic[d.topic_id].append(d.doc_id)
        dev_docs = sorted(doc for t in dev_topics for doc in by_topic[t])
        fold_topics: list[list[str]] = [[] for _ in range(5)]
        for i, t in enumerate(topics[:-2]):
            fold_topics[i % 5].append(t)
        folds = tuple(
            tuple(sorted(doc for t in group for doc in by_topic[t])) for group in fold_topics
        )
        return FoldPlan(scheme, tuple(dev_docs), folds)

    if scheme == CTB_SCHEME:
        ids = [d.doc_id for d in corpus.documents]
        if len(ids) < 10:
            raise DataError(f"{scheme} needs at least 10 documents, corpus has {len(ids)}")
        base, extra = divmod(len(ids), 10)
        folds, at = [], 0
        for k in range(10):
            size = base + (1 if k < extra else 0)
            folds.append(tuple(ids[at : at + size]))
            at += size
        return FoldPlan(scheme, (), tuple(folds))

    raise DataError(f"unknown fold scheme {scheme!r}")


def corpus_stats(corpus: Corpus) -> CorpusStats:
    stats = CorpusStats(topics=len(corpus.topic_ids()), documents=len(corpus))
    for doc in corpus.documents:
        stats.events += len(doc.events)
        for pair in enumerate_pairs(doc):
            if pair.scope == "intra":
                stats.intra_pairs += 1
                stats.intra_positive += pair.label == "positive"
            else:
                stats.inter_pairs += 1
                stats.inter_positive += pair.label == "positive"
    return stats
