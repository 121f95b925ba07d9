"""Minimal reader for the corpus document format (one JSON object per file)."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path


class CorpusFormatError(ValueError):
    pass


@dataclass(frozen=True)
class DocumentView:
    """Just the fields the exporter needs: tokens and event spans."""

    doc_id: str
    tokens: tuple[str, ...]
    events: tuple[tuple[str, int, int], ...]  # (event_id, start, end), sorted by start


def read_document(path: Path) -> DocumentView:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise CorpusFormatError(f"{path}: not valid JSON ({exc})") from exc
    doc_id = raw.get("doc_id")
    tokens = raw.get("tokens")
    if not isinstance(doc_id, str) or not doc_id:
        raise CorpusFormatError(f"{path}: missing doc_id")
    if not isinstance(tokens, list) or any(not isinstance(t, str) for t in tokens):
        raise CorpusFormatError(f"{doc_id}: tokens must be a list of strings")
    events = []
    seen = set()
    for e in raw.get("events", []):
        event_id = e.get("event_id")
        span = e.get("token_span")
        if not isinstance(event_id, str) or event_id in seen:
            raise CorpusFormatError(f"{doc_id}: missing or duplicate event_id {event_id!r}")
        seen.add(event_id)
        if not (isinstance(span, list) and len(span) == 2 and 0 <= span[0] < span[1] <= len(tokens)):
            raise CorpusFormatError(f"{doc_id}: event {event_id!r} has invalid span {span!r}")
        events.append((event_id, int(span[0]), int(span[1])))
    events.sort(key=lambda e: (e[1], e[2], e[0]))
    for (a_id, _, a_end), (b_id, b_start, _) in zip(events, events[1:]):
        if b_start < a_end:
            raise CorpusFormatError(f"{doc_id}: events {a_id!r} and {b_id!r} overlap")
    return DocumentView(doc_id, tuple(tokens), tuple(events))


def read_corpus(directory: Path) -> list[DocumentView]:
    directory = Path(directory)
    if not directory.is_dir():
        raise CorpusFormatError(f"corpus directory {directory} does not exist")
    docs = [read_document(p) for p in sorted(directory.glob("*.json"))]
    ids = [d.doc_id for d in docs]
    if len(set(ids)) != len(ids):
        raise CorpusFormatError("duplicate doc_id in corpus directory")
    return docs
