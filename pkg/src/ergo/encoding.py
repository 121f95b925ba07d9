"""Event embeddings: window planning, marker averaging, and the interchange format.

The engine never runs a text encoder. It consumes per-window token
embeddings from interchange files (or a synthetic provider) and reduces
them to one global vector plus one vector per event by averaging each
event's marker embedding over every window that contains it.

Interchange file layout (one file per document):

* binary variant (writer default): a single JSON header line
  ``{"doc_id", "d", "windows": [{"start", "end", "global_index",
  "marker_positions": {event_id: row}}, ...]}`` terminated by a newline,
  followed by row-major little-endian float32 blocks of ``(end - start) * d``
  values per window, in header order.
* pure JSON variant: the same header object with an ``"embeddings"``
  nested-array field inside each window.

``start``/``end`` index rows of the concatenated payload (``end - start``
is the window's embedded token count, including any producer-added special
tokens). ``global_index`` and marker positions are row offsets within the
window's own block. Unknown header keys are ignored, so producers may add
bookkeeping fields.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import Corpus, Document
from .errors import DataError


@dataclass(frozen=True)
class WindowPlan:
    window_size: int
    step: int
    windows: tuple[tuple[int, int], ...]


@dataclass
class WindowBlock:
    start: int
    end: int
    global_index: int
    marker_positions: dict[str, int]
    embeddings: np.ndarray  # (end - start) x d

    @property
    def length(self) -> int:
        return self.end - self.start


@dataclass
class WindowEmbeddings:
    doc_id: str
    dim: int
    windows: list[WindowBlock]


@dataclass
class EventEmbeddings:
    global_vec: np.ndarray  # (d,)
    per_event: dict[str, np.ndarray]  # event_id -> (d,)

    @property
    def dim(self) -> int:
        return self.global_vec.shape[0]


def plan_windows(doc_len: int, window_size: int, step: int) -> WindowPlan:
    """Overlapping window starts at multiples of ``step`` plus a clamped tail.

    Starts run 0, step, 2*step, ... while a full window still reaches past
    them, then one final window ending exactly at ``doc_len``.
    """
    if window_size <= 0:
        raise DataError(f"window_size must be positive, got {window_size}")
    if not 0 < step <= window_size:
        raise DataError(f"step must be in (0, window_size], got step={step} size={window_size}")
    if doc_len <= 0:
        raise DataError(f"doc_len must be positive, got {doc_len}")
    if doc_len <= window_size:
        return WindowPlan(window_size, step, ((0, doc_len),))
    starts = []
    s = 0
    while s + window_size < doc_len:
        starts.append(s)
        s += step
    final = doc_len - window_size
    if final not in starts:
        starts.append(final)
    return WindowPlan(window_size, step, tuple((s, s + window_size) for s in starts))


def _anchored_mean(rows: list[np.ndarray]) -> np.ndarray:
    # mean as anchor + mean of deviations: exact when all rows are identical
    anchor = rows[0]
    if len(rows) == 1:
        return anchor.copy()
    return anchor + np.mean(np.stack(rows) - anchor, axis=0)


def aggregate_markers(windows: list[WindowBlock]) -> EventEmbeddings:
    """Average each event's marker embedding and the global token over windows."""
    if not windows:
        raise DataError("no windows to aggregate")
    dim = windows[0].embeddings.shape[1]
    global_rows = []
    per_event_rows: dict[str, list[np.ndarray]] = {}
    for w in windows:
        if w.embeddings.shape[1] != dim:
            raise DataError(f"window dimension {w.embeddings.shape[1]} differs from {dim}")
        global_rows.append(np.asarray(w.embeddings[w.global_index], dtype=np.float64))
        for event_id, pos in w.marker_positions.items():
            per_event_rows.setdefault(event_id, []).append(
                np.asarray(w.embeddings[pos], dtype=np.float64)
            )
    per_event = {eid: _anchored_mean(rows) for eid, rows in sorted(per_event_rows.items())}
    return EventEmbeddings(_anchored_mean(global_rows), per_event)


def event_embeddings_for_document(doc: Document, windows: WindowEmbeddings) -> EventEmbeddings:
    """Aggregate and verify that every document event was embedded."""
    agg = aggregate_markers(windows.windows)
    missing = [e.event_id for e in doc.events if e.event_id not in agg.per_event]
    if missing:
        raise DataError(f"document {doc.doc_id!r}: no marker embedding for event {missing[0]!r}")
    return agg


def _validate_header(header: dict, origin: str) -> tuple[str, int, list[dict]]:
    doc_id = header.get("doc_id")
    dim = header.get("d")
    windows = header.get("windows")
    if not isinstance(doc_id, str) or not doc_id:
        raise DataError(f"{origin}: header missing doc_id")
    if not isinstance(dim, int) or dim <= 0:
        raise DataError(f"{origin}: header dimension must be a positive int, got {dim!r}")
    if not isinstance(windows, list) or not windows:
        raise DataError(f"{origin}: header must list at least one window")
    for k, w in enumerate(windows):
        start, end = w.get("start"), w.get("end")
        if not (isinstance(start, int) and isinstance(end, int) and 0 <= start < end):
            raise DataError(f"{origin}: window {k} has invalid range [{start!r}, {end!r})")
        length = end - start
        gi = w.get("global_index")
        if not (isinstance(gi, int) and 0 <= gi < length):
            raise DataError(f"{origin}: window {k} global_index {gi!r} outside [0, {length})")
        markers = w.get("marker_positions", {})
        if not isinstance(markers, dict):
            raise DataError(f"{origin}: window {k} marker_positions must be a mapping")
        for eid, pos in markers.items():
            if not (isinstance(pos, int) and 0 <= pos < length):
                raise DataError(
                    f"{origin}: window {k} marker for event {eid!r} at {pos!r} outside [0, {length})"
                )
    return doc_id, dim, windows


def load_precomputed(path: Path, expected_doc_id: str | None = None) -> WindowEmbeddings:
    """Read an interchange file (binary or pure-JSON variant)."""
    path = Path(path)
    blob = path.read_bytes()
    header: dict | None = None
    payload: bytes = b""
    try:
        parsed = json.loads(blob.decode("utf-8"))
        if isinstance(parsed, dict):
            header = parsed
    except (UnicodeDecodeError, json.JSONDecodeError):
        header = None
    if header is None:
        newline = blob.find(b"\n")
        if newline < 0:
            raise DataError(f"{path}: no header line found")
        try:
            header = json.loads(blob[:newline].decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise DataError(f"{path}: malformed header ({exc})") from exc
        payload = blob[newline + 1 :]

    doc_id, dim, raw_windows = _validate_header(header, str(path))
    if expected_doc_id is not None and doc_id != expected_doc_id:
        raise DataError(f"{path}: holds doc_id {doc_id!r}, expected {expected_doc_id!r}")

    blocks: list[WindowBlock] = []
    if any("embeddings" in w for w in raw_windows):
        for k, w in enumerate(raw_windows):
            rows = w.get("embeddings")
            length = w["end"] - w["start"]
            if not isinstance(rows, list) or len(rows) != length:
                raise DataError(f"{path}: window {k} embeddings do not cover {length} tokens")
            arr = np.asarray(rows, dtype=np.float32)
            if arr.ndim != 2 or arr.shape[1] != dim:
                raise DataError(f"{path}: window {k} rows have dimension {arr.shape}, header says {dim}")
            blocks.append(
                WindowBlock(w["start"], w["end"], w["global_index"], dict(w.get("marker_positions", {})), arr)
            )
        return WindowEmbeddings(doc_id, dim, blocks)

    values = np.frombuffer(payload, dtype="<f4")
    needed = sum(w["end"] - w["start"] for w in raw_windows) * dim
    if values.size < needed:
        raise DataError(f"{path}: payload truncated ({values.size} floats, header promises {needed})")
    if values.size > needed:
        raise DataError(f"{path}: payload has {values.size - needed} trailing floats")
    at = 0
    for w in raw_windows:
        length = w["end"] - w["start"]
        arr = values[at : at + length * dim].reshape(length, dim).copy()
        at += length * dim
        blocks.append(
            WindowBlock(w["start"], w["end"], w["global_index"], dict(w.get("marker_positions", {})), arr)
        )
    return WindowEmbeddings(doc_id, dim, blocks)


def write_embeddings(emb: WindowEmbeddings, path: Path, binary: bool = True) -> None:
    """Write an interchange file; `start`/`end` are rebuilt as payload row offsets."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    windows = []
    at = 0
    for w in emb.windows:
        n = w.embeddings.shape[0]
        entry = {
            "start": at,
            "end": at + n,
            "global_index": w.global_index,
            "marker_positions": dict(sorted(w.marker_positions.items())),
        }
        if not binary:
            entry["embeddings"] = np.asarray(w.embeddings, dtype=np.float32).tolist()
        windows.append(entry)
        at += n
    header = {"doc_id": emb.doc_id, "d": emb.dim, "windows": windows}
    if binary:
        with open(path, "wb") as fh:
            fh.write(json.dumps(header, sort_keys=True).encode("utf-8"))
            fh.write(b"\n")
            for w in emb.windows:
                fh.write(np.ascontiguousarray(w.embeddings, dtype="<f4").tobytes())
    else:
        path.write_text(json.dumps(header, sort_keys=True), encoding="utf-8")


def _event_seed(seed: int, doc_id: str, event_id: str) -> int:
    digest = hashlib.sha256(f"{seed}:{doc_id}:{event_id}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


class SyntheticEmbeddingProvider:
    """Deterministic stand-in for a text encoder.

    Vectors depend only on (seed, doc_id, event_id). In leaky mode a planted
    direction is mixed into the vectors of events that participate in any
    causal link, which makes the pair labels recoverable downstream.
    """

    def __init__(self, corpus: Corpus, dim: int, seed: int = 0, leaky: bool = False, leak_scale: float = 4.0):
        if dim <= 0:
            raise DataError(f"embedding dimension must be positive, got {dim}")
        self.corpus = corpus
        self._dim = dim
        self.seed = seed
        self.leaky = leaky
        self.leak_scale = leak_scale
        direction = np.random.default_rng(_event_seed(seed, "__plant__", "__plant__")).normal(size=dim)
        self._plant = direction / np.linalg.norm(direction)

    @property
    def dim(self) -> int:
        return self._dim

    def __call__(self, doc: Document) -> EventEmbeddings:
        linked = {e for ln in doc.links for e in (ln.source, ln.target)}
        per_event = {}
        for ev in doc.events:
            rng = np.random.default_rng(_event_seed(self.seed, doc.doc_id, ev.event_id))
            vec = rng.normal(size=self._dim) / np.sqrt(self._dim)
            if self.leaky and ev.event_id in linked:
                vec = vec + self.leak_scale * self._plant
            per_event[ev.event_id] = vec
        rng = np.random.default_rng(_event_seed(self.seed, doc.doc_id, "__global__"))
        return EventEmbeddings(rng.normal(size=self._dim) / np.sqrt(self._dim), per_event)


class PrecomputedEmbeddingProvider:
    """Serve embeddings from a directory of interchange files named <doc_id>.emb."""

    def __init__(self, directory: Path):
        self.directory = Path(directory)
        if not self.directory.is_dir():
            raise DataError(f"embedding directory {self.directory} does not exist")
        self._dim: int | None = None
        self._cache: dict[str, EventEmbeddings] = {}
        first = sorted(self.directory.glob("*.emb")) + sorted(self.directory.glob("*.emb.json"))
        if first:
            self._dim = load_precomputed(first[0]).dim

    def _path_for(self, doc_id: str) -> Path:
        for suffix in (".emb", ".emb.json"):
            candidate = self.directory / f"{doc_id}{suffix}"
            if candidate.exists():
                return candidate
        raise DataError(f"no embedding file for doc_id {doc_id!r} under {self.directory}")

    @property
    def dim(self) -> int:
        if self._dim is None:
            raise DataError("embedding dimension unknown before the first document is loaded")
        return self._dim

    def load(self, doc: Document) -> EventEmbeddings:
        if doc.doc_id not in self._cache:
            windows = load_precomputed(self._path_for(doc.doc_id), expected_doc_id=doc.doc_id)
            if self._dim is None:
                self._dim = windows.dim
            elif windows.dim != self._dim:
                raise DataError(
                    f"document {doc.doc_id!r} has dimension {windows.dim}, earlier files had {self._dim}"
                )
            self._cache[doc.doc_id] = event_embeddings_for_document(doc, windows)
        return self._cache[doc.doc_id]

    def __call__(self, doc: Document) -> EventEmbeddings:
        return self.load(doc)
