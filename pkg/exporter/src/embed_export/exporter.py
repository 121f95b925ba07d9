"""Marker insertion, window planning, encoding, and interchange writing.

Window semantics match the engine's planner: starts at multiples of the
step while a full window still reaches past them, plus one final window
clamped to end at the sequence end. Each window is encoded as
[CLS] + slice + [SEP] (or the encoder's equivalents) and the full encoded
rows are emitted, so ``global_index`` is always 0 and marker positions are
offset by one. A window "contains" an event when it contains the event's
opening marker token.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .corpus_io import DocumentView, read_corpus

MARK_START = "<t>"
MARK_END = "</t>"


class ExportError(RuntimeError):
    pass


@dataclass
class ExportJob:
    corpus_dir: Path
    encoder: str  # registry name or local path of a saved encoder
    out_dir: Path
    window_size: int = 256
    step: int = 32
    doc_ids: list[str] | None = None


def insert_markers(tokens, events) -> tuple[list[str], dict[str, int]]:
    """Wrap every event span in marker tokens.

    Returns the marked word sequence and each event's opening-marker
    position in it. The marked length is always
    ``len(tokens) + 2 * len(events)``.
    """
    marked: list[str] = []
    starts: dict[str, int] = {}
    at = 0
    for event_id, start, end in events:
        marked.extend(tokens[at:start])
        starts[event_id] = len(marked)
        marked.append(MARK_START)
        marked.extend(tokens[start:end])
        marked.append(MARK_END)
        at = end
    marked.extend(tokens[at:])
    return marked, starts


def plan_window_ranges(length: int, window_size: int, step: int) -> list[tuple[int, int]]:
    """Engine-compatible overlapping windows over ``[0, length)``."""
    if window_size <= 0 or not 0 < step <= window_size:
        raise ExportError(f"invalid window plan: size={window_size} step={step}")
    if length <= window_size:
        return [(0, length)]
    starts = []
    s = 0
    while s + window_size < length:
        starts.append(s)
        s += step
    final = length - window_size
    if final not in starts:
        starts.append(final)
    return [(s, s + window_size) for s in starts]


def resolve_encoder(name_or_path: str):
    """Load a tokenizer/model pair from a local path or the local cache only."""
    import torch
    from transformers import AutoModel, AutoTokenizer

    source = str(name_or_path)
    local = Path(source).is_dir()
    try:
        tokenizer = AutoTokenizer.from_pretrained(source, local_files_only=not local)
        model = AutoModel.from_pretrained(source, local_files_only=not local)
    except Exception as exc:
        raise ExportError(
            f"encoder {source!r} is not available locally; pass a directory of a saved "
            f"encoder or pre-download it into the cache ({exc})"
        ) from exc
    model.eval()
    for tok in (MARK_START, MARK_END):
        ids = tokenizer.convert_tokens_to_ids([tok])
        if ids[0] is None or ids[0] == tokenizer.unk_token_id:
            tokenizer.add_special_tokens({"additional_special_tokens": [MARK_START, MARK_END]})
            model.resize_token_embeddings(len(tokenizer))
            break
    return tokenizer, model


def _subword_sequence(tokenizer, marked_words, marker_starts, doc_id):
    """Flatten per-word subword pieces; map opening markers to token positions."""
    ids: list[int] = []
    word_to_first: list[int] = []
    for word in marked_words:
        pieces = tokenizer.tokenize(word)
        if not pieces:
            pieces = [tokenizer.unk_token]
        word_to_first.append(len(ids))
        ids.extend(tokenizer.convert_tokens_to_ids(pieces))
    marker_token_pos = {}
    start_id = tokenizer.convert_tokens_to_ids([MARK_START])[0]
    for event_id, word_pos in marker_starts.items():
        pos = word_to_first[word_pos]
        if ids[pos] != start_id:
            raise ExportError(
                f"document {doc_id!r}: marker for event {event_id!r} did not survive "
                f"tokenization at position {word_pos}"
            )
        marker_token_pos[event_id] = pos
    return ids, marker_token_pos


def _encode_window(model, tokenizer, ids, long_attention: bool) -> np.ndarray:
    import torch

    wrapped = [tokenizer.cls_token_id, *ids, tokenizer.sep_token_id]
    batch = torch.tensor([wrapped], dtype=torch.long)
    kwargs = {"attention_mask": torch.ones_like(batch)}
    if long_attention:
        global_mask = torch.zeros_like(batch)
        global_mask[0, 0] = 1
        kwargs["global_attention_mask"] = global_mask
    with torch.no_grad():
        hidden = model(input_ids=batch, **kwargs).last_hidden_state
    return hidden[0].to(torch.float32).cpu().numpy()


def export_document(
    doc: DocumentView, tokenizer, model, window_size: int, step: int
) -> tuple[dict, list[np.ndarray]]:
    """Encode one document into an interchange header and embedding blocks."""
    marked, marker_starts = insert_markers(doc.tokens, doc.events)
    ids, marker_pos = _subword_sequence(tokenizer, marked, marker_starts, doc.doc_id)

    long_attention = model.config.model_type == "longformer"
    if long_attention:
        limit = int(model.config.max_position_embeddings) - 2
        if len(ids) + 2 > limit:
            raise ExportError(
                f"document {doc.doc_id!r} has {len(ids)} encoder tokens, beyond the "
                f"single-window limit {limit - 2}; use a windowed (BERT-style) encoder"
            )
        ranges = [(0, len(ids))]
    else:
        ranges = plan_window_ranges(len(ids), window_size, step)

    windows = []
    blocks = []
    at = 0
    dim = int(model.config.hidden_size)
    for source_start, source_end in ranges:
        block = _encode_window(model, tokenizer, ids[source_start:source_end], long_attention)
        assert block.shape == (source_end - source_start + 2, dim)
        positions = {
            event_id: pos - source_start + 1  # +1 for the leading global token
            for event_id, pos in sorted(marker_pos.items())
            if source_start <= pos < source_end
        }
        windows.append(
            {
                "start": at,
                "end": at + block.shape[0],
                "global_index": 0,
                "marker_positions": positions,
                "source_start": source_start,
                "source_end": source_end,
            }
        )
        blocks.append(block)
        at += block.shape[0]
    header = {"doc_id": doc.doc_id, "d": dim, "windows": windows}
    return header, blocks


def write_interchange(header: dict, blocks: list[np.ndarray], path: Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode("utf-8"))
        fh.write(b"\n")
        for block in blocks:
            fh.write(np.ascontiguousarray(block, dtype="<f4").tobytes())


def export_corpus(job: ExportJob) -> list[Path]:
    """Export every selected document; returns the written file paths."""
    docs = read_corpus(job.corpus_dir)
    if job.doc_ids is not None:
        wanted = set(job.doc_ids)
        unknown = wanted - {d.doc_id for d in docs}
        if unknown:
            raise ExportError(f"doc ids not in corpus: {sorted(unknown)}")
        docs = [d for d in docs if d.doc_id in wanted]
    tokenizer, model = resolve_encoder(job.encoder)
    written = []
    for doc in docs:
        header, blocks = export_document(doc, tokenizer, model, job.window_size, job.step)
        path = Path(job.out_dir) / f"{doc.doc_id}.emb"
        write_interchange(header, blocks, path)
        written.append(path)
    return written
