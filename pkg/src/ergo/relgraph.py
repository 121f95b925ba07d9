"""Relational graphs over event pairs.

Each node is an unordered event pair; nodes are adjacent when their pairs
share an event (``shared_event`` strategy) or unconditionally (``complete``
strategy). Self-loops default on so every node attends at least to itself,
which keeps the neighborhood softmax defined even for a lone node.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import Document, EventPair, enumerate_pairs
from .errors import DataError

SHARED_EVENT = "shared_event"
COMPLETE = "complete"
STRATEGIES = (SHARED_EVENT, COMPLETE)


@dataclass(frozen=True)
class RelationalGraph:
    doc_id: str
    nodes: tuple[EventPair, ...]  # node id = position
    adjacency: tuple[tuple[int, ...], ...]  # sorted neighbor ids per node
    strategy: str
    self_loops: bool

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    def edge_count(self) -> int:
        """Undirected edges, self-loops excluded."""
        return sum(sum(1 for j in nbrs if j > i) for i, nbrs in enumerate(self.adjacency))

    def neighbor_mask(self) -> np.ndarray:
        """Boolean N x N adjacency (includes self-loops when enabled)."""
        n = self.n_nodes
        mask = np.zeros((n, n), dtype=bool)
        for i, nbrs in enumerate(self.adjacency):
            mask[i, list(nbrs)] = True
        return mask


def build_graph(doc: Document, strategy: str = SHARED_EVENT, self_loops: bool = True) -> RelationalGraph:
    if strategy not in STRATEGIES:
        raise DataError(f"unknown edge strategy {strategy!r}; expected one of {STRATEGIES}")
    pairs = enumerate_pairs(doc)
    if not pairs:
        raise DataError(f"document {doc.doc_id!r} has no pairs ({len(doc.events)} events)")
    n = len(pairs)
    members = [frozenset((p.event_a, p.event_b)) for p in pairs]
    adjacency: list[list[int]] = [[] for _ in range(n)]
    for i in range(n):
        if self_loops:
            adjacency[i].append(i)
        for j in range(i + 1, n):
            if strategy == COMPLETE or members[i] & members[j]:
                adjacency[i].append(j)
                adjacency[j].append(i)
    return RelationalGraph(
        doc.doc_id,
        tuple(pairs),
        tuple(tuple(sorted(nbrs)) for nbrs in adjacency),
        strategy,
        self_loops,
    )


def neighbors(graph: RelationalGraph, node_id: int) -> tuple[int, ...]:
    if not 0 <= node_id < graph.n_nodes:
        raise DataError(f"node id {node_id} out of range for {graph.n_nodes} nodes")
    return graph.adjacency[node_id]


def graph_to_dict(graph: RelationalGraph) -> dict:
    """JSON-friendly dump used by the make-graph command."""
    return {
        "doc_id": graph.doc_id,
        "strategy": graph.strategy,
        "nodes": [[p.event_a, p.event_b, p.label, p.scope] for p in graph.nodes],
        "edges": [[i, j] for i, nbrs in enumerate(graph.adjacency) for j in nbrs if j > i],
    }
