"""Build relational graphs whose nodes are event pairs.

A document with m events yields C(m, 2) pair nodes. Two nodes are adjacent
when their pairs share an event, so chains of pairs can exchange evidence;
the complete-graph variant connects everything and serves as an ablation.
"""

import numpy as np

from ergo import build_graph, enumerate_pairs, neighbors
from ergo.synthetic import make_synthetic_document

rng = np.random.default_rng(0)
doc = make_synthetic_document("demo", "topic", rng, n_events=5, clique_size=3)

print(f"document {doc.doc_id}: {len(doc.tokens)} tokens, {len(doc.events)} events, "
      f"{len(doc.links)} causal links")
for pair in enumerate_pairs(doc):
    print(f"  ({pair.event_a}, {pair.event_b})  label={pair.label:<8}  scope={pair.scope}")

for strategy in ("shared_event", "complete"):
    graph = build_graph(doc, strategy, self_loops=False)
    m = len(doc.events)
    print(f"\n{strategy}: {graph.n_nodes} nodes, {graph.edge_count()} edges")
    if strategy == "shared_event":
        print(f"  closed form m(m-1)(m-2)/2 = {m * (m - 1) * (m - 2) // 2}")
        node = 0
        pair = graph.nodes[node]
        print(f"  neighbors of ({pair.event_a}, {pair.event_b}):")
        for j in neighbors(graph, node):
            other = graph.nodes[j]
            shared = {pair.event_a, pair.event_b} & {other.event_a, other.event_b}
            print(f"    node {j} ({other.event_a}, {other.event_b}) via {sorted(shared)}")
