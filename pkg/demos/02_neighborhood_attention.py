"""Multi-head attention restricted to graph neighborhoods.

Attention weights are softmax-normalized over each node's neighbors only;
everything else is exactly zero. The dump at the end is what the
``dump-attention`` command emits as CSV.
"""

import numpy as np

from ergo import PairGraphModel, build_graph, dump_attention
from ergo.encoding import SyntheticEmbeddingProvider
from ergo.synthetic import make_synthetic_corpus

corpus = make_synthetic_corpus(n_docs=1, events_range=(5, 5), seed=3)
doc = corpus.documents[0]
provider = SyntheticEmbeddingProvider(corpus, dim=8, seed=1)

graph = build_graph(doc, self_loops=True)
model = PairGraphModel.for_event_dim(8, output_dim=12, rng=np.random.default_rng(7), layers=2, heads=2)
probs = model.forward(provider(doc), graph)

print(f"{graph.n_nodes} pair nodes; class probabilities for the first three:")
for i in range(3):
    pair = graph.nodes[i]
    print(f"  ({pair.event_a}, {pair.event_b})  p_causal={probs.values[i, 1]:.3f}")

att = model.attention(layer=0, head=0)
mask = graph.neighbor_mask()
print(f"\nattention rows sum to 1: {np.allclose(att.sum(axis=1), 1.0)}")
print(f"non-neighbor entries exactly zero: {(att[~mask] == 0).all()}")

node = 0
print(f"\nstrongest neighbors of node {node} (layer 0, head 0):")
for j, alpha in dump_attention(model, graph, node, layer=0, head=0)[:5]:
    pair = graph.nodes[j]
    print(f"  ({pair.event_a}, {pair.event_b})  alpha={alpha:.4f}")
