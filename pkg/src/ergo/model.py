"""The pair-graph network: node init, neighborhood attention layers, classifier.

A node starts as the concatenation of its two event vectors. Each layer
runs multi-head scaled dot-product attention restricted to graph
neighborhoods (or, for the ablation variant, a symmetric-normalized graph
convolution), then a shared output projection and dropout. A final linear
layer over [node vector, global document vector] gives two softmax
probabilities per pair. No residual connections and no layer norm; the
layers are exactly the attention equations and nothing else.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import tensor as T
from .encoding import EventEmbeddings
from .errors import ConfigError, DataError
from .relgraph import RelationalGraph
from .tensor import Tensor

RGT_KIND = "rgt"
GCN_KIND = "gcn"

RGT_COMPLEXITY = "O(L*H*D^2)"
GCN_COMPLEXITY = "O(L*D^2)"
GAT_COMPLEXITY = "O(L*H*D^2 + L*D)"


@dataclass(frozen=True)
class RGTConfig:
    input_dim: int
    output_dim: int
    layers: int = 2
    heads: int = 4
    head_dim: int | None = None  # default: layer input dim / heads
    dropout_rate: float = 0.2
    layer_kind: str = RGT_KIND

    def __post_init__(self):
        if self.layers < 0:
            raise ConfigError(f"layers must be >= 0, got {self.layers}")
        if self.heads < 1:
            raise ConfigError(f"heads must be >= 1, got {self.heads}")
        if self.input_dim <= 0 or self.output_dim <= 0:
            raise ConfigError("dimensions must be positive")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ConfigError(f"dropout_rate must be in [0, 1), got {self.dropout_rate}")
        if self.layer_kind not in (RGT_KIND, GCN_KIND):
            raise ConfigError(f"unknown layer_kind {self.layer_kind!r}")
        if self.layer_kind == RGT_KIND:
            for layer in range(self.layers):
                self.head_dim_at(layer)  # validates divisibility

    def input_dim_at(self, layer: int) -> int:
        return self.input_dim if layer == 0 else self.output_dim

    def head_dim_at(self, layer: int) -> int:
        if self.head_dim is not None:
            return self.head_dim
        din = self.input_dim_at(layer)
        if din % self.heads:
            raise ConfigError(
                f"layer {layer} input dim {din} not divisible by {self.heads} heads; set head_dim"
            )
        return din // self.heads

    def as_dict(self) -> dict:
        return {
            "input_dim": self.input_dim,
            "output_dim": self.output_dim,
            "layers": self.layers,
            "heads": self.heads,
            "head_dim": self.head_dim,
            "dropout_rate": self.dropout_rate,
            "layer_kind": self.layer_kind,
        }


@dataclass
class RGTLayerParams:
    query: list[Tensor]  # per head, d_in x d_k
    key: list[Tensor]
    value: list[Tensor]
    out: Tensor  # (heads * d_k) x d_out


def init_node_embeddings(embeddings: EventEmbeddings, graph: RelationalGraph) -> Tensor:
    """Node matrix: row i is [vector of event_a, vector of event_b]."""
    rows = []
    for pair in graph.nodes:
        for eid in (pair.event_a, pair.event_b):
            if eid not in embeddings.per_event:
                raise DataError(f"document {graph.doc_id!r}: missing embedding for event {eid!r}")
        rows.append(
            np.concatenate([embeddings.per_event[pair.event_a], embeddings.per_event[pair.event_b]])
        )
    return Tensor(np.stack(rows))


def rgt_layer_forward(
    v_in: Tensor,
    graph: RelationalGraph,
    layer: RGTLayerParams,
    train: bool = False,
    dropout_rate: float = 0.0,
    rng: np.random.Generator | None = None,
) -> tuple[Tensor, list[np.ndarray]]:
    """One multi-head neighborhood-attention layer.

    Per head: scores are scaled query-key dot products, softmax-normalized
    over each node's neighbors only; node outputs are the attention-weighted
    sums of neighbor value projections. Heads are concatenated and projected.
    Returns the output and the per-head attention matrices (numpy copies).
    """
    mask = graph.neighbor_mask()
    head_outputs = []
    attentions = []
    for wq, wk, wv in zip(layer.query, layer.key, layer.value):
        head_dim = wq.cols
        queries = T.matmul(v_in, wq)
        keys = T.matmul(v_in, wk)
        scores = T.scale(T.matmul(queries, T.transpose(keys)), 1.0 / np.sqrt(head_dim))
        weights = T.masked_softmax(scores, mask)
        attentions.append(weights.values.copy())
        head_outputs.append(T.matmul(weights, T.matmul(v_in, wv)))
    merged = head_outputs[0] if len(head_outputs) == 1 else T.hstack(head_outputs)
    out = T.matmul(merged, layer.out)
    return T.dropout(out, dropout_rate, train, rng), attentions


def normalized_adjacency(graph: RelationalGraph) -> np.ndarray:
    """Symmetric-normalized adjacency with self-loops forced on the diagonal."""
    mask = graph.neighbor_mask()
    np.fill_diagonal(mask, True)
    adj = mask.astype(T.active_dtype())
    inv_sqrt_deg = 1.0 / np.sqrt(adj.sum(axis=1))
    return adj * inv_sqrt_deg[:, None] * inv_sqrt_deg[None, :]


def gcn_layer_forward(
    v_in: Tensor,
    graph: RelationalGraph,
    weight: Tensor,
    train: bool = False,
    dropout_rate: float = 0.0,
    rng: np.random.Generator | None = None,
) -> Tensor:
    mixed = T.matmul(Tensor(normalized_adjacency(graph)), v_in)
    out = T.relu(T.matmul(mixed, weight))
    return T.dropout(out, dropout_rate, train, rng)


def classify_pairs(v_final: Tensor, global_vec: np.ndarray, classifier: Tensor) -> Tensor:
    """Per-pair class probabilities: softmax([node, global document vector] W)."""
    global_vec = np.asarray(global_vec).reshape(1, -1)
    if v_final.cols + global_vec.shape[1] != classifier.rows:
        raise ConfigError(
            f"classifier expects {classifier.rows} inputs, "
            f"got {v_final.cols} node dims + {global_vec.shape[1]} global dims"
        )
    tiled = Tensor(np.repeat(global_vec, v_final.rows, axis=0))
    return T.softmax_rows(T.matmul(T.hstack([v_final, tiled]), classifier))


def init_params(config: RGTConfig, event_dim: int, rng: np.random.Generator) -> dict[str, Tensor]:
    """Fresh parameter registry; iteration order is fixed by construction."""
    params: dict[str, Tensor] = {}
    for layer in range(config.layers):
        din = config.input_dim_at(layer)
        if config.layer_kind == GCN_KIND:
            params[f"layer{layer}.weight"] = T.glorot_uniform(din, config.output_dim, rng)
            continue
        dk = config.head_dim_at(layer)
        for head in range(config.heads):
            for role in ("query", "key", "value"):
                params[f"layer{layer}.head{head}.{role}"] = T.glorot_uniform(din, dk, rng)
        params[f"layer{layer}.out"] = T.glorot_uniform(config.heads * dk, config.output_dim, rng)
    final_dim = config.output_dim if config.layers > 0 else config.input_dim
    params["classifier"] = T.glorot_uniform(final_dim + event_dim, 2, rng)
    return params


def param_count(config: RGTConfig, include_classifier: bool = False, event_dim: int | None = None) -> tuple[int, str]:
    """Exact stored-scalar count and the layer stack's asymptotic class."""
    total = 0
    for layer in range(config.layers):
        din = config.input_dim_at(layer)
        if config.layer_kind == GCN_KIND:
            total += din * config.output_dim
        else:
            dk = config.head_dim_at(layer)
            total += 3 * config.heads * din * dk + config.heads * dk * config.output_dim
    if include_classifier:
        if event_dim is None:
            raise ConfigError("include_classifier requires event_dim")
        final_dim = config.output_dim if config.layers > 0 else config.input_dim
        total += (final_dim + event_dim) * 2
    return total, GCN_COMPLEXITY if config.layer_kind == GCN_KIND else RGT_COMPLEXITY


class PairGraphModel:
    """Config + parameters + the forward pass, with retained attention."""

    def __init__(
        self,
        config: RGTConfig,
        event_dim: int,
        rng: np.random.Generator | None = None,
        params: dict[str, Tensor] | None = None,
    ):
        if config.input_dim != 2 * event_dim:
            raise ConfigError(
                f"input_dim {config.input_dim} must be twice the event dimension {event_dim}"
            )
        self.config = config
        self.event_dim = event_dim
        self.params = params if params is not None else init_params(config, event_dim, rng or np.random.default_rng())
        self._attention: list[list[np.ndarray]] = []

    @classmethod
    def for_event_dim(cls, event_dim: int, output_dim: int | None = None, rng=None, **config_kwargs) -> "PairGraphModel":
        config = RGTConfig(
            input_dim=2 * event_dim,
            output_dim=output_dim if output_dim is not None else 2 * event_dim,
            **config_kwargs,
        )
        return cls(config, event_dim, rng=rng)

    def _layer_params(self, layer: int) -> RGTLayerParams:
        heads = self.config.heads
        return RGTLayerParams(
            query=[self.params[f"layer{layer}.head{h}.query"] for h in range(heads)],
            key=[self.params[f"layer{layer}.head{h}.key"] for h in range(heads)],
            value=[self.params[f"layer{layer}.head{h}.value"] for h in range(heads)],
            out=self.params[f"layer{layer}.out"],
        )

    def forward(
        self,
        embeddings: EventEmbeddings,
        graph: RelationalGraph,
        train: bool = False,
        rng: np.random.Generator | None = None,
    ) -> Tensor:
        if embeddings.dim != self.event_dim:
            raise DataError(f"embeddings have dimension {embeddings.dim}, model expects {self.event_dim}")
        v = init_node_embeddings(embeddings, graph)
        self._attention = []
        for layer in range(self.config.layers):
            if self.config.layer_kind == GCN_KIND:
                v = gcn_layer_forward(
                    v, graph, self.params[f"layer{layer}.weight"], train, self.config.dropout_rate, rng
                )
                self._attention.append([])
            else:
                v, atts = rgt_layer_forward(
                    v, graph, self._layer_params(layer), train, self.config.dropout_rate, rng
                )
                self._attention.append(atts)
        return classify_pairs(v, embeddings.global_vec, self.params["classifier"])

    def parameters(self) -> dict[str, Tensor]:
        return self.params

    def trainable_scalars(self, include_classifier: bool = True) -> int:
        return sum(
            t.values.size
            for name, t in self.params.items()
            if include_classifier or name != "classifier"
        )

    def attention(self, layer: int, head: int) -> np.ndarray:
        """Attention matrix retained from the most recent forward pass."""
        if not 0 <= layer < len(self._attention):
            raise ConfigError(f"no retained attention for layer {layer}")
        heads = self._attention[layer]
        if not 0 <= head < len(heads):
            raise ConfigError(f"no retained attention for head {head} in layer {layer}")
        return heads[head]

    def save(self, path: Path) -> None:
        payload = {
            "format": "ergo-checkpoint",
            "version": 1,
            "config": self.config.as_dict(),
            "event_dim": self.event_dim,
            "params": {name: t.values.tolist() for name, t in self.params.items()},
        }
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(json.dumps(payload, sort_keys=True), encoding="utf-8")

    @classmethod
    def load(cls, path: Path) -> "PairGraphModel":
        try:
            payload = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise DataError(f"{path}: not a valid checkpoint ({exc})") from exc
        if payload.get("format") != "ergo-checkpoint":
            raise DataError(f"{path}: not an ergo checkpoint")
        if payload.get("version") != 1:
            raise DataError(f"{path}: unsupported checkpoint version {payload.get('version')!r}")
        config = RGTConfig(**payload["config"])
        params = {name: Tensor(np.asarray(values)) for name, values in payload["params"].items()}
        return cls(config, payload["event_dim"], params=params)
