"""Class-balanced focal loss, AdamW with linear warmup, and the train loop.

The batch unit is one document: its full pair graph is run forward, the
loss is summed over every pair in the document, and one clipped AdamW step
follows. Early stopping watches dev-set F1. Column 1 of the probability
matrix is the positive class throughout.
"""

from __future__ import annotations

import copy
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import tensor as T
from .corpus import Document
from .errors import ConfigError, DataError, NumericError
from .model import PairGraphModel, RGTConfig
from .relgraph import SHARED_EVENT, build_graph
from .tensor import Tensor

PROBABILITY_FLOOR = 1e-12


@dataclass(frozen=True)
class FocalConfig:
    gamma: float = 2.0
    alpha: float = 0.75  # weight of the positive class; negatives get 1 - alpha

    def __post_init__(self):
        if self.gamma < 0:
            raise ConfigError(f"gamma must be >= 0, got {self.gamma}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigError(f"alpha must be in [0, 1], got {self.alpha}")


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3  # engine-scale default; encoder-scale 2e-5 stays available
    warmup_fraction: float = 0.08
    max_epochs: int = 100
    patience: int = 10
    clip_norm: float = 1.0
    seed: int = 0
    dev_scope: str = "both"  # early-stopping metric scope: intra | inter | both

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ConfigError(f"learning_rate must be positive, got {self.learning_rate}")
        if not 0.0 <= self.warmup_fraction < 1.0:
            raise ConfigError(f"warmup_fraction must be in [0, 1), got {self.warmup_fraction}")
        if self.dev_scope not in ("intra", "inter", "both"):
            raise ConfigError(f"dev_scope must be intra, inter or both, got {self.dev_scope!r}")


def _gold_column(labels) -> np.ndarray:
    cols = []
    for lab in labels:
        if lab in ("positive", 1, True):
            cols.append(1)
        elif lab in ("negative", 0, False):
            cols.append(0)
        else:
            raise ConfigError(f"label {lab!r} is neither positive nor negative")
    return np.asarray(cols, dtype=np.intp)


def focal_loss(probabilities: Tensor, labels, config: FocalConfig) -> Tensor:
    """Sum over pairs of -alpha_t * (1 - p_t)^gamma * log(p_t).

    ``p_t`` is the predicted probability of the gold class. Probabilities at
    or below 1e-12 are clamped inside the logarithm (with a warning) to keep
    the loss finite.
    """
    if probabilities.cols != 2:
        raise ConfigError(f"probabilities must be N x 2, got {probabilities.shape}")
    if probabilities.rows != len(labels):
        raise ConfigError(f"{probabilities.rows} rows but {len(labels)} labels")
    gold = _gold_column(labels)
    onehot = np.zeros(probabilities.shape, dtype=probabilities.values.dtype)
    onehot[np.arange(len(gold)), gold] = 1.0
    picked = T.matmul(T.multiply(probabilities, Tensor(onehot)), Tensor([[1.0], [1.0]]))
    if (picked.values <= PROBABILITY_FLOOR).any():
        clamped = int((picked.values <= PROBABILITY_FLOOR).sum())
        warnings.warn(
            f"focal loss clamped {clamped} gold-class probabilities at {PROBABILITY_FLOOR}",
            RuntimeWarning,
            stacklevel=2,
        )
    ones = Tensor(np.ones_like(picked.values))
    modulator = T.power(T.add(ones, T.scale(picked, -1.0)), config.gamma)
    log_term = T.log(T.clamp_min(picked, PROBABILITY_FLOOR))
    alpha_col = Tensor(np.where(gold == 1, config.alpha, 1.0 - config.alpha).reshape(-1, 1))
    per_pair = T.multiply(alpha_col, T.multiply(modulator, log_term))
    return T.scale(T.sum_all(per_pair), -1.0)


def lr_at(step: int, total_steps: int, config: TrainConfig) -> float:
    """Linear 0 -> lr over the first ceil(warmup_fraction * total) steps, then linear lr -> 0."""
    if not 0 <= step <= total_steps:
        raise ConfigError(f"step {step} outside [0, {total_steps}]")
    if total_steps == 0:
        return 0.0
    warmup = math.ceil(config.warmup_fraction * total_steps)
    if step < warmup:
        return config.learning_rate * step / warmup
    if total_steps == warmup:
        return config.learning_rate
    return config.learning_rate * (total_steps - step) / (total_steps - warmup)


@dataclass
class AdamWState:
    step: int = 0
    first_moment: dict[str, np.ndarray] = field(default_factory=dict)
    second_moment: dict[str, np.ndarray] = field(default_factory=dict)


def adamw_step(
    params: dict[str, Tensor],
    grads: dict[str, np.ndarray],
    state: AdamWState,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
    weight_decay: float = 0.01,
) -> None:
    """Decoupled-weight-decay Adam update, in place."""
    state.step += 1
    correction1 = 1.0 - beta1**state.step
    correction2 = 1.0 - beta2**state.step
    for name, tensor in params.items():
        grad = grads.get(name)
        if grad is None:
            continue
        if not np.isfinite(grad).all():
            raise NumericError(f"non-finite gradient for parameter {name!r}")
        m = state.first_moment.setdefault(name, np.zeros_like(tensor.values, dtype=np.float64))
        v = state.second_moment.setdefault(name, np.zeros_like(tensor.values, dtype=np.float64))
        m *= beta1
        m += (1.0 - beta1) * grad
        v *= beta2
        v += (1.0 - beta2) * np.square(grad)
        update = (m / correction1) / (np.sqrt(v / correction2) + eps)
        tensor.values = tensor.values - lr * (
            update + weight_decay * np.asarray(tensor.values, dtype=np.float64)
        ).astype(tensor.values.dtype)


@dataclass
class TrainResult:
    model: PairGraphModel
    log: list[dict]
    best_f1: float | None
    best_epoch: int | None


def train(
    train_docs,
    dev_docs,
    provider,
    model_config: RGTConfig,
    focal: FocalConfig,
    config: TrainConfig,
    strategy: str = SHARED_EVENT,
    self_loops: bool = True,
) -> TrainResult:
    """Train a fresh model; returns the best-dev-F1 parameters and the epoch log.

    Without dev documents early stopping is disabled and the final
    parameters are returned.
    """
    from .evaluation import predict_documents, prf1  # local import: evaluation also orchestrates training

    usable = [d for d in train_docs if len(d.events) >= 2]
    if not usable:
        raise DataError("empty train split: no document with at least two events")

    seeds = np.random.SeedSequence(config.seed).spawn(3)
    init_rng = np.random.default_rng(seeds[0])
    shuffle_rng = np.random.default_rng(seeds[1])
    dropout_rng = np.random.default_rng(seeds[2])

    model = PairGraphModel(model_config, provider.dim, rng=init_rng)
    graphs = {d.doc_id: build_graph(d, strategy, self_loops) for d in usable}
    embeddings = {d.doc_id: provider(d) for d in usable}

    state = AdamWState()
    total_steps = config.max_epochs * len(usable)
    global_step = 0
    log: list[dict] = []
    best_f1: float | None = None
    best_epoch: int | None = None
    best_params = None
    non_improving = 0

    for epoch in range(config.max_epochs):
        epoch_loss = 0.0
        lr = 0.0
        for idx in shuffle_rng.permutation(len(usable)):
            doc = usable[int(idx)]
            probs = model.forward(embeddings[doc.doc_id], graphs[doc.doc_id], train=True, rng=dropout_rng)
            loss = focal_loss(probs, [p.label for p in graphs[doc.doc_id].nodes], focal)
            loss_value = loss.item()
            if not math.isfinite(loss_value):
                raise NumericError(
                    f"non-finite loss at epoch {epoch}, document {doc.doc_id!r}: {loss_value}"
                )
            epoch_loss += loss_value
            T.zero_grad(model.params.values())
            T.backward(loss)
            grads = {name: t.grad for name, t in model.params.items()}
            T.clip_global_norm(list(grads.values()), config.clip_norm)
            lr = lr_at(global_step, total_steps, config)
            adamw_step(model.params, grads, state, lr)
            global_step += 1

        record = {
            "epoch": epoch,
            "train_loss": epoch_loss,
            "dev_p": None,
            "dev_r": None,
            "dev_f1": None,
            "lr": lr,
            "best_so_far": best_f1,
        }
        if dev_docs:
            report = prf1(
                predict_documents(model, dev_docs, provider, strategy, self_loops),
                scope=config.dev_scope,
            )
            record["dev_p"], record["dev_r"], record["dev_f1"] = (
                report["P"],
                report["R"],
                report["F1"],
            )
            if best_f1 is None or report["F1"] > best_f1:
                best_f1 = report["F1"]
                best_epoch = epoch
                best_params = {n: Tensor(t.values.copy()) for n, t in model.params.items()}
                non_improving = 0
            else:
                non_improving += 1
            record["best_so_far"] = best_f1
            log.append(record)
            if non_improving > config.patience:
                break
        else:
            log.append(record)

    if best_params is not None:
        model = PairGraphModel(model_config, provider.dim, params=best_params)
    return TrainResult(model=model, log=log, best_f1=best_f1, best_epoch=best_epoch)
