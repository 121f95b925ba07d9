"""Dense 2-D tensors with reverse-mode automatic differentiation.

Every tensor is a strictly two-dimensional real matrix. Operations record
their inputs so that :func:`backward` can propagate gradients from a scalar
root to every tensor it was computed from. The op set is deliberately small:
just enough to express neighborhood attention, a linear pair classifier, and
a focal-style loss, plus the plumbing those need (transpose, gather, clamp).

Two numeric profiles exist: ``f32`` (default, training speed) and ``f64``
(tests and finite-difference gradient checks, which are unreliable in single
precision). The profile fixes the dtype of tensors created after it is set.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .errors import NumericError, ShapeError

PROFILES = {"f32": np.float32, "f64": np.float64}

_active_profile = "f32"


def set_profile(name: str) -> None:
    """Select the numeric profile ('f32' or 'f64') for new tensors."""
    global _active_profile
    if name not in PROFILES:
        raise NumericError(f"unknown numeric profile {name!r}; expected one of {sorted(PROFILES)}")
    _active_profile = name


def active_profile() -> str:
    return _active_profile


def active_dtype() -> np.dtype:
    return np.dtype(PROFILES[_active_profile])


class Tensor:
    """A 2-D matrix participating in a differentiation graph.

    ``grad`` is populated by :func:`backward`. Repeated backward passes
    accumulate into ``grad``; call :func:`zero_grad` between passes when
    accumulation is not wanted.
    """

    __slots__ = ("values", "grad", "_parents", "_grads_fn")

    def __init__(
        self,
        values,
        parents: tuple["Tensor", ...] = (),
        grads_fn: Callable[[np.ndarray], tuple[np.ndarray, ...]] | None = None,
    ):
        arr = np.asarray(values, dtype=active_dtype())
        if arr.ndim == 1:
            arr = arr.reshape(1, -1)
        if arr.ndim != 2:
            raise ShapeError(f"tensors are 2-D; got array of shape {arr.shape}")
        self.values = arr
        self.grad: np.ndarray | None = None
        self._parents = parents
        self._grads_fn = grads_fn

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def cols(self) -> int:
        return self.values.shape[1]

    def item(self) -> float:
        if self.values.size != 1:
            raise ShapeError(f"item() needs a 1x1 tensor, got {self.shape}")
        return float(self.values[0, 0])

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, dtype={self.values.dtype})"

    # Convenience arithmetic; the module-level functions are the full API.
    def __add__(self, other: "Tensor") -> "Tensor":
        return add(self, other)

    def __mul__(self, other: "Tensor") -> "Tensor":
        return multiply(self, other)

    def __matmul__(self, other: "Tensor") -> "Tensor":
        return matmul(self, other)


def _same_shape(op: str, a: Tensor, b: Tensor) -> None:
    if a.shape != b.shape:
        raise ShapeError(f"{op}: shapes {a.shape} and {b.shape} differ")


def add(a: Tensor, b: Tensor) -> Tensor:
    _same_shape("add", a, b)
    return Tensor(a.values + b.values, (a, b), lambda g: (g, g))


def multiply(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise (Hadamard) product."""
    _same_shape("multiply", a, b)
    return Tensor(a.values * b.values, (a, b), lambda g: (g * b.values, g * a.values))


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.cols != b.rows:
        raise ShapeError(f"matmul: shapes {a.shape} and {b.shape} are not conformable")
    return Tensor(a.values @ b.values, (a, b), lambda g: (g @ b.values.T, a.values.T @ g))


def transpose(a: Tensor) -> Tensor:
    return Tensor(a.values.T, (a,), lambda g: (g.T,))


def scale(a: Tensor, factor: float) -> Tensor:
    factor = float(factor)
    return Tensor(a.values * factor, (a,), lambda g: (g * factor,))


def log(a: Tensor) -> Tensor:
    """Natural logarithm, elementwise. The caller guarantees positive entries."""
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.log(a.values)
    return Tensor(out, (a,), lambda g: (g / a.values,))


def power(a: Tensor, exponent: float) -> Tensor:
    """Elementwise ``a ** exponent`` for a constant real exponent."""
    exponent = float(exponent)
    out = a.values**exponent
    if exponent == 0.0:
        return Tensor(out, (a,), lambda g: (np.zeros_like(a.values),))
    return Tensor(out, (a,), lambda g: (g * exponent * a.values ** (exponent - 1.0),))


def relu(a: Tensor) -> Tensor:
    return Tensor(np.maximum(a.values, 0), (a,), lambda g: (g * (a.values > 0),))


def clamp_min(a: Tensor, floor: float) -> Tensor:
    """Elementwise max(a, floor); gradient flows only through unclamped entries."""
    floor = float(floor)
    keep = a.values > floor
    return Tensor(np.maximum(a.values, floor), (a,), lambda g: (g * keep,))


def hstack(tensors: Sequence[Tensor]) -> Tensor:
    """Concatenate along columns; every input keeps its rows."""
    if not tensors:
        raise ShapeError("hstack of an empty sequence")
    rows = tensors[0].rows
    for t in tensors[1:]:
        if t.rows != rows:
            raise ShapeError(f"hstack: row counts differ ({rows} vs {t.rows})")
    widths = [t.cols for t in tensors]
    splits = np.cumsum(widths)[:-1]

    def grads(g: np.ndarray):
        return tuple(np.hsplit(g, splits))

    return Tensor(np.hstack([t.values for t in tensors]), tuple(tensors), grads)


def gather_rows(a: Tensor, indices: Sequence[int]) -> Tensor:
    """Select rows by index; duplicate indices accumulate gradient."""
    idx = np.asarray(indices, dtype=np.intp)
    if idx.ndim != 1:
        raise ShapeError("gather_rows: indices must be a flat sequence")
    if idx.size and (idx.min() < 0 or idx.max() >= a.rows):
        raise ShapeError(f"gather_rows: index out of range for {a.rows} rows")

    def grads(g: np.ndarray):
        out = np.zeros_like(a.values)
        np.add.at(out, idx, g)
        return (out,)

    return Tensor(a.values[idx], (a,), grads)


def sum_all(a: Tensor) -> Tensor:
    """Sum of all entries, as a 1x1 tensor."""
    return Tensor([[a.values.sum()]], (a,), lambda g: (np.full_like(a.values, g[0, 0]),))


def mean_all(a: Tensor) -> Tensor:
    """Mean of all entries, as a 1x1 tensor."""
    n = a.values.size
    return Tensor([[a.values.mean()]], (a,), lambda g: (np.full_like(a.values, g[0, 0] / n),))


def masked_softmax(a: Tensor, mask: np.ndarray) -> Tensor:
    """Row softmax restricted to unmasked entries.

    Masked positions are exactly zero in the output and receive zero
    gradient. A row with no unmasked entry is an error.
    """
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != a.shape:
        raise ShapeError(f"masked_softmax: mask shape {mask.shape} differs from {a.shape}")
    alive = mask.any(axis=1)
    if not alive.all():
        row = int(np.flatnonzero(~alive)[0])
        raise ShapeError(f"masked_softmax: row {row} is fully masked")

    neg = np.where(mask, a.values, -np.inf)
    shifted = a.values - neg.max(axis=1, keepdims=True)
    ex = np.exp(shifted, where=mask, out=np.zeros_like(a.values))
    out = ex / ex.sum(axis=1, keepdims=True)

    def grads(g: np.ndarray):
        inner = (g * out).sum(axis=1, keepdims=True)
        return (out * (g - inner),)

    return Tensor(out, (a,), grads)


def softmax_rows(a: Tensor) -> Tensor:
    """Plain row softmax (all entries unmasked)."""
    return masked_softmax(a, np.ones(a.shape, dtype=bool))


def dropout(a: Tensor, rate: float, train: bool, rng: np.random.Generator | None = None) -> Tensor:
    """Inverted-scaling dropout: kept entries are divided by the keep rate.

    The identity at eval time and at rate 0; otherwise a seeded generator
    must be supplied.
    """
    if not 0.0 <= rate < 1.0:
        raise NumericError(f"dropout rate {rate} outside [0, 1)")
    if not train or rate == 0.0:
        return a
    if rng is None:
        raise NumericError("dropout in train mode needs an explicit random generator")
    keep = 1.0 - rate
    mask = (rng.random(a.shape) < keep).astype(a.values.dtype) / keep
    return Tensor(a.values * mask, (a,), lambda g: (g * mask,))


def _topo_order(root: Tensor) -> list[Tensor]:
    order: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            stack.append((p, False))
    return order


def backward(root: Tensor) -> None:
    """Populate ``grad`` on every tensor reachable from a 1x1 root.

    Each call computes a fresh pass and adds it into any gradient already
    present (accumulation semantics).
    """
    if root.shape != (1, 1):
        raise ShapeError(f"backward root must be 1x1, got {root.shape}")
    order = _topo_order(root)
    local: dict[int, np.ndarray] = {id(t): np.zeros_like(t.values) for t in order}
    local[id(root)][0, 0] = 1.0
    for t in reversed(order):
        if t._grads_fn is None:
            continue
        for parent, pg in zip(t._parents, t._grads_fn(local[id(t)])):
            local[id(parent)] += pg
    for t in order:
        t.grad = local[id(t)] if t.grad is None else t.grad + local[id(t)]


def zero_grad(tensors) -> None:
    for t in tensors:
        t.grad = None


def clip_global_norm(grads: Sequence[np.ndarray], max_norm: float) -> float:
    """Scale gradients in place so their global L2 norm is at most ``max_norm``.

    Returns the scale applied (1.0 when no clipping was needed).
    """
    if max_norm <= 0:
        raise NumericError(f"max_norm must be positive, got {max_norm}")
    total = 0.0
    for g in grads:
        total += float(np.square(g, dtype=np.float64).sum())
    norm = float(np.sqrt(total))
    if norm <= max_norm or norm == 0.0:
        return 1.0
    factor = max_norm / norm
    for g in grads:
        g *= factor
    return factor


def glorot_uniform(rows: int, cols: int, rng: np.random.Generator) -> Tensor:
    """Uniform init in +-sqrt(6 / (fan_in + fan_out)), seeded."""
    bound = np.sqrt(6.0 / (rows + cols))
    return Tensor(rng.uniform(-bound, bound, size=(rows, cols)))
