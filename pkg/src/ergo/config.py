"""Flat key-value experiment configuration with includes and CLI overrides.

Files hold ``key = value`` lines, ``#`` comments, and ``include <path>``
lines (resolved relative to the including file, later keys win). Unknown
keys are rejected. Command-line flags override file values. Defaults match
the selected hyperparameters documented in the README.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigError


@dataclass
class RunConfig:
    corpus: str = ""
    embeddings: str = ""  # directory of interchange files; empty = synthetic provider
    embedding_dim: int = 16  # synthetic provider dimension
    leaky: bool = False  # synthetic provider label leak, for sanity experiments
    strategy: str = "shared_event"
    self_loops: bool = True
    layers: int = 2
    heads: int = 4
    output_dim: int = 32
    head_dim: int | None = None
    dropout: float = 0.2
    layer_kind: str = "rgt"
    gamma: float = 2.0
    alpha: float = 0.75
    lr: float = 1e-3
    warmup: float = 0.08
    clip: float = 1.0
    max_epochs: int = 50
    patience: int = 10
    dev_scope: str = "both"
    scheme: str = "esl_5fold_topic"
    window: int = 256
    step: int = 32
    seed: int = 0
    jobs: int = 1
    out: str = "ergo-out"
    grid_layers: str = "1,2,3"
    grid_heads: str = "1,2,4,8"
    grid_dropout: str = "0.1,0.2,0.3"
    grid_gamma: str = "0,1,2,3"


_FIELDS = {f.name: f for f in dataclasses.fields(RunConfig)}


def _coerce(key: str, raw: str):
    field = _FIELDS[key]
    text = raw.strip()
    if field.type in ("int", int):
        try:
            return int(text)
        except ValueError as exc:
            raise ConfigError(f"key {key!r}: {text!r} is not an integer") from exc
    if field.type in ("float", float):
        try:
            return float(text)
        except ValueError as exc:
            raise ConfigError(f"key {key!r}: {text!r} is not a number") from exc
    if field.type in ("bool", bool):
        lowered = text.lower()
        if lowered in ("true", "1", "yes", "on"):
            return True
        if lowered in ("false", "0", "no", "off"):
            return False
        raise ConfigError(f"key {key!r}: {text!r} is not a boolean")
    if field.type == "int | None":
        if text in ("", "none", "None"):
            return None
        try:
            return int(text)
        except ValueError as exc:
            raise ConfigError(f"key {key!r}: {text!r} is not an integer or empty") from exc
    return text


def read_config_file(path: Path, _seen: frozenset | None = None) -> dict:
    """Parse one config file into coerced values, following includes."""
    path = Path(path)
    seen = _seen or frozenset()
    resolved = path.resolve()
    if resolved in seen:
        raise ConfigError(f"config include cycle at {path}")
    if not path.is_file():
        raise ConfigError(f"config file {path} does not exist")
    values: dict = {}
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if stripped.startswith("include "):
            target = stripped[len("include ") :].strip()
            values |= read_config_file(path.parent / target, seen | {resolved})
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {stripped!r}")
        key, raw = (part.strip() for part in stripped.split("=", 1))
        if key not in _FIELDS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        values[key] = _coerce(key, raw)
    return values


def build_run_config(file_path: Path | None, overrides: dict) -> RunConfig:
    """Defaults, then file values, then non-None CLI overrides."""
    values: dict = {}
    if file_path is not None:
        values |= read_config_file(file_path)
    for key, value in overrides.items():
        if value is None:
            continue
        if key not in _FIELDS:
            raise ConfigError(f"unknown config key {key!r}")
        values[key] = _coerce(key, str(value)) if isinstance(value, str) else value
    return RunConfig(**values)


def grid_axis(raw: str, key: str, as_int: bool) -> list:
    out = []
    for piece in raw.split(","):
        piece = piece.strip()
        if not piece:
            continue
        try:
            out.append(int(piece) if as_int else float(piece))
        except ValueError as exc:
            raise ConfigError(f"key {key!r}: bad grid value {piece!r}") from exc
    if not out:
        raise ConfigError(f"key {key!r}: empty grid")
    return out
