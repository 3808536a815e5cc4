"""Run configuration with env < file < flags precedence.

Config files are flat ``key = value`` text using the field names of
RunConfig; environment variables use the same names upper-cased with a
``FUSELINK_`` prefix.  Explicit command-line flags always win.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, fields

from .errors import ConfigurationError

__all__ = ["RunConfig", "load_config_file", "resolve_config"]

ENV_PREFIX = "FUSELINK_"


@dataclass
class RunConfig:
    dim: int = 512
    heads: int = 8
    learning_rate: float = 5e-5
    batch_size: int = 64
    epochs: int = 300
    loss_mode: str = "standard"
    seed: int = 0
    candidate_k: int = 100
    tie_policy: str = "pessimistic"
    truncation_budget: int = 512
    fuse_mention: bool = False

    def validate(self) -> "RunConfig":
        if self.dim < 1 or self.heads < 1:
            raise ConfigurationError(f"dim and heads must be >= 1, got {self.dim}, {self.heads}")
        if self.dim % self.heads != 0:
            raise ConfigurationError(f"dim {self.dim} is not divisible by heads {self.heads}")
        if self.loss_mode not in ("standard", "paper"):
            raise ConfigurationError(f"loss_mode must be standard or paper, got {self.loss_mode!r}")
        if self.tie_policy not in ("pessimistic", "optimistic"):
            raise ConfigurationError(
                f"tie_policy must be pessimistic or optimistic, got {self.tie_policy!r}")
        if self.learning_rate <= 0:
            raise ConfigurationError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.batch_size < 1 or self.epochs < 0:
            raise ConfigurationError(
                f"batch_size must be >= 1 and epochs >= 0, got {self.batch_size}, {self.epochs}")
        if self.candidate_k < 1:
            raise ConfigurationError(f"candidate_k must be >= 1, got {self.candidate_k}")
        if self.truncation_budget < 1:
            raise ConfigurationError(
                f"truncation_budget must be >= 1, got {self.truncation_budget}")
        return self

    def describe(self) -> str:
        return " ".join(f"{f.name}={getattr(self, f.name)}" for f in fields(RunConfig))


_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _parse_value(name: str, raw: str):
    if name not in _FIELD_TYPES:
        raise ConfigurationError(f"unknown config key {name!r}")
    kind = _FIELD_TYPES[name]
    raw = raw.strip()
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        if kind == "bool":
            lowered = raw.lower()
            if lowered in ("1", "true", "yes", "on"):
                return True
            if lowered in ("0", "false", "no", "off"):
                return False
            raise ValueError(f"not a boolean: {raw!r}")
        return raw
    except ValueError as exc:
        raise ConfigurationError(f"config key {name!r}: {exc}") from exc


def load_config_file(path: str) -> dict:
    """Parse ``key = value`` lines; blank lines and #-comments are skipped."""
    values: dict = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            if "=" not in stripped:
                raise ConfigurationError(f"{path}:{lineno}: expected key = value")
            name, raw = stripped.split("=", 1)
            values[name.strip()] = _parse_value(name.strip(), raw)
    return values


def resolve_config(file_path: str | None = None, flag_values: dict | None = None,
                   env: dict | None = None) -> RunConfig:
    """Layer defaults, environment, config file, then explicit flags."""
    env = os.environ if env is None else env
    values: dict = {}
    for name in _FIELD_TYPES:
        env_key = ENV_PREFIX + name.upper()
        if env_key in env:
            values[name] = _parse_value(name, env[env_key])
    if file_path:
        values.update(load_config_file(file_path))
    for name, value in (flag_values or {}).items():
        if value is not None:
            if name not in _FIELD_TYPES:
                raise ConfigurationError(f"unknown config key {name!r}")
            values[name] = value
    return RunConfig(**values).validate()
