"""Run configuration: key=value file, override merging, config hashing."""

from __future__ import annotations

import hashlib
import os
from dataclasses import dataclass, field, fields

from .errors import ConfigError, MissingInputError
from .store import VARIANTS

DEFAULT_CAP = 100
DEFAULT_MAX_TOKENS = 512
DEFAULT_TOP_K = 5


@dataclass
class RunConfig:
    gold: str = ""
    corpus: list[str] = field(default_factory=list)
    manifest: str = ""
    embeddings: str = ""
    out: str = ""
    seed: int = 0
    cap: int = DEFAULT_CAP
    variants: tuple[str, ...] = VARIANTS
    max_tokens: int = DEFAULT_MAX_TOKENS
    top_k: int = DEFAULT_TOP_K
    workers: int = 1

    def validate(self) -> None:
        if self.cap < 1:
            raise ConfigError(f"cap must be >= 1, got {self.cap}")
        if self.seed < 0:
            raise ConfigError(f"seed must be >= 0, got {self.seed}")
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")
        if self.top_k < 0:
            raise ConfigError(f"top_k must be >= 0, got {self.top_k}")
        for variant in self.variants:
            if variant not in VARIANTS:
                raise ConfigError(f"unknown variant {variant!r}, expected one of {VARIANTS}")
        if not self.variants:
            raise ConfigError("at least one variant is required")

    def hash(self) -> str:
        """Short digest over every field; embedded in all output files."""
        canonical = "\n".join(
            f"{f.name}={getattr(self, f.name)!r}" for f in sorted(fields(self), key=lambda f: f.name)
        )
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:12]

    def meta(self) -> dict:
        return {"config_hash": self.hash(), "seed": self.seed}


_LIST_KEYS = {"corpus", "variants"}
_INT_KEYS = {"seed", "cap", "max_tokens", "top_k", "workers"}
_KNOWN_KEYS = {f.name for f in fields(RunConfig)}


def parse_config_file(path: str | os.PathLike) -> dict:
    """Parse "key = value" lines; '#' starts a comment, lists are comma-separated."""
    if not os.path.exists(path):
        raise MissingInputError(f"config file not found: {path}")
    values: dict = {}
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            stripped = line.split("#", 1)[0].strip()
            if not stripped:
                continue
            if "=" not in stripped:
                raise ConfigError(f"{path}: line {lineno}: expected key = value")
            key, _, raw = stripped.partition("=")
            key = key.strip()
            raw = raw.strip()
            if key not in _KNOWN_KEYS:
                raise ConfigError(f"{path}: line {lineno}: unknown key {key!r}")
            values[key] = _convert(key, raw, f"{path}: line {lineno}")
    return values


def _convert(key: str, raw, context: str):
    if not isinstance(raw, str):
        return raw
    if key in _LIST_KEYS:
        return [item.strip() for item in raw.split(",") if item.strip()]
    if key in _INT_KEYS:
        try:
            return int(raw)
        except ValueError as exc:
            raise ConfigError(f"{context}: {key} must be an integer, got {raw!r}") from exc
    return raw


def build_config(file_values: dict | None = None, overrides: dict | None = None) -> RunConfig:
    """Defaults < config file < explicit overrides; validated."""
    config = RunConfig()
    for source in (file_values or {}, overrides or {}):
        for key, value in source.items():
            if value is None:
                continue
            if key not in _KNOWN_KEYS:
                raise ConfigError(f"unknown config key {key!r}")
            value = _convert(key, value, "override")
            if key == "variants":
                value = tuple(value)
            setattr(config, key, value)
    config.validate()
    return config
