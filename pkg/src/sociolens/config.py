"""Configuration: defaults, optional YAML file, SOCIOLENS_* env overrides.

Precedence (lowest to highest): built-in defaults, config file, environment.
The CLI and the HTTP service share this schema, so one file drives both.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Mapping, Optional

import yaml

from .engine import EngineConfig
from .layout import LayoutParams

__all__ = ["Config", "load_config", "ConfigError"]

ENV_PREFIX = "SOCIOLENS_"


class ConfigError(ValueError):
    pass


@dataclass(slots=True, frozen=True)
class Config:
    dataset_root: str = "./datasets"
    host: str = "127.0.0.1"
    port: int = 8000
    threshold: float = 0.5
    k_topics: Optional[int] = None
    network_edge_cap: int = 50_000
    lock_timeout: float = 0.5
    layout: LayoutParams = field(default_factory=LayoutParams)

    def engine_config(self) -> EngineConfig:
        return EngineConfig(
            threshold=self.threshold,
            layout=self.layout,
            k_topics=self.k_topics,
            network_edge_cap=self.network_edge_cap,
            lock_timeout=self.lock_timeout,
        )


_SCALARS = {
    "dataset_root": str,
    "host": str,
    "port": int,
    "threshold": float,
    "k_topics": int,
    "network_edge_cap": int,
    "lock_timeout": float,
}
_LAYOUT_FIELDS = {f.name: f.type for f in fields(LayoutParams)}


def _coerce(name: str, value, into: type):
    if value is None:
        return None
    try:
        if into is int and isinstance(value, str):
            return int(value, 10)
        return into(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"config value {name!r}: {exc}") from None


def load_config(
    path: Optional[Path | str] = None, env: Optional[Mapping[str, str]] = None
) -> Config:
    env = os.environ if env is None else env
    cfg = Config()

    if path is not None:
        raw = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
        if raw is None:
            raw = {}
        if not isinstance(raw, dict):
            raise ConfigError("config file must contain a mapping")
        layout_raw = raw.pop("layout", None)
        unknown = set(raw) - set(_SCALARS)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        updates = {
            key: _coerce(key, value, _SCALARS[key]) for key, value in raw.items()
        }
        cfg = replace(cfg, **updates)
        if layout_raw is not None:
            if not isinstance(layout_raw, dict):
                raise ConfigError("config key 'layout' must be a mapping")
            bad = set(layout_raw) - set(_LAYOUT_FIELDS)
            if bad:
                raise ConfigError(f"unknown layout keys: {sorted(bad)}")
            merged = {**_layout_dict(cfg.layout), **layout_raw}
            cfg = replace(cfg, layout=LayoutParams(**merged))

    cfg = _apply_env(cfg, env)
    return cfg


def _layout_dict(params: LayoutParams) -> dict:
    return {f.name: getattr(params, f.name) for f in fields(LayoutParams)}


def _apply_env(cfg: Config, env: Mapping[str, str]) -> Config:
    updates = {}
    for key, into in _SCALARS.items():
        raw = env.get(ENV_PREFIX + key.upper())
        if raw is not None:
            updates[key] = _coerce(key, raw, into)
    if updates:
        cfg = replace(cfg, **updates)

    layout_updates = {}
    for name in _LAYOUT_FIELDS:
        raw = env.get(f"{ENV_PREFIX}LAYOUT_{name.upper()}")
        if raw is not None:
            into = int if name in ("iterations", "exact_below") else float
            layout_updates[name] = _coerce(f"layout.{name}", raw, into)
    if layout_updates:
        cfg = replace(cfg, layout=LayoutParams(**{**_layout_dict(cfg.layout), **layout_updates}))
    return cfg
