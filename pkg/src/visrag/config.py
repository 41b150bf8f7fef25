"""Run configuration.

One flat INI file, one section per module, every key mirrored one-to-one
by a CLI flag; flags override file values. Values are typed by the loader.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, fields
from typing import Optional

from .pipeline import DEFAULT_QUESTION


@dataclass
class RunConfig:
    engine: str = "exact"  # exact | hnsw
    k: int = 3
    hnsw_m: int = 16
    hnsw_ef_construction: int = 200
    hnsw_ef_search: int = 200
    hnsw_seed: int = 0
    hnsw_backend: str = "auto"  # auto | compiled | python
    llm_endpoint: str = "mock:echo"
    llm_timeout: float = 60.0
    llm_retries: int = 2
    llm_in_flight: int = 4
    llm_max_tokens: int = 128
    llm_bearer_token: Optional[str] = None
    mode: str = "rag"  # raw | category | rag
    question: str = DEFAULT_QUESTION
    template: Optional[str] = None  # path; packaged default when unset
    taxonomy: Optional[str] = None  # path; built-in default when unset
    fit_on: str = "union"  # union | store


# (section, key) -> (attribute, coercion)
_SCHEMA = {
    ("store", "engine"): ("engine", str),
    ("store", "k"): ("k", int),
    ("hnsw", "m"): ("hnsw_m", int),
    ("hnsw", "ef_construction"): ("hnsw_ef_construction", int),
    ("hnsw", "ef_search"): ("hnsw_ef_search", int),
    ("hnsw", "seed"): ("hnsw_seed", int),
    ("hnsw", "backend"): ("hnsw_backend", str),
    ("llm", "endpoint"): ("llm_endpoint", str),
    ("llm", "timeout"): ("llm_timeout", float),
    ("llm", "retries"): ("llm_retries", int),
    ("llm", "in_flight"): ("llm_in_flight", int),
    ("llm", "max_tokens"): ("llm_max_tokens", int),
    ("llm", "bearer_token"): ("llm_bearer_token", str),
    ("pipeline", "mode"): ("mode", str),
    ("pipeline", "question"): ("question", str),
    ("pipeline", "template"): ("template", str),
    ("paths", "taxonomy"): ("taxonomy", str),
    ("viz", "fit_on"): ("fit_on", str),
}


class ConfigError(ValueError):
    pass


def load_config(path) -> RunConfig:
    parser = configparser.ConfigParser()
    read = parser.read(path, encoding="utf-8")
    if not read:
        raise ConfigError(f"cannot read config file {path}")
    cfg = RunConfig()
    known = {}
    for (section, key), (attr, coerce) in _SCHEMA.items():
        known.setdefault(section, set()).add(key)
        if parser.has_option(section, key):
            raw = parser.get(section, key)
            try:
                setattr(cfg, attr, coerce(raw))
            except ValueError as exc:
                raise ConfigError(
                    f"{path}: [{section}] {key} = {raw!r}: {exc}"
                ) from exc
    for section in parser.sections():
        if section not in known:
            raise ConfigError(f"{path}: unknown section [{section}]")
        for key in parser.options(section):
            if key not in known[section]:
                raise ConfigError(f"{path}: unknown key {key!r} in [{section}]")
    return cfg


def apply_overrides(cfg: RunConfig, **overrides) -> RunConfig:
    """Set every non-None override onto cfg (flag > file > default)."""
    names = {f.name for f in fields(RunConfig)}
    for name, value in overrides.items():
        if name not in names:
            raise ConfigError(f"unknown config attribute {name!r}")
        if value is not None:
            setattr(cfg, name, value)
    return cfg


def reproducibility_snapshot(cfg: RunConfig) -> dict:
    """Config view embedded in run metadata: everything that shapes the
    numbers, nothing machine-specific (no filesystem paths)."""
    return {
        "engine": cfg.engine,
        "k": cfg.k,
        "hnsw": {
            "m": cfg.hnsw_m,
            "ef_construction": cfg.hnsw_ef_construction,
            "ef_search": cfg.hnsw_ef_search,
            "seed": cfg.hnsw_seed,
            "backend": cfg.hnsw_backend,
        },
        "llm": {
            "endpoint": cfg.llm_endpoint,
            "max_tokens": cfg.llm_max_tokens,
            "in_flight": cfg.llm_in_flight,
        },
        "mode": cfg.mode,
        "question": cfg.question,
        "fit_on": cfg.fit_on,
    }
