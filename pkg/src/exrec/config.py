"""Run configuration: defaults, key-value config files, overrides.

Config files are plain text, one ``key = value`` per line.  Keys use the
long flag names with dashes or underscores (``k-users = 20``); ``#`` starts
a comment.  Precedence, lowest first: built-in defaults, the file named by
``$EXREC_CONFIG``, the ``--config`` file, explicit command-line flags.
"""
from __future__ import annotations

import os
from dataclasses import asdict, dataclass, fields
from typing import Any, Mapping

from .pipeline import FusionConfig

ENV_VAR = "EXREC_CONFIG"


@dataclass(frozen=True)
class RunConfig:
    # fusion / cascade
    alpha: float = 0.5
    k_posts: int = 50
    k_users: int = 20
    d: float = 0.85
    tol: float = 1e-8
    max_iter: int = 100
    seed: int = 42
    accept_threshold: int = 15
    use_accepted_flag: bool = False
    test_fraction: float = 0.2
    weighted: bool = False
    precision: str = "coverage"
    significance_scope: str = "candidates"
    # indexing
    idf_variant: str = "smooth"
    stemmer: str = "original"
    # evaluation
    relevance_threshold: float = 0.5
    top_experts: int = 5
    threads: int = 1
    # ingest window (ISO timestamps) and output
    date_from: str | None = None
    date_to: str | None = None
    output_format: str = "table"

    def fusion(self) -> FusionConfig:
        return FusionConfig.from_mapping(asdict(self))

    def as_dict(self) -> dict:
        return asdict(self)


_FIELDS = {f.name: f for f in fields(RunConfig)}


def _coerce(name: str, raw: Any):
    default = getattr(RunConfig, name)
    if not isinstance(raw, str):
        return raw
    raw = raw.strip()
    if isinstance(default, bool):
        low = raw.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"config key {name}: expected a boolean, got {raw!r}")
    if isinstance(default, int):
        return int(raw)
    if isinstance(default, float):
        return float(raw)
    if raw.lower() in ("", "none", "null"):
        return None
    return raw


def parse_config_text(text: str, source: str = "<config>") -> dict:
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{source}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _FIELDS:
            raise ValueError(f"{source}:{lineno}: unknown config key {key!r}")
        values[key] = _coerce(key, value)
    return values


def read_config_file(path: str | os.PathLike) -> dict:
    with open(path, encoding="utf-8") as fh:
        return parse_config_text(fh.read(), os.fspath(path))


def resolve(overrides: Mapping[str, Any] | None = None, config_file: str | None = None,
            environ: Mapping[str, str] | None = None) -> RunConfig:
    environ = os.environ if environ is None else environ
    values: dict = {}
    env_file = environ.get(ENV_VAR)
    if env_file:
        values.update(read_config_file(env_file))
    if config_file:
        values.update(read_config_file(config_file))
    for k, v in (overrides or {}).items():
        if k in _FIELDS and v is not None:
            values[k] = _coerce(k, v)
    cfg = RunConfig(**values)
    cfg.fusion()  # validates ranges
    return cfg


def write_config_text(cfg: RunConfig) -> str:
    lines = []
    for k, v in cfg.as_dict().items():
        lines.append(f"{k} = {'none' if v is None else v}")
    return "\n".join(lines) + "\n"
