"""Backend configuration files.

A configuration names backends and binds formats to them::

    default: main
    backends:
      main: {kind: scripted, path: transcript.json}
      remote: {kind: openai, model: gpt-3.5-turbo-instruct, base_url: "https://api.openai.com"}
    formats:
      sentence: {backend: remote, max_tokens: 50, temperature: 0.7}
      thought: {max_tokens: 15}

Relative ``path`` values are resolved against the configuration file.
JSON and YAML are both accepted.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Mapping

import yaml

from .errors import StaError
from .lm.base import LmBackend, SamplingConfig
from .lm.openai import OpenAICompatibleLm
from .lm.scripted import ScriptedLm
from .runtime.context import BackendTable

SAMPLING_KEYS = ("max_tokens", "temperature", "top_k", "top_p", "stop_sequences")


class ConfigError(StaError):
    pass


def _backend(name: str, spec: Mapping[str, Any], base: Path) -> LmBackend:
    spec = dict(spec)
    kind = spec.pop("kind", None)
    if kind == "scripted":
        if "path" in spec:
            return ScriptedLm.from_file(base / spec["path"])
        return ScriptedLm.from_dict(spec)
    if kind in ("openai", "openai-compatible"):
        if "model" not in spec:
            raise ConfigError(f"backend {name!r} needs a model")
        allowed = {"model", "base_url", "api_key_env", "timeout", "retries", "backoff", "echo_logprobs", "concurrent"}
        unknown = set(spec) - allowed
        if unknown:
            raise ConfigError(f"backend {name!r} has unknown keys {sorted(unknown)}")
        return OpenAICompatibleLm(**spec)
    raise ConfigError(f"backend {name!r} has unknown kind {kind!r} (scripted or openai)")


def backends_from_dict(data: Mapping[str, Any], base: Path | str = ".") -> BackendTable:
    base = Path(base)
    if not isinstance(data, Mapping):
        raise ConfigError("backend configuration must be a mapping")
    backends = {name: _backend(name, spec, base) for name, spec in (data.get("backends") or {}).items()}
    default_name = data.get("default")
    if default_name is None and len(backends) == 1:
        default_name = next(iter(backends))
    if default_name is not None and default_name not in backends:
        raise ConfigError(f"default backend {default_name!r} is not defined")
    bindings: dict[str, LmBackend] = {}
    sampling: dict[str, SamplingConfig] = {}
    for fmt, spec in (data.get("formats") or {}).items():
        spec = dict(spec or {})
        if "backend" in spec:
            ref = spec.pop("backend")
            if ref not in backends:
                raise ConfigError(f"format {fmt!r} uses undefined backend {ref!r}")
            bindings[fmt] = backends[ref]
        unknown = set(spec) - set(SAMPLING_KEYS)
        if unknown:
            raise ConfigError(f"format {fmt!r} has unknown keys {sorted(unknown)}")
        if spec:
            try:
                sampling[fmt] = SamplingConfig(**spec)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"format {fmt!r}: {exc}") from exc
    default = backends[default_name] if default_name is not None else None
    return BackendTable(default, bindings, sampling)


def load_backends(path: str | Path) -> BackendTable:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    try:
        data = json.loads(text) if path.suffix == ".json" else yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return backends_from_dict(data, path.parent)
