"""Execution state shared by the engine, the channels and the questionnaire filler."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Mapping, Union

from ..compiler.formats import FormatRegistry
from ..compiler.pda import PdaNode
from ..errors import BackendError
from ..lm.base import DEFAULT_SAMPLING, LmBackend, SamplingConfig, complete_line
from ..lm.choice import choose_scored
from .document import Document

Binding = Union[LmBackend, "tuple[LmBackend, SamplingConfig | None]"]


class BackendTable:
    """Maps format names to a backend and a sampling configuration.

    A format without its own entry uses the nearest ancestor that has one
    (``sentence`` falls back to ``text``), then ``default``. Choices are made
    with the backend bound to ``next``, or else the one serving ``text``.
    Sampling follows the same lineage through ``sampling`` and then the
    built-in defaults.
    """

    def __init__(
        self,
        default: LmBackend | None = None,
        bindings: Mapping[str, Binding] | None = None,
        sampling: Mapping[str, SamplingConfig] | None = None,
    ):
        self.default = default
        self.bindings: dict[str, LmBackend] = {}
        self.sampling: dict[str, SamplingConfig] = dict(sampling or {})
        for fmt, value in (bindings or {}).items():
            if isinstance(value, tuple):
                backend, config = value
                if config is not None:
                    self.sampling[fmt] = config
            else:
                backend = value
            self.bindings[fmt] = backend

    @classmethod
    def coerce(cls, value: "BackendTable | LmBackend | Mapping[str, Binding] | None") -> "BackendTable":
        if isinstance(value, BackendTable):
            return value
        if isinstance(value, LmBackend):
            return cls(default=value)
        return cls(bindings=value or {})

    def backend_for(self, fmt: str, formats: FormatRegistry) -> LmBackend:
        lineage = formats.lineage(fmt) if fmt in formats else [fmt]
        if fmt == "next":
            lineage = lineage + formats.lineage("text")
        for name in lineage:
            if name in self.bindings:
                return self.bindings[name]
        if self.default is None:
            raise BackendError(f"no backend configured for format {fmt!r}")
        return self.default

    def sampling_for(self, fmt: str, formats: FormatRegistry) -> SamplingConfig:
        lineage = formats.lineage(fmt) if fmt in formats else [fmt]
        for table in (self.sampling, DEFAULT_SAMPLING):
            for name in lineage:
                if name in table:
                    return table[name]
        return SamplingConfig()

    def all_backends(self) -> list[LmBackend]:
        out = [self.default] if self.default is not None else []
        for b in self.bindings.values():
            if all(b is not o for o in out):
                out.append(b)
        return out

    @property
    def concurrent(self) -> bool:
        return all(b.capabilities.supports_concurrent_calls for b in self.all_backends())


@dataclass(frozen=True)
class Scope:
    """One questionnaire instance: the prompt, its visit number and instance index."""

    prompt: str
    visit: int
    instance: int = 0

    def tag(self) -> dict:
        return {"prompt": self.prompt, "visit": self.visit, "instance": self.instance}


class LiveOracle:
    """Asks the configured backends for completions and choices."""

    def __init__(self, backends: BackendTable, formats: FormatRegistry):
        self.backends = backends
        self.formats = formats

    def complete(self, scope: Scope, node: PdaNode, path: list, prefix: str, text: str) -> tuple[str, dict]:
        backend = self.backends.backend_for(node.format, self.formats)
        config = self.backends.sampling_for(node.format, self.formats)
        return complete_line(backend, text, config), config.to_dict()

    def choose(self, scope: Scope, candidates: list[str], text: str, kind: str) -> tuple[int, list[float]]:
        backend = self.backends.backend_for("next", self.formats)
        return choose_scored(backend, text, candidates)

    def call(self, prompt: str, visit: int, channel: int, invoke: Callable[[], list]) -> list:
        return invoke()

    @property
    def concurrent(self) -> bool:
        return self.backends.concurrent


@dataclass(frozen=True)
class ExitSignal:
    fields: tuple[str, ...]


@dataclass
class ExecutionContext:
    inputs: dict[str, Any]
    oracle: Any
    registry: dict[str, Any] = field(default_factory=dict)
    stacks: dict[str, list[list[Document]]] = field(default_factory=dict)
    visit_counts: dict[str, int] = field(default_factory=dict)
    # order in which prompts last completed, used to pick among channel sources
    last_run: dict[str, int] = field(default_factory=dict)
    events: list[dict] = field(default_factory=list)
    max_workers: int | None = None
    backends: BackendTable | None = None
    nested_depth: int = 0

    def emit(self, kind: str, **payload) -> None:
        self.events.append({"event": kind, **payload})

    def top(self, prompt: str) -> list[Document] | None:
        stack = self.stacks.get(prompt)
        return stack[-1] if stack else None
