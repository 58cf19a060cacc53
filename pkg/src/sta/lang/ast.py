"""Syntax tree for STA programs.

Nodes are frozen dataclasses. Source line numbers are carried for
diagnostics but excluded from equality so that a tree printed and parsed
again compares equal to the original.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal as _Literal
from typing import Union

NATIVE_FORMATS = ("text", "thought", "record", "next")
HEADER_SLOTS = ("prehamble", "postscriptum", "basics", "mechs", "fmts", "header")


@dataclass(frozen=True)
class EntryDecl:
    prompt: str
    purpose: str = ""
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class FormatDecl:
    name: str
    parent: str
    description: str = ""
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Ref:
    """Identifier path (``a`` or ``a.b``) used as a kwargs expression."""

    path: str


@dataclass(frozen=True)
class Literal:
    value: Union[str, int, float]


Expression = Union[Ref, Literal]


@dataclass(frozen=True)
class ChannelDecl:
    kind: _Literal["target", "append", "call"]
    target_state: str
    source_field: str | None = None
    source_prompts: tuple[str, ...] | None = None
    callee: str | None = None
    kwargs: tuple[tuple[str, Expression], ...] = ()
    mapped: bool = False
    line: int = field(default=0, compare=False)

    @property
    def source(self) -> str:
        """Field read from the source: explicit ``from``/``source`` or the target's name."""
        return self.source_field if self.source_field is not None else self.target_state


@dataclass(frozen=True)
class StateDecl:
    name: str
    max_count: int = 1
    format: str = "text"
    annotation: str = ""
    children: tuple["StateDecl", ...] = ()
    depth: int = 1
    line: int = field(default=0, compare=False)

    def walk(self):
        yield self
        for child in self.children:
            yield from child.walk()


@dataclass(frozen=True)
class Branch:
    prompt: str
    trip_limit: int | None = None


@dataclass(frozen=True)
class LeafDecl:
    kind: _Literal["next", "exit"]
    branches: tuple[Branch, ...] = ()
    fields: tuple[str, ...] = ()
    annotation: str = ""
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class PromptDecl:
    name: str
    purpose: str
    channels: tuple[ChannelDecl, ...]
    states: tuple[StateDecl, ...]
    leaf: LeafDecl
    line: int = field(default=0, compare=False)

    def walk_states(self):
        for state in self.states:
            yield from state.walk()


@dataclass(frozen=True)
class ProgramAst:
    entry: EntryDecl
    formats: tuple[FormatDecl, ...] = ()
    prompts: tuple[PromptDecl, ...] = ()
    header_overrides: dict[str, str] = field(default_factory=dict)

    def prompt(self, name: str) -> PromptDecl:
        for p in self.prompts:
            if p.name == name:
                return p
        raise KeyError(name)
