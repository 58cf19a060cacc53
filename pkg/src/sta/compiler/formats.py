from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

from ..errors import DuplicateName, UnknownFormat, UnsupportedFormatKind
from ..lang.ast import FormatDecl


@dataclass(frozen=True)
class FormatSpec:
    name: str
    kind: str  # "text", "enum", "regex", or "record" for nested questionnaires
    parent: str | None
    description: str = ""
    native: bool = False
    abstract: bool = False


NATIVES = (
    FormatSpec("text", "text", None, "ASCII text in any form", native=True),
    FormatSpec("enum", "enum", None, "", native=True, abstract=True),
    FormatSpec("regex", "regex", None, "", native=True, abstract=True),
    FormatSpec("thought", "text", "text", "your thoughts (a few words per lines)", native=True),
    FormatSpec("record", "record", None, "start of a nested prompt", native=True),
    FormatSpec("next", "enum", "enum", "", native=True),
)


class FormatRegistry:
    """Format tree: natives plus the program's declarations, in declaration order."""

    def __init__(self, decls: tuple[FormatDecl, ...] = ()):
        self._specs: dict[str, FormatSpec] = {f.name: f for f in NATIVES}
        for decl in decls:
            self.declare(decl)

    def declare(self, decl: FormatDecl) -> FormatSpec:
        if decl.name in self._specs:
            what = "native format" if self._specs[decl.name].native else "format"
            raise DuplicateName(decl.name, what, decl.line)
        if decl.parent not in self._specs:
            raise UnknownFormat(decl.parent, decl.line)
        parent = self._specs[decl.parent]
        if parent.kind in ("enum", "regex"):
            raise UnsupportedFormatKind(decl.name, parent.kind, decl.line)
        if parent.kind == "record":
            raise UnknownFormat(decl.parent, decl.line)
        spec = FormatSpec(decl.name, parent.kind, decl.parent, decl.description)
        self._specs[decl.name] = spec
        return spec

    def __getitem__(self, name: str) -> FormatSpec:
        return self._specs[name]

    def __contains__(self, name: object) -> bool:
        return name in self._specs

    def __iter__(self) -> Iterator[FormatSpec]:
        return iter(self._specs.values())

    def lineage(self, name: str) -> list[str]:
        """``name`` followed by its ancestors, nearest first."""
        out = []
        spec: FormatSpec | None = self._specs[name]
        while spec is not None:
            out.append(spec.name)
            spec = self._specs[spec.parent] if spec.parent else None
        return out

    def check_state_format(self, name: str, has_children: bool, line: int | None = None) -> FormatSpec:
        if name not in self._specs:
            raise UnknownFormat(name, line)
        spec = self._specs[name]
        if spec.kind in ("enum", "regex"):
            raise UnsupportedFormatKind(name, spec.kind, line)
        if spec.kind == "record" and not has_children:
            raise UnknownFormat(f"{name} (a record needs nested states)", line)
        return spec
