"""Semantic analysis: resolve names and compile every prompt."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import DuplicateName, UnknownPrompt, UnknownState, ValidationError
from ..lang import MacroBindings, ProgramAst, PromptDecl, expand_macros, parse_program, unparse_program
from ..lang.ast import Branch, StateDecl
from .formats import FormatRegistry
from .header import check_template, render_header
from .pda import PdaNode, build_pda


@dataclass(eq=False)
class CompiledPrompt:
    decl: PromptDecl
    pda: PdaNode
    successors: tuple[Branch, ...]
    used_formats: tuple[str, ...]
    header_text: str = ""

    @property
    def name(self) -> str:
        return self.decl.name

    def node(self, path: str) -> PdaNode:
        """Resolve a dotted state path such as ``problems.identify``."""
        node = self.pda
        for part in path.split("."):
            for child in node.children:
                if child.name == part:
                    node = child
                    break
            else:
                raise KeyError(path)
        return node

    def has_state(self, path: str) -> bool:
        try:
            self.node(path)
        except KeyError:
            return False
        return True


@dataclass(eq=False)
class CompiledProgram:
    entry: str
    prompts: dict[str, CompiledPrompt]
    formats: FormatRegistry
    ast: ProgramAst
    bindings: dict = field(default_factory=dict)

    @property
    def program_hash(self) -> str:
        return hashlib.sha256(unparse_program(self.ast).encode("utf-8")).hexdigest()

    def successor_graph(self) -> dict[str, list[str]]:
        return {name: [b.prompt for b in cp.successors] for name, cp in self.prompts.items()}


def _used_formats(prompt: PromptDecl) -> tuple[str, ...]:
    used = ["next"] if prompt.leaf.kind == "next" else []
    for st in prompt.walk_states():
        if st.format not in used:
            used.append(st.format)
    return tuple(used)


def _check_unique(states: tuple[StateDecl, ...]) -> None:
    seen = set()
    for st in states:
        if st.name in seen:
            raise DuplicateName(st.name, "state", st.line)
        seen.add(st.name)
        _check_unique(st.children)


def validate(ast: ProgramAst, bindings: MacroBindings | None = None) -> CompiledProgram:
    """Resolve every name in ``ast`` and compile its prompts."""
    formats = FormatRegistry(ast.formats)
    if "header" in ast.header_overrides:
        check_template(ast.header_overrides["header"])

    decls: dict[str, PromptDecl] = {}
    for p in ast.prompts:
        if p.name in decls:
            raise DuplicateName(p.name, "prompt", p.line)
        decls[p.name] = p
    if ast.entry.prompt not in decls:
        raise UnknownPrompt(ast.entry.prompt, ast.entry.line)

    compiled: dict[str, CompiledPrompt] = {}
    for p in ast.prompts:
        _check_unique(p.states)
        for st in p.walk_states():
            formats.check_state_format(st.format, bool(st.children), st.line)
        for b in p.leaf.branches:
            if b.prompt not in decls:
                raise UnknownPrompt(b.prompt, p.leaf.line)
        pda = build_pda(p)
        compiled[p.name] = CompiledPrompt(p, pda, p.leaf.branches, _used_formats(p))

    for p in ast.prompts:
        cp = compiled[p.name]
        top = {c.name for c in cp.pda.children}
        for field_name in p.leaf.fields:
            if field_name not in top:
                raise UnknownState(field_name, p.name, p.leaf.line)
        for ch in p.channels:
            if ch.target_state not in top:
                # nested targets would need partially seeded records
                raise UnknownState(ch.target_state, p.name, ch.line)
            if ch.kind == "call":
                if ch.mapped and ch.source_field is None:
                    raise ValidationError("a mapped call needs from(...) naming the mapped source", ch.line)
            for src in ch.source_prompts or ():
                if src not in compiled:
                    raise UnknownPrompt(src, ch.line)
                if (ch.kind != "call" or ch.source_field is not None) and not compiled[src].has_state(ch.source):
                    raise UnknownState(ch.source, src, ch.line)

    program = CompiledProgram(ast.entry.prompt, compiled, formats, ast, dict(bindings or {}))
    for cp in compiled.values():
        cp.header_text = render_header(cp, program)
    return program


def compile_source(source: str, bindings: MacroBindings | None = None) -> CompiledProgram:
    """Expand macros, parse and validate."""
    return validate(parse_program(expand_macros(source, bindings)), bindings)


def load_program(path: str | Path, **bindings) -> CompiledProgram:
    return compile_source(Path(path).read_text(encoding="utf-8"), bindings)


def library_path(name: str) -> Path:
    """Path of a program shipped with the package, e.g. ``iterative_answer``."""
    return Path(__file__).resolve().parent.parent / "library" / f"{name}.sta"

