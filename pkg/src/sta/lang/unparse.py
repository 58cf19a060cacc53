from __future__ import annotations

import json

from .ast import (
    HEADER_SLOTS,
    ChannelDecl,
    Expression,
    LeafDecl,
    Literal,
    ProgramAst,
    PromptDecl,
    StateDecl,
)


def _escape(value: str) -> str:
    return value.replace("\\", "\\\\").replace("\n", "\\n").replace("\t", "\\t")


def _sentence(text: str) -> str:
    return f": {text}" if text else ":"


def unparse_expression(expr: Expression) -> str:
    if isinstance(expr, Literal):
        return json.dumps(expr.value) if isinstance(expr.value, str) else repr(expr.value)
    return expr.path


def unparse_channel(ch: ChannelDecl) -> str:
    if ch.kind == "call":
        parts = [f"call({ch.callee})"]
        parts += [f"kwargs({k}, {unparse_expression(v)})" for k, v in ch.kwargs]
        parts.append(f"target({ch.target_state})")
    else:
        parts = [f"{ch.kind}({ch.target_state})"]
    if ch.source_prompts is not None:
        parts.append(f"prompt({','.join(ch.source_prompts)})")
    if ch.source_field is not None:
        parts.append(f"from({ch.source_field})")
    if ch.mapped:
        parts.append("mapped")
    return "- " + " ".join(parts)


def unparse_state(st: StateDecl) -> list[str]:
    count = f"[{st.max_count}]" if st.max_count > 1 else ""
    lines = [f"{'> ' * st.depth}{st.name}{count}({st.format}){_sentence(st.annotation)}"]
    for child in st.children:
        lines += unparse_state(child)
    return lines


def unparse_leaf(leaf: LeafDecl) -> str:
    if leaf.kind == "next":
        items = [b.prompt if b.trip_limit is None else f"{b.prompt}[{b.trip_limit}]" for b in leaf.branches]
        return f"__next({','.join(items)}){_sentence(leaf.annotation)}"
    return f"__exit({','.join(leaf.fields)}){_sentence(leaf.annotation)}"


def unparse_prompt(p: PromptDecl) -> list[str]:
    lines = [f"prompt({p.name}){_sentence(p.purpose)}"]
    lines += [unparse_channel(c) for c in p.channels]
    for st in p.states:
        lines += unparse_state(st)
    lines.append(unparse_leaf(p.leaf))
    return lines


def unparse_program(ast: ProgramAst) -> str:
    """Canonical STA text for ``ast``; parsing it yields an equal tree."""
    lines = []
    for slot in HEADER_SLOTS:
        if slot in ast.header_overrides:
            lines.append(f"{slot}: {_escape(ast.header_overrides[slot])}")
    if lines:
        lines.append("")
    lines.append(f"entry({ast.entry.prompt}){_sentence(ast.entry.purpose)}")
    if ast.formats:
        lines += ["", "formats:"]
        lines += [f"- {f.name}[{f.parent}]{_sentence(f.description)}" for f in ast.formats]
    for p in ast.prompts:
        lines.append("")
        lines += unparse_prompt(p)
    return "\n".join(lines) + "\n"
