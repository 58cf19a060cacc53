"""Assembly of the static header placed before each prompt's questionnaire."""

from __future__ import annotations

import string
from typing import TYPE_CHECKING, Mapping

from ..errors import UnknownTemplateSlot
from .pda import PdaNode

if TYPE_CHECKING:
    from .program import CompiledProgram, CompiledPrompt

DEFAULT_SLOTS = {
    "prehamble": "You are a helpful AI assistant.",
    "basics": "You are using an interactive questionnaire.",
    "mechs": "Follow this structure after the start prompt:",
    "fmts": "Each prompt expects one of the following text formats:",
    "postscriptum": 'Terminate each prompt with a newline. Use as many statement with "thought" format as needed.',
    "header": (
        "{prehamble}\n{automaton}\n{prompt}\n{basics}\n{mechs}\n```\n{mechanics}\n```\n"
        "{fmts}\n{formats}\n{postscriptum}\n\nstart(record):\n"
    ),
}

TEMPLATE_FIELDS = ("prehamble", "automaton", "prompt", "basics", "mechs", "mechanics", "fmts", "formats", "postscriptum")


def mechanics_line(node: PdaNode) -> str:
    count = f"[{node.max_count}]" if node.max_count > 1 else ""
    line = f"{'> ' * node.depth}{node.name}{count}({node.format}):"
    return f"{line} {node.annotation}" if node.annotation else line


def render_mechanics(prompt: "CompiledPrompt") -> str:
    return "\n".join(mechanics_line(n) for n in prompt.pda.walk() if not n.is_root)


def render_formats_block(prompt: "CompiledPrompt", program: "CompiledProgram") -> str:
    lines = []
    for name in prompt.used_formats:
        if name == "next":
            desc = prompt.decl.leaf.annotation
        else:
            desc = program.formats[name].description
        lines.append(f"- {name}: {desc}" if desc else f"- {name}:")
    return "\n".join(lines)


def template_fields(template: str) -> list[str]:
    return [name for _, name, _, _ in string.Formatter().parse(template) if name is not None]


def check_template(template: str, line: int | None = None) -> None:
    for name in template_fields(template):
        if name not in TEMPLATE_FIELDS:
            raise UnknownTemplateSlot(name, line)


def render_header(
    prompt: "CompiledPrompt", program: "CompiledProgram", overrides: Mapping[str, str] | None = None
) -> str:
    """Exact header text of ``prompt`` up to and including ``start(record):\\n``.

    Slots resolve as: explicit ``overrides`` argument, then the program's
    header statements, then the defaults.
    """
    slots = dict(DEFAULT_SLOTS)
    slots.update(program.ast.header_overrides)
    slots.update(overrides or {})
    template = slots.pop("header")
    check_template(template)
    values = {
        **slots,
        "automaton": program.ast.entry.purpose,
        "prompt": prompt.decl.purpose,
        "mechanics": render_mechanics(prompt),
        "formats": render_formats_block(prompt, program),
    }
    return template.format_map(values)
