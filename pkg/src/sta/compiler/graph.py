"""Graphviz export of the control-flow graph and each prompt's automaton."""

from __future__ import annotations

from .pda import static_transitions
from .program import CompiledProgram

_EDGE_STYLE = {
    "push": 'color="green"',
    "pop": 'color="red"',
    "advance": 'color="black"',
    "repeat": 'color="black", label="repeat"',
}


def _quote(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def to_dot(program: CompiledProgram) -> str:
    out = ["digraph sta {", "  compound=true;", "  subgraph cluster_cfg {", '    label="control flow";']
    for name in program.prompts:
        shape = "doublecircle" if name == program.entry else "box"
        out.append(f"    {_quote('cfg:' + name)} [label={_quote(name)}, shape={shape}];")
    for name, cp in program.prompts.items():
        for b in cp.successors:
            label = f", label={_quote(f'<= {b.trip_limit}')}" if b.trip_limit else ""
            out.append(f"    {_quote('cfg:' + name)} -> {_quote('cfg:' + b.prompt)}[style=solid{label}];")
    out.append("  }")

    for name, cp in program.prompts.items():
        out.append(f"  subgraph {_quote('cluster_' + name)} {{")
        out.append(f"    label={_quote(name)};")
        ids = {}
        for i, node in enumerate(cp.pda.walk()):
            ids[node] = _quote(f"{name}:{i}")
            label = name if node.is_root else f"{node.name}({node.format})"
            if node.max_count > 1:
                label += f" x{node.max_count}"
            out.append(f"    {ids[node]} [label={_quote(label)}];")
        for node in cp.pda.walk():
            for child in node.children:
                out.append(f"    {ids[node]} -> {ids[child]} [style=dotted, arrowhead=none];")
        for src, dst, kind in static_transitions(cp.pda):
            out.append(f"    {ids[src]} -> {ids[dst]} [style=solid, {_EDGE_STYLE[kind]}];")
        out.append("  }")
    out.append("}")
    return "\n".join(out) + "\n"
