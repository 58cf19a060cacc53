"""Validation, automaton construction and header rendering."""

from .formats import FormatRegistry, FormatSpec
from .graph import to_dot
from .header import DEFAULT_SLOTS, render_formats_block, render_header, render_mechanics
from .pda import EXIT_PREFIX, PdaNode, Transition, build_pda, enumerate_next_states, line_prefix, static_transitions
from .program import CompiledProgram, CompiledPrompt, compile_source, library_path, load_program, validate

__all__ = [
    "DEFAULT_SLOTS",
    "EXIT_PREFIX",
    "CompiledProgram",
    "CompiledPrompt",
    "FormatRegistry",
    "FormatSpec",
    "PdaNode",
    "Transition",
    "build_pda",
    "compile_source",
    "enumerate_next_states",
    "library_path",
    "line_prefix",
    "load_program",
    "render_formats_block",
    "render_header",
    "render_mechanics",
    "static_transitions",
    "to_dot",
    "validate",
]
