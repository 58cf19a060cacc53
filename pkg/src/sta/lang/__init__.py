"""Lexing, macro expansion, parsing and printing of STA source text."""

from .ast import (
    HEADER_SLOTS,
    NATIVE_FORMATS,
    Branch,
    ChannelDecl,
    EntryDecl,
    FormatDecl,
    LeafDecl,
    Literal,
    ProgramAst,
    PromptDecl,
    Ref,
    StateDecl,
)
from .macros import MacroBindings, expand_macros, parse_define
from .parser import parse_program
from .unparse import unparse_channel, unparse_program

__all__ = [
    "HEADER_SLOTS",
    "NATIVE_FORMATS",
    "Branch",
    "ChannelDecl",
    "EntryDecl",
    "FormatDecl",
    "LeafDecl",
    "Literal",
    "MacroBindings",
    "ProgramAst",
    "PromptDecl",
    "Ref",
    "StateDecl",
    "expand_macros",
    "parse_define",
    "parse_program",
    "unparse_channel",
    "unparse_program",
]
