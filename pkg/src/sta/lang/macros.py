from __future__ import annotations

import re
from typing import Mapping, Union

from ..errors import UnboundMacro

MacroBindings = Mapping[str, Union[int, str]]

MACRO_RE = re.compile(r"\{([A-Za-z_][A-Za-z0-9_]*)\}")

# Lines left untouched: comments, and the header template whose
# ``{slot}`` placeholders share the macro syntax.
_EXEMPT_RE = re.compile(r"^\s*(#|header\s*:)")


def expand_macros(source: str, bindings: MacroBindings | None = None) -> str:
    """Substitute every ``{name}`` with its bound value.

    Pure text substitution, done line by line so errors can report where the
    unbound name was used.
    """
    bindings = bindings or {}
    out = []
    for lineno, line in enumerate(source.splitlines(keepends=True), start=1):
        if _EXEMPT_RE.match(line):
            out.append(line)
            continue

        def sub(m: re.Match) -> str:
            name = m.group(1)
            if name not in bindings:
                raise UnboundMacro(name, lineno)
            return str(bindings[name])

        out.append(MACRO_RE.sub(sub, line))
    return "".join(out)


def parse_define(text: str) -> tuple[str, Union[int, str]]:
    """Parse ``NAME=VALUE`` as used on the command line; integers are converted."""
    name, sep, value = text.partition("=")
    name = name.strip()
    if not sep or not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", name):
        raise ValueError(f"macro definition must look like NAME=VALUE, got {text!r}")
    try:
        return name, int(value)
    except ValueError:
        return name, value
