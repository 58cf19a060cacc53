"""Parser for the STA language.

The language is line oriented: every non-blank, non-comment line is one of

* ``entry(name): purpose``
* ``formats:`` followed by ``- name[parent]: description`` items
* ``prompt(name): purpose``
* ``- target(...) ...`` channel lines
* ``> > name[count](format): annotation`` state lines
* ``__next(a[2], b): annotation`` or ``__exit(field): annotation`` leaves
* ``slot: value`` header overrides

Each line is scanned with a small cursor so diagnostics carry a column.
"""

from __future__ import annotations

import ast as _pyast
import re
from dataclasses import dataclass, field

from ..errors import StaIndentationError, StaSyntaxError
from .ast import (
    HEADER_SLOTS,
    Branch,
    ChannelDecl,
    EntryDecl,
    Expression,
    FormatDecl,
    LeafDecl,
    Literal,
    ProgramAst,
    PromptDecl,
    Ref,
    StateDecl,
)

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_INT = re.compile(r"-?[0-9]+")
_NUMBER = re.compile(r"-?[0-9]+(\.[0-9]+)?([eE][-+]?[0-9]+)?")
_STRING = re.compile(r"\"(?:[^\"\\]|\\.)*\"|'(?:[^'\\]|\\.)*'")
_OVERRIDE = re.compile(r"([A-Za-z_][A-Za-z0-9_]*)\s*:")
_UNESCAPES = {"\\": "\\", '"': '"', "n": "\n", "t": "\t"}


class _Cursor:
    def __init__(self, text: str, lineno: int):
        self.text = text
        self.lineno = lineno
        self.pos = 0

    def error(self, message: str, expected: str = "", pos: int | None = None) -> StaSyntaxError:
        column = (self.pos if pos is None else pos) + 1
        return StaSyntaxError(message, self.lineno, column, self.text, expected)

    def skip_ws(self) -> None:
        while self.pos < len(self.text) and self.text[self.pos] in " \t":
            self.pos += 1

    def at_end(self) -> bool:
        self.skip_ws()
        return self.pos >= len(self.text)

    def peek(self, literal: str) -> bool:
        return self.text.startswith(literal, self.pos)

    def accept(self, literal: str) -> bool:
        self.skip_ws()
        if self.text.startswith(literal, self.pos):
            self.pos += len(literal)
            return True
        return False

    def expect(self, literal: str) -> None:
        if not self.accept(literal):
            raise self.error("unexpected input", repr(literal))

    def _match(self, regex: re.Pattern, what: str) -> str:
        self.skip_ws()
        m = regex.match(self.text, self.pos)
        if not m:
            raise self.error("unexpected input", what)
        self.pos = m.end()
        return m.group(0)

    def ident(self) -> str:
        return self._match(_IDENT, "identifier")

    def path(self) -> str:
        parts = [self.ident()]
        while self.peek("."):
            self.pos += 1
            parts.append(self.ident())
        return ".".join(parts)

    def positive_int(self) -> int:
        start = self.pos
        value = int(self._match(_INT, "integer"))
        if value < 1:
            raise self.error("count must be at least 1", pos=start)
        return value

    def expression(self) -> Expression:
        self.skip_ws()
        if self.pos < len(self.text) and self.text[self.pos] in "\"'":
            return Literal(_pyast.literal_eval(self._match(_STRING, "string literal")))
        if _NUMBER.match(self.text, self.pos):
            raw = self._match(_NUMBER, "number")
            return Literal(float(raw) if any(c in raw for c in ".eE") else int(raw))
        return Ref(self.path())

    def rest(self) -> str:
        value = self.text[self.pos :].strip()
        self.pos = len(self.text)
        return value

    def sentence_after_colon(self) -> str:
        """``:`` then the remainder of the line as a stripped sentence."""
        self.expect(":")
        return self.rest()


def unescape(value: str) -> str:
    return re.sub(r"\\(.)", lambda m: _UNESCAPES.get(m.group(1), m.group(0)), value)


@dataclass
class _FlatState:
    depth: int
    name: str
    max_count: int
    format: str | None
    annotation: str
    line: int
    children: list = field(default_factory=list)


@dataclass
class _PromptBuilder:
    name: str
    purpose: str
    line: int
    channels: list = field(default_factory=list)
    states: list = field(default_factory=list)
    leaf: LeafDecl | None = None


def parse_program(source: str) -> ProgramAst:
    """Parse macro-expanded STA source into a :class:`ProgramAst`."""
    entry: EntryDecl | None = None
    formats: list[FormatDecl] = []
    prompts: list[PromptDecl] = []
    overrides: dict[str, str] = {}
    in_formats = False
    current: _PromptBuilder | None = None

    def close_prompt(cursor: _Cursor | None) -> None:
        nonlocal current
        if current is None:
            return
        if current.leaf is None:
            if cursor is None:
                raise StaSyntaxError(
                    f"prompt {current.name!r} ends without a leaf", current.line, 1, expected="'__next(' or '__exit('"
                )
            raise cursor.error(f"prompt {current.name!r} ends without a leaf", "'__next(' or '__exit('")
        prompts.append(
            PromptDecl(
                current.name,
                current.purpose,
                tuple(current.channels),
                _build_states(current.states),
                current.leaf,
                line=current.line,
            )
        )
        current = None

    lines = source.splitlines()
    for lineno, raw in enumerate(lines, start=1):
        text = raw.rstrip("\r\n")
        stripped = text.strip()
        if not stripped or stripped.startswith("#"):
            continue
        cur = _Cursor(text, lineno)
        if text[0] in " \t":
            raise cur.error("unexpected leading whitespace", "a statement at column 1")

        if text.startswith("entry("):
            if entry is not None:
                raise cur.error("a program has exactly one entry")
            if current is not None or formats or prompts:
                raise cur.error("entry must precede formats and prompts")
            cur.expect("entry(")
            name = cur.ident()
            cur.expect(")")
            entry = EntryDecl(name, cur.sentence_after_colon(), line=lineno)
        elif text.startswith("prompt("):
            close_prompt(cur)
            in_formats = False
            if entry is None:
                raise cur.error("prompt declared before the entry", "'entry('")
            cur.expect("prompt(")
            name = cur.ident()
            cur.expect(")")
            current = _PromptBuilder(name, cur.sentence_after_colon(), lineno)
        elif re.match(r"formats\s*:\s*$", text):
            if current is not None or prompts:
                raise cur.error("formats must be declared before prompts")
            if entry is None:
                raise cur.error("formats declared before the entry", "'entry('")
            in_formats = True
        elif text.startswith("- "):
            cur.pos = 2
            if in_formats:
                formats.append(_parse_format(cur))
            elif current is not None:
                if current.states or current.leaf is not None:
                    raise cur.error("channels must come before the questionnaire states")
                current.channels.append(_parse_channel(cur))
            else:
                raise cur.error("itemized line outside of formats or prompt")
        elif text.startswith(">"):
            if current is None:
                raise cur.error("state declared outside of a prompt", "'prompt('")
            if current.leaf is not None:
                raise cur.error("state declared after the prompt's leaf")
            state = _parse_state(cur)
            prev_depth = current.states[-1].depth if current.states else 0
            if state.depth > prev_depth + 1:
                raise StaIndentationError(
                    f"indentation jumps from depth {prev_depth} to {state.depth}",
                    lineno,
                    1,
                    text,
                    f"at most {prev_depth + 1} '> ' markers",
                )
            current.states.append(state)
        elif text.startswith("__"):
            if current is None:
                raise cur.error("leaf outside of a prompt", "'prompt('")
            if current.leaf is not None:
                raise cur.error("a prompt has exactly one leaf")
            if not current.states:
                raise cur.error("a prompt needs at least one state before its leaf", "'> '")
            current.leaf = _parse_leaf(cur)
        else:
            m = _OVERRIDE.match(text)
            if not m:
                raise cur.error("unrecognized statement")
            if current is not None and current.leaf is None:
                raise cur.error("header override inside a prompt")
            close_prompt(cur)
            in_formats = False
            slot = m.group(1)
            if slot not in HEADER_SLOTS:
                raise cur.error(f"unknown header slot {slot!r}", " or ".join(HEADER_SLOTS))
            if slot in overrides:
                raise cur.error(f"header slot {slot!r} set twice")
            cur.pos = m.end()
            overrides[slot] = unescape(cur.rest())

    close_prompt(None)
    if entry is None:
        raise StaSyntaxError("program has no entry declaration", len(lines) + 1, 1, expected="'entry('")
    return ProgramAst(entry, tuple(formats), tuple(prompts), overrides)


def _parse_format(cur: _Cursor) -> FormatDecl:
    name = cur.ident()
    if cur.accept("["):
        close = "]"
    elif cur.accept("("):
        close = ")"
    else:
        raise cur.error("format declaration needs a parent format", "'[parent]' or '(parent)'")
    parent = cur.ident()
    cur.expect(close)
    return FormatDecl(name, parent, cur.sentence_after_colon(), line=cur.lineno)


def _parse_channel(cur: _Cursor) -> ChannelDecl:
    kind_pos = cur.pos
    kind = cur.ident()
    if kind not in ("target", "append", "call"):
        raise cur.error(f"unknown channel kind {kind!r}", "'target', 'append' or 'call'", pos=kind_pos)
    cur.expect("(")
    if kind == "call":
        callee: str | None = cur.ident()
        target: str | None = None
    else:
        callee = None
        target = cur.path()
    cur.expect(")")

    source_field = None
    source_prompts = None
    kwargs: list[tuple[str, Expression]] = []
    mapped = False
    seen: set[str] = set()
    while not cur.at_end():
        if mapped:
            raise cur.error("'mapped' must end the channel line", "end of line")
        word_pos = cur.pos
        word = cur.ident()
        if word == "mapped":
            mapped = True
            continue
        key = "from" if word == "source" else word
        if key != "kwargs":
            if key in seen:
                raise cur.error(f"clause {word!r} repeated", pos=word_pos)
            seen.add(key)
        cur.expect("(")
        if key == "prompt":
            names = [cur.ident()]
            while cur.accept(","):
                names.append(cur.ident())
            source_prompts = tuple(names)
        elif key == "from":
            source_field = cur.path()
        elif key == "kwargs" and kind == "call":
            name = cur.ident()
            cur.expect(",")
            kwargs.append((name, cur.expression()))
        elif key == "target" and kind == "call":
            target = cur.path()
        else:
            raise cur.error(f"unexpected clause {word!r}", "'prompt(', 'from(', 'source(' or 'mapped'", pos=word_pos)
        cur.expect(")")

    if target is None:
        raise cur.error("call channel needs a target(...) clause", "'target('")
    if mapped and kind == "append":
        raise cur.error("only target and call channels can be mapped")
    return ChannelDecl(
        kind,
        target,
        source_field=source_field,
        source_prompts=source_prompts,
        callee=callee,
        kwargs=tuple(kwargs),
        mapped=mapped,
        line=cur.lineno,
    )


def _parse_state(cur: _Cursor) -> _FlatState:
    depth = 0
    while cur.peek("> "):
        depth += 1
        cur.pos += 2
    if depth == 0:
        raise cur.error("malformed indentation", "'> '")
    if cur.peek(" ") or cur.peek(">"):
        raise cur.error("malformed indentation", "'> ' markers followed by a state name")
    name = cur.ident()
    max_count = 1
    fmt = None
    if cur.peek("["):
        cur.pos += 1
        max_count = cur.positive_int()
        cur.expect("]")
    if cur.peek("("):
        cur.pos += 1
        fmt = cur.ident()
        cur.expect(")")
    annotation = cur.sentence_after_colon()
    return _FlatState(depth, name, max_count, fmt, annotation, cur.lineno)


def _parse_leaf(cur: _Cursor) -> LeafDecl:
    if cur.accept("__next("):
        branches = [_parse_branch(cur)]
        while cur.accept(","):
            branches.append(_parse_branch(cur))
        cur.expect(")")
        annotation = cur.sentence_after_colon() if not cur.at_end() else ""
        return LeafDecl("next", branches=tuple(branches), annotation=annotation, line=cur.lineno)
    if cur.accept("__exit("):
        fields = [cur.ident()]
        while cur.accept(","):
            fields.append(cur.ident())
        cur.expect(")")
        annotation = cur.sentence_after_colon() if not cur.at_end() else ""
        return LeafDecl("exit", fields=tuple(fields), annotation=annotation, line=cur.lineno)
    raise cur.error("malformed leaf", "'__next(' or '__exit('")


def _parse_branch(cur: _Cursor) -> Branch:
    name = cur.ident()
    limit = None
    if cur.peek("["):
        cur.pos += 1
        limit = cur.positive_int()
        cur.expect("]")
    return Branch(name, limit)


def _build_states(flat: list[_FlatState]) -> tuple[StateDecl, ...]:
    roots: list[_FlatState] = []
    stack: list[_FlatState] = []
    for st in flat:
        del stack[st.depth - 1 :]
        (stack[-1].children if stack else roots).append(st)
        stack.append(st)

    def freeze(st: _FlatState) -> StateDecl:
        children = tuple(freeze(c) for c in st.children)
        fmt = st.format
        if fmt is None:
            fmt = "record" if children else "text"
        elif children and fmt != "record":
            raise StaSyntaxError(
                f"state {st.name!r} has nested states so its format must be 'record', not {fmt!r}",
                st.line,
                1,
                expected="'(record)' or no format marker",
            )
        return StateDecl(st.name, st.max_count, fmt, st.annotation, children, st.depth, line=st.line)

    return tuple(freeze(r) for r in roots)
