from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sta.errors import StaIndentationError, StaSyntaxError, UnboundMacro
from sta.lang import (
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
    expand_macros,
    parse_define,
    parse_program,
    unparse_program,
)

from conftest import USAGE_DEFINES, example_source


def parse_example():
    return parse_program(expand_macros(example_source(with_override=False), USAGE_DEFINES))


# -- macros -------------------------------------------------------------------


def test_macro_substitution():
    assert expand_macros("draft[{N}](sentence)", {"N": 2}) == "draft[2](sentence)"


def test_macro_identity():
    assert expand_macros("no macros here", {}) == "no macros here"


def test_unbound_macro_reports_name_and_line():
    with pytest.raises(UnboundMacro) as err:
        expand_macros("ok\nedit[{L}]", {})
    assert err.value.name == "L"
    assert err.value.line == 2


def test_comments_and_header_template_are_not_expanded():
    src = "# uses {X}\nheader: {prehamble}\n{X}"
    assert expand_macros(src, {"X": 1}) == "# uses {X}\nheader: {prehamble}\n1"


def test_string_macro_and_double_braces():
    assert expand_macros("{A}-{A}", {"A": "ab"}) == "ab-ab"


def test_expansion_then_parse_equals_presubstituted_parse():
    raw = example_source(with_override=False)
    manual = raw
    for k, v in USAGE_DEFINES.items():
        manual = manual.replace("{" + k + "}", str(v))
    assert parse_program(expand_macros(raw, USAGE_DEFINES)) == parse_program(manual)


@pytest.mark.parametrize(
    "text, expected",
    [("N=2", ("N", 2)), ("name=hello", ("name", "hello")), ("X=", ("X", "")), ("K=-3", ("K", -3))],
)
def test_parse_define(text, expected):
    assert parse_define(text) == expected


@pytest.mark.parametrize("text", ["N", "=2", "2N=1", "a b=1"])
def test_parse_define_rejects(text):
    with pytest.raises(ValueError):
        parse_define(text)


# -- parsing --------------------------------------------------------------------


def test_entry_line():
    ast = parse_example()
    assert ast.entry == EntryDecl("initial", "Given a user question, you craft an answer")


def test_channel_with_source_and_prompts():
    edit = parse_example().prompt("edit")
    assert edit.channels[1] == ChannelDecl(
        "target", "draft", source_field="answer", source_prompts=("initial", "edit"), mapped=False
    )


def test_nested_state_line():
    edit = parse_example().prompt("edit")
    problems = edit.states[2]
    assert problems.format == "record" and problems.max_count == 2
    consider = problems.children[1]
    assert (consider.name, consider.max_count, consider.format, consider.depth) == ("consider", 3, "thought", 2)
    assert consider.annotation == "solutions for that issue"


def test_full_example_program():
    ast = parse_example()
    assert [p.name for p in ast.prompts] == ["initial", "edit", "submit"]
    assert ast.formats == (FormatDecl("sentence", "text", "one natural language sentence per line"),)
    edit = ast.prompt("edit")
    assert edit.leaf == LeafDecl(
        "next", branches=(Branch("edit", 2), Branch("submit")), annotation='"edit" the issues or "submit" your answer'
    )
    submit = ast.prompt("submit")
    assert submit.leaf.kind == "exit" and submit.leaf.fields == ("answer",)
    assert submit.states[0].annotation == ""
    # trailing blank in the source annotation is not part of the sentence
    assert edit.states[-1].annotation == "are there other issues left to edit?"


def test_both_format_declaration_spellings():
    a = parse_program("entry(p): x\nformats:\n- s[text]: d\nprompt(p): y\n> a: z\n__exit(a):\n")
    b = parse_program("entry(p): x\nformats:\n- s(text): d\nprompt(p): y\n> a: z\n__exit(a):\n")
    assert a == b


def test_from_and_source_are_synonyms():
    base = "entry(p): x\nprompt(p): y\n- target(a) {kw}(b)\n> a: z\n__exit(a):\n"
    assert parse_program(base.format(kw="from")) == parse_program(base.format(kw="source"))


def test_mapped_and_call_channels():
    src = (
        "entry(p): x\nprompt(p): y\n"
        "- target(a) prompt(q) from(items) mapped\n"
        '- call(search) kwargs(query, a) kwargs(limit, 3) kwargs(tag, "x y") target(b) from(a) mapped\n'
        "> a: z\n> b:\n__exit(b):\n"
    )
    p = parse_program(src).prompts[0]
    assert p.channels[0].mapped and p.channels[0].source_prompts == ("q",)
    call = p.channels[1]
    assert call.kind == "call" and call.callee == "search" and call.target_state == "b"
    assert call.kwargs == (("query", Ref("a")), ("limit", Literal(3)), ("tag", Literal("x y")))
    assert call.mapped and call.source_field == "a"


def test_comments_blank_lines_and_overrides():
    src = '# comment\n\nprehamble: Hi\\n"there"\nentry(p): x\n\n# another\nprompt(p): y\n> a: z\n__exit(a):\n'
    ast = parse_program(src)
    assert ast.header_overrides == {"prehamble": 'Hi\n"there"'}


def test_default_state_formats():
    p = parse_program("entry(p): x\nprompt(p): y\n> r: z\n> > a: w\n> b: v\n__exit(b):\n").prompts[0]
    assert p.states[0].format == "record" and p.states[0].children[0].format == "text"


def test_annotation_keeps_colons():
    p = parse_program("entry(p): x\nprompt(p): y\n> a(text): note: more\n__exit(a):\n").prompts[0]
    assert p.states[0].annotation == "note: more"


BAD = [
    # (source, line, column, error class)
    ("entry(p) x\n", 1, 10, StaSyntaxError),
    ("entry(p): x\nentry(q): y\n", 2, 1, StaSyntaxError),
    ("entry(p): x\nprompt(p): y\n> a(text) z\n__exit(a):\n", 3, 11, StaSyntaxError),
    ("entry(p): x\nprompt(p): y\n> a[0](text): z\n__exit(a):\n", 3, 5, StaSyntaxError),
    ("entry(p): x\nprompt(p): y\n> a: z\n> > > b: w\n__exit(a):\n", 4, 1, StaIndentationError),
    ("entry(p): x\nprompt(p): y\n- copy(a)\n> a: z\n__exit(a):\n", 3, 3, StaSyntaxError),
    ("entry(p): x\nprompt(p): y\n- append(a) mapped\n> a: z\n__exit(a):\n", 3, 19, StaSyntaxError),
    ("entry(p): x\nprompt(p): y\n- call(f) kwargs(x, a)\n> a: z\n__exit(a):\n", 3, 23, StaSyntaxError),
    # a prompt without a leaf is reported at its declaration
    ("entry(p): x\nprompt(p): y\n> a: z\n", 2, 1, StaSyntaxError),
    ("entry(p): x\nprompt(p): y\n> a: z\n__next(q[x]): w\n", 4, 10, StaSyntaxError),
    ("entry(p): x\nbogus: y\n", 2, 1, StaSyntaxError),
    ("entry(p): x\nprompt(p): y\n  > a: z\n__exit(a):\n", 3, 1, StaSyntaxError),
    ("entry(p): x\nprompt(p): y\n> a(text): z\n> > b: w\n__exit(a):\n", 3, 1, StaSyntaxError),
    ("entry(p): x\nprompt(p): y\n> a: z\n- target(a)\n__exit(a):\n", 4, 3, StaSyntaxError),
    ("prompt(p): y\n> a: z\n__exit(a):\n", 1, 1, StaSyntaxError),
    ("", 1, 1, StaSyntaxError),
]


@pytest.mark.parametrize("source, line, column, kind", BAD)
def test_malformed_lines_have_positions(source, line, column, kind):
    with pytest.raises(kind) as err:
        parse_program(source)
    assert (err.value.line, err.value.column) == (line, column)


def test_syntax_error_shows_caret():
    with pytest.raises(StaSyntaxError) as err:
        parse_program("entry(p) x\n")
    assert "    entry(p) x\n" + " " * 4 + " " * 9 + "^" in str(err.value)


# -- printing -------------------------------------------------------------------


def test_example_round_trip_fixpoint():
    ast = parse_example()
    text = unparse_program(ast)
    assert parse_program(text) == ast
    assert unparse_program(parse_program(text)) == text


def test_single_prompt_unparse():
    ast = ProgramAst(
        EntryDecl("p", "x"), (), (PromptDecl("p", "y", (), (StateDecl("a"),), LeafDecl("exit", fields=("a",))),)
    )
    text = unparse_program(ast)
    assert sum(line.startswith("prompt(") for line in text.splitlines()) == 1
    assert parse_program(text) == ast


_RESERVED = {"entry", "prompt", "formats", "mapped", "source", "from", "kwargs", "target", "call", "append"}
idents = st.from_regex(r"[a-z][a-z0-9_]{0,5}", fullmatch=True).filter(lambda s: s not in _RESERVED)
paths = st.lists(idents, min_size=1, max_size=2).map(".".join)
# printable ASCII, no surrounding blanks, may contain ':' '#' quotes and brackets
sentences = st.text(st.characters(min_codepoint=32, max_codepoint=126), max_size=30).map(str.strip)
literals = st.one_of(
    st.integers(-1000, 1000),
    st.floats(allow_nan=False, allow_infinity=False, width=64),
    st.text(st.characters(min_codepoint=32, max_codepoint=126), max_size=10),
).map(Literal)


@st.composite
def channels(draw):
    kind = draw(st.sampled_from(["target", "append", "call"]))
    source_prompts = draw(st.none() | st.lists(idents, min_size=1, max_size=3).map(tuple))
    source_field = draw(st.none() | paths)
    if kind == "call":
        kwargs = tuple(draw(st.lists(st.tuples(idents, st.one_of(paths.map(Ref), literals)), max_size=3)))
        return ChannelDecl(
            "call", draw(paths), source_field, source_prompts, draw(idents), kwargs, draw(st.booleans())
        )
    mapped = draw(st.booleans()) if kind == "target" else False
    return ChannelDecl(kind, draw(paths), source_field, source_prompts, mapped=mapped)


def states(depth: int):
    leaf = st.builds(
        StateDecl,
        name=idents,
        max_count=st.integers(1, 5),
        format=idents,
        annotation=sentences,
        depth=st.just(depth),
    )
    if depth >= 3:
        return leaf
    record = st.builds(
        StateDecl,
        name=idents,
        max_count=st.integers(1, 5),
        format=st.just("record"),
        annotation=sentences,
        children=st.lists(states(depth + 1), min_size=1, max_size=3).map(tuple),
        depth=st.just(depth),
    )
    return st.one_of(leaf, record)


leaves = st.one_of(
    st.builds(
        LeafDecl,
        kind=st.just("next"),
        branches=st.lists(st.builds(Branch, idents, st.none() | st.integers(1, 9)), min_size=1, max_size=3).map(tuple),
        annotation=sentences,
    ),
    st.builds(
        LeafDecl,
        kind=st.just("exit"),
        fields=st.lists(idents, min_size=1, max_size=3).map(tuple),
        annotation=sentences,
    ),
)

prompts = st.builds(
    PromptDecl,
    name=idents,
    purpose=sentences,
    channels=st.lists(channels(), max_size=3).map(tuple),
    states=st.lists(states(1), min_size=1, max_size=3).map(tuple),
    leaf=leaves,
)

override_values = st.text(st.characters(min_codepoint=32, max_codepoint=126) | st.sampled_from("\n\t"), max_size=20)


@st.composite
def programs(draw):
    overrides = draw(
        st.dictionaries(
            st.sampled_from(["prehamble", "postscriptum", "basics", "mechs", "fmts", "header"]),
            override_values.filter(lambda v: v == v.strip(" ")),
        )
    )
    formats = draw(st.lists(st.builds(FormatDecl, idents, idents, sentences), max_size=3).map(tuple))
    return ProgramAst(
        draw(st.builds(EntryDecl, idents, sentences)),
        formats,
        tuple(draw(st.lists(prompts, max_size=3))),
        overrides,
    )


@settings(max_examples=150, deadline=None)
@given(programs())
def test_random_programs_round_trip(ast):
    text = unparse_program(ast)
    assert parse_program(text) == ast
