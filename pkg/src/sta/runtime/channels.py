"""Channels: the data copied, appended or fetched when a prompt is entered."""

from __future__ import annotations

import asyncio
import inspect
import itertools
from typing import Any, Mapping

from ..compiler.pda import PdaNode
from ..compiler.program import CompiledProgram, CompiledPrompt
from ..errors import (
    CalleeFailure,
    ChannelTypeError,
    CountOverflow,
    MissingInput,
    RuntimeFailure,
    UnknownCallee,
    UnresolvedSource,
)
from ..lang.ast import ChannelDecl, Literal, Ref
from ..lang.unparse import unparse_channel
from .context import ExecutionContext
from .document import Document, Entry, Leaf, conformance_errors


def plain(value: Any) -> Any:
    """JSON-friendly form of a channel value, as stored in traces."""
    if isinstance(value, Leaf):
        return value.text
    if isinstance(value, Document):
        return {name: [plain(e) for e in entries] for name, entries in value.fields.items()}
    if value is None or isinstance(value, (str, bool, int, float)):
        return value
    if isinstance(value, Mapping):
        return {str(k): plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [plain(v) for v in value]
    return str(value)


def _as_list(value: Any) -> list:
    return list(value) if isinstance(value, (list, tuple)) else [value]


def to_entries(node: PdaNode, values: list) -> list[Entry]:
    """Convert channel values into seeded entries for ``node``."""
    out: list[Entry] = []
    for v in values:
        if node.is_record:
            if isinstance(v, Document):
                doc = v.copy("seeded")
            elif isinstance(v, Mapping):
                doc = _doc_from_mapping(node, v)
            else:
                raise ChannelTypeError(f"{node.name} is a record, got {type(v).__name__}")
            errors = conformance_errors(doc, node)
            if errors:
                raise ChannelTypeError(f"value for {node.name} does not fit its questionnaire: {errors[0]}")
            out.append(doc)
        else:
            if isinstance(v, (Document, Mapping, list, tuple)):
                raise ChannelTypeError(f"{node.name} holds text, got {type(v).__name__}")
            text = v.text if isinstance(v, Leaf) else ("" if v is None else str(v))
            # a seeded value is one questionnaire line
            out.append(Leaf(text.replace("\r\n", " ").replace("\n", " "), node.format, "seeded"))
    return out


def _doc_from_mapping(node: PdaNode, data: Mapping) -> Document:
    names = {c.name: c for c in node.children}
    doc = Document()
    for key, value in data.items():
        if key not in names:
            raise ChannelTypeError(f"{node.name} has no state {key!r}")
        doc.fields[key] = to_entries(names[key], _as_list(value))
    return doc


def _input_value(ctx: ExecutionContext, path: str) -> Any:
    head, *rest = path.split(".")
    if head not in ctx.inputs:
        raise MissingInput(head)
    value = ctx.inputs[head]
    for part in rest:
        if not isinstance(value, Mapping) or part not in value:
            raise MissingInput(path)
        value = value[part]
    return value


def _latest_source(ch: ChannelDecl, ctx: ExecutionContext) -> str:
    ran = [p for p in ch.source_prompts or () if p in ctx.last_run]
    if not ran:
        raise UnresolvedSource(f"none of {list(ch.source_prompts or ())} has executed yet (line {ch.line})")
    return max(ran, key=lambda p: ctx.last_run[p])


def resolve_source(ch: ChannelDecl, ctx: ExecutionContext, path: str | None = None) -> list:
    """Values read by a channel, as a list of elements."""
    path = path or ch.source
    if ch.source_prompts is None:
        return _as_list(_input_value(ctx, path))
    src = _latest_source(ch, ctx)
    out: list = []
    for doc in ctx.top(src) or ():
        out += doc.lookup(path)
    return out


def _expression(expr, ch: ChannelDecl, ctx: ExecutionContext) -> Any:
    if isinstance(expr, Literal):
        return expr.value
    assert isinstance(expr, Ref)
    if ch.source_prompts is None:
        return plain(_input_value(ctx, expr.path))
    values = [plain(v) for v in resolve_source(ch, ctx, expr.path)]
    if not values:
        raise UnresolvedSource(f"{expr.path!r} is empty in {_latest_source(ch, ctx)!r}")
    return values[0] if len(values) == 1 else values


def _invoke(callee: Any, name: str, kwargs: dict, ctx: ExecutionContext) -> Any:
    if isinstance(callee, CompiledProgram):
        from .engine import run_program

        try:
            outputs, _ = run_program(
                callee, kwargs, ctx.backends, ctx.registry, max_workers=ctx.max_workers, _depth=ctx.nested_depth + 1
            )
        except RuntimeFailure as exc:
            raise CalleeFailure(name, exc) from exc
        flat: list = []
        for assoc in outputs:
            for value in assoc.values():
                flat += _as_list(value)
        return flat
    try:
        result = callee(**kwargs)
        if inspect.isawaitable(result):
            result = asyncio.run(_await(result))
    except Exception as exc:
        raise CalleeFailure(name, exc) from exc
    return result


async def _await(awaitable):
    return await awaitable


def call_channel(decl: ChannelDecl, ctx: ExecutionContext, bound: Mapping[str, Any] | None = None) -> Any:
    """Invoke the callee of a call channel and return its result in plain form.

    ``bound`` overrides kwargs whose expression names the mapped source.
    """
    if decl.callee not in ctx.registry:
        raise UnknownCallee(decl.callee or "")
    kwargs = {}
    for key, expr in decl.kwargs:
        if bound is not None and isinstance(expr, Ref) and expr.path in bound:
            kwargs[key] = bound[expr.path]
        else:
            kwargs[key] = _expression(expr, decl, ctx)
    return plain(_invoke(ctx.registry[decl.callee], decl.callee, kwargs, ctx))


def _set(doc: Document, node: PdaNode, entries: list[Entry], line: int) -> None:
    if len(entries) > node.max_count:
        raise CountOverflow(f"{node.name} takes at most {node.max_count} entries, got {len(entries)} (line {line})")
    if not entries:
        doc.fields.pop(node.name, None)
    else:
        doc.fields[node.name] = entries


def execute_channels(prompt: CompiledPrompt, ctx: ExecutionContext, visit: int | None = None) -> list[Document]:
    """Seed documents for every questionnaire instance of ``prompt``.

    Copy and append channels run first in declaration order, then calls, so
    copies never observe a call's result. Mapped channels each contribute a
    dimension; instances are the cross product, first mapped channel
    outermost.
    """
    visit = visit if visit is not None else ctx.visit_counts.get(prompt.name, 1)
    base = Document()
    dims: list[tuple[PdaNode, list[list[Entry]]]] = []
    channels = list(enumerate(prompt.decl.channels))
    ordered = [c for c in channels if c[1].kind != "call"] + [c for c in channels if c[1].kind == "call"]

    for index, ch in ordered:
        node = prompt.node(ch.target_state)
        record = {"prompt": prompt.name, "visit": visit, "channel": index, "decl": unparse_channel(ch)}
        if ch.kind == "call":
            if ch.mapped:
                elements = [plain(v) for v in resolve_source(ch, ctx, ch.source_field)]
                results = ctx.oracle.call(
                    prompt.name,
                    visit,
                    index,
                    lambda: [call_channel(ch, ctx, {ch.source_field: el}) for el in elements],
                )
                dims.append((node, [to_entries(node, _as_list(r)) for r in results]))
            else:
                results = ctx.oracle.call(prompt.name, visit, index, lambda: [call_channel(ch, ctx)])
                _set(base, node, to_entries(node, _as_list(results[0])), ch.line)
            ctx.emit("channel-executed", **record, results=results)
            continue

        values = resolve_source(ch, ctx)
        ctx.emit("channel-executed", **record, values=plain(values))
        if ch.mapped:
            dims.append((node, [to_entries(node, [v]) for v in values]))
            continue
        entries = to_entries(node, values)
        if ch.kind == "append":
            previous = base.fields.get(ch.target_state)
            if previous is None:
                top = ctx.top(prompt.name)
                previous = list(top[0].entries(ch.target_state)) if top else []
            entries = [e.copy("seeded") if isinstance(e, Document) else _reseed(e) for e in previous] + entries
        _set(base, node, entries, ch.line)

    if not dims:
        return [base]
    instances = []
    for combo in itertools.product(*(choices for _, choices in dims)):
        doc = base.copy()
        for (node, _), entries in zip(dims, combo):
            _set(doc, node, entries, 0)
        instances.append(doc)
    if not instances:
        raise UnresolvedSource(f"a mapped channel of {prompt.name!r} has no elements")
    return instances


def _reseed(leaf: Leaf) -> Leaf:
    return Leaf(leaf.text, leaf.format, "seeded")
