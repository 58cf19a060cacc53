"""Program execution: prompts run one after another along chosen branches."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Any, Mapping

from ..compiler.program import CompiledProgram, CompiledPrompt
from ..errors import RuntimeFailure, StaError
from .channels import execute_channels, plain
from .context import BackendTable, ExecutionContext, ExitSignal, LiveOracle, Scope
from .document import Document, conformance_errors, entries_data
from .questionnaire import fill_questionnaire
from .trace import TraceRecord, snapshot

MAX_NESTING = 16


def decide_next_prompt(prompt: CompiledPrompt, chosen: str | None, ctx: ExecutionContext) -> str | ExitSignal:
    """Successor named by ``chosen``, counting the visit, or the exit signal of an exit leaf."""
    leaf = prompt.decl.leaf
    if leaf.kind == "exit":
        return ExitSignal(leaf.fields)
    if chosen not in {b.prompt for b in prompt.successors}:
        raise RuntimeFailure(f"{chosen!r} is not a successor of {prompt.name!r}")
    ctx.visit_counts[chosen] = ctx.visit_counts.get(chosen, 0) + 1
    return chosen


def _fill_all(prompt: CompiledPrompt, seeds: list[Document], ctx: ExecutionContext, visit: int) -> list[Document]:
    buffers: list[list[dict]] = [[] for _ in seeds]

    def work(i: int) -> Document:
        return fill_questionnaire(prompt, seeds[i], ctx, Scope(prompt.name, visit, i), buffers[i])

    try:
        if len(seeds) > 1 and getattr(ctx.oracle, "concurrent", False):
            with ThreadPoolExecutor(max_workers=ctx.max_workers) as pool:
                return list(pool.map(work, range(len(seeds))))
        return [work(i) for i in range(len(seeds))]
    finally:
        # instance order fixes the total order whatever the completion order was
        for buf in buffers:
            ctx.events.extend(buf)


def _execute(program: CompiledProgram, ctx: ExecutionContext) -> list[dict]:
    name = program.entry
    ctx.visit_counts[name] = ctx.visit_counts.get(name, 0) + 1
    order = 0
    while True:
        prompt = program.prompts[name]
        visit = ctx.visit_counts[name]
        entered = {"event": "prompt-entered", "prompt": name, "visit": visit, "instances": 0}
        ctx.events.append(entered)
        seeds = execute_channels(prompt, ctx, visit)
        entered["instances"] = len(seeds)
        docs = _fill_all(prompt, seeds, ctx, visit)
        for doc in docs:
            errors = conformance_errors(doc, prompt.pda)
            if errors:
                raise RuntimeFailure(f"document of {name!r} does not conform: {errors[0]}")
        ctx.stacks.setdefault(name, []).append(docs)
        order += 1
        ctx.last_run[name] = order

        step = decide_next_prompt(prompt, docs[0].branch, ctx)
        if isinstance(step, ExitSignal):
            ctx.emit("prompt-exited", prompt=name, visit=visit, exit=list(step.fields))
            return [
                {f: entries_data(prompt.node(f), doc.entries(f)) for f in step.fields} for doc in docs
            ]
        ctx.emit("prompt-exited", prompt=name, visit=visit, branch=step)
        name = step


def run_program(
    program: CompiledProgram,
    inputs: Mapping[str, Any],
    backends=None,
    registry: Mapping[str, Any] | None = None,
    *,
    max_workers: int | None = None,
    oracle=None,
    _depth: int = 0,
) -> tuple[list[dict], TraceRecord]:
    """Run ``program`` from its entry prompt until an exit leaf.

    ``backends`` is a :class:`BackendTable`, a single backend used for every
    format, or a mapping from format name to backend (optionally paired with
    a sampling configuration). Returns one output association per
    questionnaire instance of the exiting prompt, and the execution trace.
    Runtime errors carry the partial trace in their ``trace`` attribute.
    """
    if _depth > MAX_NESTING:
        raise RuntimeFailure("program calls are nested too deeply")
    table = None
    if oracle is None:
        table = BackendTable.coerce(backends)
        oracle = LiveOracle(table, program.formats)
    ctx = ExecutionContext(
        inputs=dict(inputs),
        oracle=oracle,
        registry=dict(registry or {}),
        max_workers=max_workers,
        backends=table,
        nested_depth=_depth,
    )
    trace = TraceRecord(
        program_hash=program.program_hash,
        bindings=plain(dict(program.bindings)),
        inputs=plain(dict(inputs)),
        events=ctx.events,
    )
    try:
        outputs = _execute(program, ctx)
    except StaError as exc:
        trace.stacks = snapshot(ctx.stacks)
        exc.trace = trace
        raise
    trace.stacks = snapshot(ctx.stacks)
    return outputs, trace
