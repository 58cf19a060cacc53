"""Drive one questionnaire instance through its automaton."""

from __future__ import annotations

from ..compiler.pda import EXIT_PREFIX, PdaNode, Transition, enumerate_next_states, line_prefix
from ..compiler.program import CompiledPrompt
from ..errors import CountOverflow, ScheduleGap, TripLimitDeadlock
from .context import ExecutionContext, Scope
from .document import Document, Leaf, render_lines


def live_branches(prompt: CompiledPrompt, ctx: ExecutionContext) -> list[str]:
    """Successors whose trip limit has not been reached yet."""
    return [
        b.prompt
        for b in prompt.successors
        if b.trip_limit is None or ctx.visit_counts.get(b.prompt, 0) < b.trip_limit
    ]


def fill_questionnaire(
    prompt: CompiledPrompt,
    seed: Document,
    ctx: ExecutionContext,
    scope: Scope | None = None,
    events: list[dict] | None = None,
) -> Document:
    """Complete ``seed`` into a full document, line by line.

    Seeded top-level states are written as given and closed; every other
    state instance is generated with its format's backend. When several
    moves are possible the model picks among their line prefixes, and a
    next-kind leaf ends with the model picking a live branch.
    """
    scope = scope or Scope(prompt.name, ctx.visit_counts.get(prompt.name, 1))
    events = ctx.events if events is None else events
    leaf = prompt.decl.leaf
    live = live_branches(prompt, ctx) if leaf.kind == "next" else []
    if leaf.kind == "next" and not live:
        raise TripLimitDeadlock(prompt.name)

    text = prompt.header_text
    root = Document()
    docs = [root]
    frames: list[tuple[PdaNode, int]] = []
    generated = False
    first = prompt.pda.first_child
    pending = Transition("advance", first, 1) if first is not None else Transition("exit", None, 0)

    while pending.kind != "exit":
        for _ in range(pending.pops):
            frames.pop()
            docs.pop()
        if pending.kind == "push" or not frames:
            frames.append((pending.node, pending.index))
        else:
            frames[-1] = (pending.node, pending.index)
        node, index = frames[-1]
        seeded = seed.entries(node.name) if len(frames) == 1 else []
        closed = False

        if seeded:
            if generated:
                raise ScheduleGap(f"{node.name} is seeded but follows generated lines in {prompt.name!r}")
            if len(seeded) > node.max_count:
                raise CountOverflow(f"{node.name} takes at most {node.max_count} entries, got {len(seeded)}")
            holder = Document()
            holder.fields[node.name] = seeded
            for line in render_lines(_single(node), holder):
                text += line + "\n"
            root.fields[node.name] = list(seeded)
            index = len(seeded)
            frames[-1] = (node, index)
            closed = True
        elif node.is_record:
            text += line_prefix(node, index) + "\n"
            sub = Document()
            docs[-1].add(node.name, sub)
            docs.append(sub)
        else:
            prefix = line_prefix(node, index)
            path = [[n.name, i] for n, i in frames]
            completion, config = ctx.oracle.complete(scope, node, path, prefix, text + prefix + " ")
            completion = completion.replace("\n", " ")
            generated = True
            docs[-1].add(node.name, Leaf(completion, node.format))
            text += f"{prefix} {completion}\n"
            events.append(
                {
                    "event": "line-generated",
                    **scope.tag(),
                    "path": path,
                    "prefix": prefix,
                    "text": completion,
                    "sampling": config,
                }
            )

        outer = [i for _, i in frames[:-1]]
        if closed:
            # seeded states are top-level and complete as given
            nxt = node.successor
            transitions = [Transition("advance", nxt, 1)] if nxt is not None else [Transition("exit", None, 0)]
        else:
            transitions = enumerate_next_states(node, index, outer)

        if len(transitions) == 1:
            pending = transitions[0]
        else:
            candidates = [t.prefix() for t in transitions]
            chosen, scores = ctx.oracle.choose(scope, candidates, text, "state")
            events.append(
                {
                    "event": "choice-made",
                    **scope.tag(),
                    "kind": "state",
                    "candidates": candidates,
                    "scores": scores,
                    "chosen": chosen,
                }
            )
            pending = transitions[chosen]

    if leaf.kind == "exit":
        return root
    if len(live) == 1:
        root.branch = live[0]
        return root
    chosen, scores = ctx.oracle.choose(scope, live, text + EXIT_PREFIX + " ", "branch")
    events.append(
        {
            "event": "choice-made",
            **scope.tag(),
            "kind": "branch",
            "candidates": live,
            "scores": scores,
            "chosen": chosen,
        }
    )
    root.branch = live[chosen]
    return root


def _single(node: PdaNode) -> PdaNode:
    """A root holding only ``node``, for rendering its seeded entries."""
    return PdaNode("", 1, "record", 0, children=[node])
