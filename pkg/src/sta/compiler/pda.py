"""Push-down automaton built from a prompt's questionnaire.

Nodes mirror the state tree. The automaton's stack is the chain of record
instances currently open; a position is the list of ``(node, index)``
frames from the top-level state down to the current one. Moving into a
record's first child pushes a frame, finishing the last child of a record
pops one.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Sequence

from ..lang.ast import PromptDecl, StateDecl


@dataclass(eq=False)
class PdaNode:
    name: str
    max_count: int
    format: str
    depth: int
    state: StateDecl | None = None
    parent: "PdaNode | None" = None
    successor: "PdaNode | None" = None
    children: list["PdaNode"] = field(default_factory=list)

    @property
    def first_child(self) -> "PdaNode | None":
        return self.children[0] if self.children else None

    @property
    def is_root(self) -> bool:
        return self.parent is None

    @property
    def is_record(self) -> bool:
        return bool(self.children)

    @property
    def annotation(self) -> str:
        return self.state.annotation if self.state else ""

    def walk(self) -> Iterator["PdaNode"]:
        yield self
        for child in self.children:
            yield from child.walk()

    def ancestors(self) -> list["PdaNode"]:
        """Enclosing records, innermost first, excluding the root."""
        out = []
        node = self.parent
        while node is not None and not node.is_root:
            out.append(node)
            node = node.parent
        return out

    def path(self) -> tuple[str, ...]:
        names = [self.name]
        names += [a.name for a in self.ancestors()]
        return tuple(reversed(names))

    def __repr__(self) -> str:
        return f"PdaNode({'.'.join(self.path()) if not self.is_root else '<root>'})"


def line_prefix(node: PdaNode, index: int) -> str:
    """Prefix of the line emitted for instance ``index`` of ``node``.

    Single-count states are written without an index bracket.
    """
    idx = f"[{index}]" if node.max_count > 1 else ""
    return f"{'> ' * node.depth}{node.name}{idx}({node.format}):"


EXIT_PREFIX = "exit(next):"


@dataclass(frozen=True)
class Transition:
    """One way to continue after a line.

    ``kind`` is ``repeat`` (another instance of ``node``), ``push`` (enter the
    first child of a record), ``advance`` (next sibling) or ``exit`` (the
    leaf line). ``pops`` counts the record frames closed before the move.
    """

    kind: str
    node: PdaNode | None
    index: int
    pops: int = 0

    def prefix(self) -> str:
        if self.kind == "exit":
            return EXIT_PREFIX
        assert self.node is not None
        return line_prefix(self.node, self.index)


def build_pda(prompt: PromptDecl) -> PdaNode:
    root = PdaNode(prompt.name, 1, "record", 0)

    def attach(parent: PdaNode, states: tuple[StateDecl, ...]) -> None:
        prev = None
        for st in states:
            node = PdaNode(st.name, st.max_count, st.format, parent.depth + 1, st, parent)
            parent.children.append(node)
            if prev is not None:
                prev.successor = node
            prev = node
            attach(node, st.children)

    attach(root, prompt.states)
    return root


def enumerate_next_states(node: PdaNode, index: int, outer_indices: Sequence[int] = ()) -> list[Transition]:
    """Candidate moves after the line for instance ``index`` of ``node``.

    For a record the line just written is its header, so the only move is to
    push into its first child. For a leaf the candidates are, in order:
    another instance of the leaf, then for each enclosing record that is
    being closed (innermost first) another instance of that record, and
    finally the first mandatory move: the next sibling at some level, or the
    exit line once the root is reached.

    ``outer_indices`` gives the current index of each enclosing record,
    outermost first. Records without a given index are treated as having
    reached their maximum count.
    """
    if node.is_record:
        return [Transition("push", node.first_child, 1)]

    out = []
    if index < node.max_count:
        out.append(Transition("repeat", node, index + 1))

    chain = node.ancestors()  # innermost first
    outer = list(outer_indices)
    current = node
    pops = 0
    while True:
        if current.successor is not None:
            out.append(Transition("advance", current.successor, 1, pops))
            return out
        parent = current.parent
        if parent is None or parent.is_root:
            out.append(Transition("exit", None, 0, pops))
            return out
        pops += 1
        level = len(chain) - chain.index(parent) - 1  # position counted from the outermost
        parent_index = outer[level] if level < len(outer) else parent.max_count
        if parent_index < parent.max_count:
            out.append(Transition("repeat", parent, parent_index + 1, pops))
        current = parent


def static_transitions(root: PdaNode) -> list[tuple[PdaNode, PdaNode, str]]:
    """Edges of the automaton drawn as a state machine.

    ``repeat`` self-loops for multi-count states, ``push`` into a record's
    first child, ``advance`` to a sibling and ``pop`` from a last child back
    to its parent (to the root when the questionnaire ends).
    """
    edges = []
    for node in root.walk():
        if not node.is_root and node.max_count > 1:
            edges.append((node, node, "repeat"))
        if node.children:
            edges.append((node, node.children[0], "push"))
        if node.is_root:
            continue
        if node.successor is not None:
            edges.append((node, node.successor, "advance"))
        else:
            edges.append((node, node.parent, "pop"))
    return edges
