"""Structured documents produced by a questionnaire, and their text form.

A :class:`Document` maps each state name to its entries: :class:`Leaf`
text for leaf states, nested documents for records. The text form is the
list of questionnaire lines written after ``start(record):``.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from typing import Union

from ..compiler.pda import EXIT_PREFIX, PdaNode, Transition, enumerate_next_states, line_prefix
from ..compiler.program import CompiledPrompt
from ..errors import NonConformantLine


@dataclass
class Leaf:
    text: str
    format: str
    # not part of equality: a parsed document cannot tell seeded lines from generated ones
    provenance: str = field(default="generated", compare=False)

    def to_json(self) -> dict:
        return {"text": self.text, "format": self.format, "provenance": self.provenance}


Entry = Union[Leaf, "Document"]


@dataclass
class Document:
    fields: dict[str, list[Entry]] = field(default_factory=dict)
    branch: str | None = None

    def add(self, name: str, entry: Entry) -> None:
        self.fields.setdefault(name, []).append(entry)

    def entries(self, name: str) -> list[Entry]:
        return self.fields.get(name, [])

    def lookup(self, path: str) -> list[Entry]:
        """Entries at a dotted path, gathered across every record instance on the way."""
        head, _, rest = path.partition(".")
        found = self.entries(head)
        if not rest:
            return list(found)
        out: list[Entry] = []
        for entry in found:
            if isinstance(entry, Document):
                out += entry.lookup(rest)
        return out

    def at(self, path: list[tuple[str, int]]) -> Entry:
        """Entry addressed by ``[(name, index), ...]`` with 1-based indices."""
        node: Entry = self
        for name, index in path:
            assert isinstance(node, Document)
            node = node.fields[name][index - 1]
        return node

    def to_json(self) -> dict:
        out: dict = {
            "fields": {
                name: [e.to_json() for e in entries] for name, entries in self.fields.items()
            }
        }
        if self.branch is not None:
            out["branch"] = self.branch
        return out

    @classmethod
    def from_json(cls, data: dict) -> "Document":
        doc = cls(branch=data.get("branch"))
        for name, entries in data.get("fields", {}).items():
            for e in entries:
                if "fields" in e:
                    doc.add(name, cls.from_json(e))
                else:
                    doc.add(name, Leaf(e["text"], e["format"], e.get("provenance", "generated")))
        return doc

    def copy(self, provenance: str | None = None) -> "Document":
        dup = copy.deepcopy(self)
        dup.branch = None
        if provenance is not None:
            for leaf in dup.leaves():
                leaf.provenance = provenance
        return dup

    def leaves(self):
        for entries in self.fields.values():
            for e in entries:
                if isinstance(e, Document):
                    yield from e.leaves()
                else:
                    yield e

    def data(self, node: PdaNode) -> dict:
        """Plain nested data: stripped text, lists for multi-count states."""
        out = {}
        for child in node.children:
            if child.name not in self.fields:
                continue
            out[child.name] = entries_data(child, self.fields[child.name])
        return out

    def shape(self) -> dict:
        """Entry counts, with nested shapes for records; handy in assertions."""
        out: dict = {}
        for name, entries in self.fields.items():
            if entries and isinstance(entries[0], Document):
                out[name] = [e.shape() for e in entries if isinstance(e, Document)]
            else:
                out[name] = len(entries)
        return out


def entries_data(node: PdaNode, entries: list[Entry]):
    values = [e.data(node) if isinstance(e, Document) else e.text.strip() for e in entries]
    return values if node.max_count > 1 else (values[0] if values else None)


def conformance_errors(doc: Document, node: PdaNode) -> list[str]:
    """Schema violations of ``doc`` against the questionnaire rooted at ``node``."""
    errors = []
    names = {c.name for c in node.children}
    for extra in set(doc.fields) - names:
        errors.append(f"unexpected state {extra!r}")
    for child in node.children:
        entries = doc.entries(child.name)
        if not 1 <= len(entries) <= child.max_count:
            errors.append(f"{child.name}: {len(entries)} entries, expected 1..{child.max_count}")
        for e in entries:
            if child.is_record:
                if not isinstance(e, Document):
                    errors.append(f"{child.name}: expected a nested document")
                else:
                    errors += [f"{child.name}.{msg}" for msg in conformance_errors(e, child)]
            elif not isinstance(e, Leaf):
                errors.append(f"{child.name}: expected text")
            else:
                if e.format != child.format:
                    errors.append(f"{child.name}: format {e.format!r}, expected {child.format!r}")
                if "\n" in e.text:
                    errors.append(f"{child.name}: text spans several lines")
    return errors


def exit_line(branch: str | None) -> str:
    return f"{EXIT_PREFIX} {branch}" if branch is not None else EXIT_PREFIX


def render_lines(node: PdaNode, doc: Document) -> list[str]:
    lines = []
    for child in node.children:
        for i, entry in enumerate(doc.entries(child.name), start=1):
            prefix = line_prefix(child, i)
            if isinstance(entry, Document):
                lines.append(prefix)
                lines += render_lines(child, entry)
            else:
                lines.append(f"{prefix} {entry.text}")
    return lines


def render_document(prompt: CompiledPrompt, doc: Document) -> str:
    """Questionnaire text for ``doc``, exit line included, as written after ``start(record):``."""
    lines = render_lines(prompt.pda, doc)
    lines.append(exit_line(doc.branch))
    return "\n".join(lines) + "\n"


def parse_rendered_document(prompt: CompiledPrompt, body: str) -> Document:
    """Read questionnaire text back into a :class:`Document`.

    Lines are matched against the automaton's candidate prefixes, so any
    text that could not have been produced by the automaton is rejected.
    """
    lines = body.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    root = Document()
    docs = [root]
    frames: list[tuple[PdaNode, int]] = []
    first = prompt.pda.first_child
    transitions = [Transition("advance", first, 1)] if first is not None else [Transition("exit", None, 0)]
    leaf = prompt.decl.leaf

    for lineno, line in enumerate(lines, start=1):
        match = None
        for t in transitions:
            prefix = t.prefix()
            if t.kind == "exit":
                if leaf.kind == "exit" and line == prefix:
                    match = (t, None)
                elif leaf.kind == "next" and line.startswith(prefix + " "):
                    name = line[len(prefix) + 1 :]
                    if name in {b.prompt for b in leaf.branches}:
                        match = (t, name)
            elif t.node is not None and t.node.is_record:
                if line == prefix:
                    match = (t, None)
            elif line.startswith(prefix + " "):
                match = (t, line[len(prefix) + 1 :])
            if match:
                break
        if match is None:
            raise NonConformantLine(lineno, line, [t.prefix() for t in transitions])
        t, value = match
        if t.kind == "exit":
            if lineno != len(lines):
                raise NonConformantLine(lineno + 1, lines[lineno], ["end of questionnaire"])
            root.branch = value
            return root
        for _ in range(t.pops):
            frames.pop()
            docs.pop()
        if t.kind == "push" or not frames:
            frames.append((t.node, t.index))
        else:
            frames[-1] = (t.node, t.index)
        node = t.node
        if node.is_record:
            sub = Document()
            docs[-1].add(node.name, sub)
            docs.append(sub)
        else:
            docs[-1].add(node.name, Leaf(value, node.format))
        transitions = enumerate_next_states(node, t.index, [i for _, i in frames[:-1]])

    raise NonConformantLine(len(lines) + 1, "", [t.prefix() for t in transitions])
