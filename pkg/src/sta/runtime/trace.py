"""Execution traces and their replay.

A trace holds the program identity, the inputs, every event of the run and
the final stacks. Replay runs the engine again with recorded completions,
choices and call results in place of backends and callees, checking each
recorded value against the stacks as it goes.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping

from ..compiler.pda import PdaNode
from ..errors import ProgramMismatch, ReplayDivergence, SchemaVersionMismatch, StaError, TraceError
from .document import Document, Leaf

SCHEMA_VERSION = 1


def snapshot(stacks: Mapping[str, list[list[Document]]]) -> dict:
    return {name: [[doc.to_json() for doc in docs] for docs in stack] for name, stack in stacks.items()}


@dataclass
class TraceRecord:
    program_hash: str
    bindings: dict
    inputs: dict
    events: list[dict] = field(default_factory=list)
    stacks: dict = field(default_factory=dict)
    schema_version: int = SCHEMA_VERSION

    def to_dict(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "program_hash": self.program_hash,
            "bindings": self.bindings,
            "inputs": self.inputs,
            "events": self.events,
            "stacks": self.stacks,
        }

    def documents(self) -> dict[str, list[list[Document]]]:
        return {
            name: [[Document.from_json(d) for d in docs] for docs in stack] for name, stack in self.stacks.items()
        }


def serialize_trace(trace: TraceRecord) -> str:
    return json.dumps(trace.to_dict(), sort_keys=True, indent=1, ensure_ascii=False) + "\n"


def load_trace(text: str) -> TraceRecord:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise TraceError(f"trace is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise TraceError("trace must be a JSON object")
    version = data.get("schema_version")
    if version != SCHEMA_VERSION:
        raise SchemaVersionMismatch(f"trace schema version {version!r}, this engine reads {SCHEMA_VERSION}")
    try:
        return TraceRecord(
            program_hash=data["program_hash"],
            bindings=data["bindings"],
            inputs=data["inputs"],
            events=data["events"],
            stacks=data["stacks"],
        )
    except KeyError as exc:
        raise TraceError(f"trace lacks field {exc.args[0]!r}") from exc


class ReplayOracle:
    """Serves recorded completions, choices and call results."""

    concurrent = False

    def __init__(self, trace: TraceRecord):
        self.total = len(trace.events)
        self.queues: dict[tuple, deque] = {}
        self.calls: dict[tuple, tuple[int, dict]] = {}
        for i, ev in enumerate(trace.events):
            kind = ev.get("event")
            if kind in ("line-generated", "choice-made"):
                key = (ev["prompt"], ev["visit"], ev["instance"])
                self.queues.setdefault(key, deque()).append((i, ev))
            elif kind == "channel-executed" and "results" in ev:
                self.calls[(ev["prompt"], ev["visit"], ev["channel"])] = (i, ev)
        self.recorded = trace.documents()

    def _next(self, scope, kind: str) -> tuple[int, dict]:
        queue = self.queues.get((scope.prompt, scope.visit, scope.instance))
        if not queue:
            raise ReplayDivergence(self.total, f"no recorded {kind} left for {scope.tag()}")
        i, ev = queue.popleft()
        if ev["event"] != kind:
            raise ReplayDivergence(i, f"engine asked for {kind}, trace has {ev['event']}")
        return i, ev

    def complete(self, scope, node: PdaNode, path: list, prefix: str, text: str) -> tuple[str, dict]:
        i, ev = self._next(scope, "line-generated")
        if ev["prefix"] != prefix or ev["path"] != path:
            raise ReplayDivergence(i, f"engine is at {prefix!r}, trace recorded {ev['prefix']!r}")
        try:
            entry = self.recorded[scope.prompt][scope.visit - 1][scope.instance].at(ev["path"])
        except (KeyError, IndexError, TypeError):
            raise ReplayDivergence(i, "recorded stacks have no entry for this line") from None
        if not isinstance(entry, Leaf) or entry.text != ev["text"]:
            raise ReplayDivergence(i, "completion text differs from the recorded document")
        return ev["text"], ev["sampling"]

    def choose(self, scope, candidates: list[str], text: str, kind: str) -> tuple[int, list[float]]:
        i, ev = self._next(scope, "choice-made")
        if ev["candidates"] != list(candidates) or ev["kind"] != kind:
            raise ReplayDivergence(i, f"candidates {list(candidates)} differ from recorded {ev['candidates']}")
        chosen = ev["chosen"]
        if not isinstance(chosen, int) or not 0 <= chosen < len(candidates):
            raise ReplayDivergence(i, f"recorded choice {chosen!r} is out of range")
        return chosen, ev["scores"]

    def call(self, prompt: str, visit: int, channel: int, invoke: Callable[[], list]) -> list:
        found = self.calls.pop((prompt, visit, channel), None)
        if found is None:
            raise ReplayDivergence(self.total, f"no recorded call results for channel {channel} of {prompt!r}")
        return found[1]["results"]

    def leftovers(self) -> int | None:
        pending = [q[0][0] for q in self.queues.values() if q] + [i for i, _ in self.calls.values()]
        return min(pending) if pending else None


def replay_trace(program, text: str, registry: Mapping[str, Any] | None = None) -> dict[str, list[list[Document]]]:
    """Re-execute ``program`` from a serialized trace and return the stacks.

    Raises :class:`ReplayDivergence` at the first event that disagrees with
    the recording, and :class:`ProgramMismatch` when the trace belongs to a
    different program.
    """
    return replay_run(program, text, registry)[1].documents()


def replay_run(program, text: str, registry: Mapping[str, Any] | None = None) -> tuple[list[dict], TraceRecord]:
    """Like :func:`replay_trace` but returns the outputs and the replayed trace."""
    from .engine import run_program

    trace = load_trace(text)
    if trace.program_hash != program.program_hash:
        raise ProgramMismatch("trace was recorded for a different program")
    oracle = ReplayOracle(trace)
    try:
        outputs, again = run_program(program, trace.inputs, registry=registry, oracle=oracle)
    except ReplayDivergence:
        raise
    except StaError as exc:
        at = len(exc.trace.events) if getattr(exc, "trace", None) is not None else oracle.total
        raise ReplayDivergence(at, f"replay failed: {exc}") from exc
    left = oracle.leftovers()
    if left is not None:
        raise ReplayDivergence(left, "recorded event was never consumed")
    for i, (a, b) in enumerate(zip(again.events, trace.events)):
        if a != b:
            raise ReplayDivergence(i, "replayed event differs from the recording")
    if len(again.events) != len(trace.events):
        raise ReplayDivergence(min(len(again.events), len(trace.events)), "event count differs")
    if again.stacks != trace.stacks:
        raise ReplayDivergence(len(trace.events), "replayed stacks differ from the recorded stacks")
    return outputs, again
