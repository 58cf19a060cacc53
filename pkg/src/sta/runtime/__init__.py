"""Program execution, documents and traces."""

from .channels import call_channel, execute_channels
from .context import BackendTable, ExecutionContext, ExitSignal, LiveOracle, Scope
from .document import Document, Leaf, conformance_errors, parse_rendered_document, render_document
from .engine import decide_next_prompt, run_program
from .questionnaire import fill_questionnaire, live_branches
from .trace import SCHEMA_VERSION, ReplayOracle, TraceRecord, load_trace, replay_run, replay_trace, serialize_trace

__all__ = [
    "SCHEMA_VERSION",
    "BackendTable",
    "Document",
    "ExecutionContext",
    "ExitSignal",
    "Leaf",
    "LiveOracle",
    "ReplayOracle",
    "Scope",
    "TraceRecord",
    "call_channel",
    "conformance_errors",
    "decide_next_prompt",
    "execute_channels",
    "fill_questionnaire",
    "live_branches",
    "load_trace",
    "parse_rendered_document",
    "render_document",
    "replay_run",
    "replay_trace",
    "run_program",
    "serialize_trace",
]
