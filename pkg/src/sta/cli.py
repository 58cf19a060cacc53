"""Command-line front end.

Exit status is 0 on success, 1 when the program or a configuration file is
rejected, 2 when execution fails. Primary output goes to standard output,
diagnostics to standard error.
"""

from __future__ import annotations

import argparse
import importlib
import json
import sys
from pathlib import Path
from typing import Sequence

from .compiler import CompiledProgram, compile_source, render_header, to_dot
from .config import ConfigError, load_backends
from .errors import StaError, StaSyntaxError, TraceError, UnknownPrompt, ValidationError
from .lang import parse_define
from .runtime import replay_run, run_program, serialize_trace
from .runtime.trace import load_trace

OK, DIAGNOSTICS, RUNTIME = 0, 1, 2


def _diagnostic(path: str, exc: BaseException) -> str:
    name = type(exc).__name__
    if isinstance(exc, StaSyntaxError):
        return f"{path}:{exc.line}:{exc.column}: {name}: {exc.message}" + (
            f" (expected {exc.expected})" if exc.expected else ""
        ) + (f"\n    {exc.text}\n    {' ' * (exc.column - 1)}^" if exc.text else "")
    line = getattr(exc, "line", None)
    where = f"{path}:{line}" if line else path
    message = str(exc)
    prefix = f"line {line}: "
    suffix = f" (line {line})"
    if message.startswith(prefix):
        message = message[len(prefix) :]
    if message.endswith(suffix):
        message = message[: -len(suffix)]
    return f"{where}: {name}: {message}"


def _bindings(defines: Sequence[str]) -> dict:
    out = {}
    for item in defines or ():
        key, value = parse_define(item)
        out[key] = value
    return out


def _compile(path: str, defines: Sequence[str]) -> CompiledProgram:
    source = Path(path).read_text(encoding="utf-8")
    return compile_source(source, _bindings(defines))


def _fail(path: str, exc: BaseException, code: int) -> int:
    print(_diagnostic(path, exc), file=sys.stderr)
    return code


def _load(args) -> CompiledProgram | int:
    try:
        return _compile(args.file, args.define)
    except (OSError, StaError, ValueError) as exc:
        return _fail(args.file, exc, DIAGNOSTICS)


def cmd_check(args) -> int:
    program = _load(args)
    if isinstance(program, int):
        return program
    print(f"{args.file}: ok ({len(program.prompts)} prompts, entry {program.entry})", file=sys.stderr)
    return OK


def cmd_render(args) -> int:
    program = _load(args)
    if isinstance(program, int):
        return program
    name = args.prompt
    if name is None:
        if len(program.prompts) != 1:
            return _fail(args.file, ValidationError("--prompt is required when the program has several prompts"), DIAGNOSTICS)
        name = next(iter(program.prompts))
    if name not in program.prompts:
        return _fail(args.file, UnknownPrompt(name), DIAGNOSTICS)
    sys.stdout.write(render_header(program.prompts[name], program))
    return OK


def cmd_graph(args) -> int:
    program = _load(args)
    if isinstance(program, int):
        return program
    sys.stdout.write(to_dot(program))
    return OK


def _registry(specs: Sequence[str]) -> dict:
    out = {}
    for spec in specs or ():
        name, sep, target = spec.partition("=")
        module, colon, attr = target.partition(":")
        if not sep or not colon:
            raise ValueError(f"--callee expects NAME=module:attribute, got {spec!r}")
        obj = importlib.import_module(module)
        for part in attr.split("."):
            obj = getattr(obj, part)
        out[name] = obj
    return out


def _inputs(args) -> dict:
    inputs = {}
    if args.inputs_file:
        data = json.loads(Path(args.inputs_file).read_text(encoding="utf-8"))
        if not isinstance(data, dict):
            raise ValueError("--inputs-file must hold a JSON object")
        inputs.update(data)
    for item in args.input or ():
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise ValueError(f"--input expects NAME=VALUE, got {item!r}")
        inputs[key] = value
    return inputs


def _emit(outputs, fmt: str) -> None:
    if fmt == "compact":
        sys.stdout.write(json.dumps(outputs, ensure_ascii=False, separators=(",", ":")) + "\n")
    else:
        sys.stdout.write(json.dumps(outputs, ensure_ascii=False, indent=4) + "\n")


def cmd_run(args) -> int:
    program = _load(args)
    if isinstance(program, int):
        return program
    try:
        backends = load_backends(args.backends)
        inputs = _inputs(args)
        registry = _registry(args.callee)
    except (OSError, ValueError, ImportError, AttributeError, ConfigError) as exc:
        return _fail(args.backends, exc, DIAGNOSTICS)
    try:
        outputs, trace = run_program(program, inputs, backends, registry, max_workers=args.workers)
    except StaError as exc:
        partial = getattr(exc, "trace", None)
        if args.trace and partial is not None:
            Path(args.trace).write_text(serialize_trace(partial), encoding="utf-8")
        return _fail(args.file, exc, RUNTIME)
    if args.trace:
        Path(args.trace).write_text(serialize_trace(trace), encoding="utf-8")
    _emit(outputs, args.output_format)
    return OK


def cmd_replay(args) -> int:
    try:
        text = Path(args.trace_file).read_text(encoding="utf-8")
        recorded = load_trace(text)
    except (OSError, TraceError) as exc:
        return _fail(args.trace_file, exc, DIAGNOSTICS if isinstance(exc, OSError) else RUNTIME)
    try:
        source = Path(args.program).read_text(encoding="utf-8")
        bindings = _bindings(args.define) if args.define else dict(recorded.bindings)
        program = compile_source(source, bindings)
    except (OSError, StaError, ValueError) as exc:
        return _fail(args.program, exc, DIAGNOSTICS)
    try:
        outputs, _ = replay_run(program, text)
    except StaError as exc:
        return _fail(args.trace_file, exc, RUNTIME)
    _emit(outputs, args.output_format)
    return OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sta", description="Compile and run Structured Thoughts Automaton programs.")
    sub = parser.add_subparsers(dest="command", required=True)

    def program_args(p):
        p.add_argument("file", help="STA source file")
        p.add_argument(
            "-D", "--define", action="append", default=[], metavar="K=V", help="macro binding (repeatable)"
        )

    p = sub.add_parser("check", help="expand, parse and validate a program")
    program_args(p)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("render", help="print the header of one prompt")
    program_args(p)
    p.add_argument("--prompt", metavar="NAME", help="prompt to render (default: the only prompt)")
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("graph", help="print the control flow and automata as DOT")
    program_args(p)
    p.set_defaults(func=cmd_graph)

    outputs = argparse.ArgumentParser(add_help=False)
    outputs.add_argument(
        "--output-format", choices=("json", "compact"), default="json", help="indented or single-line JSON"
    )

    p = sub.add_parser("run", parents=[outputs], help="execute a program and print its outputs as JSON")
    program_args(p)
    p.add_argument("--input", action="append", default=[], metavar="K=V", help="input field (repeatable)")
    p.add_argument("--inputs-file", metavar="PATH", help="JSON object of input fields")
    p.add_argument("--backends", required=True, metavar="PATH", help="backend configuration (JSON or YAML)")
    p.add_argument("--trace", metavar="PATH", help="write the execution trace here")
    p.add_argument(
        "--callee", action="append", default=[], metavar="NAME=MODULE:ATTR", help="register a callable for call channels"
    )
    p.add_argument("--workers", type=int, default=None, help="threads for mapped questionnaire instances")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("replay", parents=[outputs], help="re-execute a recorded trace and print the outputs")
    p.add_argument("trace_file", help="trace written by run --trace")
    p.add_argument("--program", required=True, metavar="FILE", help="STA source the trace was recorded with")
    p.add_argument(
        "-D", "--define", action="append", default=[], metavar="K=V", help="macro binding (default: the trace's)"
    )
    p.set_defaults(func=cmd_replay)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
