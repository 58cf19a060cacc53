from __future__ import annotations

from pathlib import Path

import pytest

from sta.compiler import compile_source, library_path
from sta.lm import SamplingConfig, ScriptedLm
from sta.runtime import BackendTable

FIXTURES = Path(__file__).parent / "fixtures"

# macro values of the recorded runs
USAGE_DEFINES = {"T": 3, "N": 2, "R": 2, "S": 3, "L": 2}
LLAMA_DEFINES = {"T": 3, "N": 5, "R": 3, "S": 3, "L": 2}
QUESTION = "Explain the different phases of a compiler"
# the recorded header says "formats", the shipped default says "text formats"
FMTS_OVERRIDE = "fmts: Each prompt expects one of the following formats:\n"


def example_source(with_override: bool = True) -> str:
    text = library_path("iterative_answer").read_text(encoding="utf-8")
    return (FMTS_OVERRIDE + text) if with_override else text


def transcript_lines(name: str) -> list[str]:
    return (FIXTURES / name).read_text(encoding="utf-8").split("\n")


def replay_table(fixture: str) -> tuple[ScriptedLm, BackendTable]:
    """Transcript-mode backend; transcripts tokenize per character so lines need room."""
    lm = ScriptedLm.from_file(FIXTURES / fixture)
    roomy = SamplingConfig(max_tokens=1000)
    return lm, BackendTable(lm, sampling={f: roomy for f in ("text", "thought", "sentence")})


@pytest.fixture
def example_program():
    return compile_source(example_source(), USAGE_DEFINES)


@pytest.fixture
def llama_program():
    return compile_source((FIXTURES / "llama_variant.sta").read_text(encoding="utf-8"), LLAMA_DEFINES)


def branch_lover(branch: str) -> ScriptedLm:
    """Uniform everywhere except after ``exit(next): ``, where it spells ``branch``."""
    rules = [("exit(next): " + branch[:k], {branch[k]: 1.0}) for k in range(len(branch))]
    return ScriptedLm(rules=rules, seed=7)


def run_fixture(program, fixture: str):
    from sta.runtime import run_program

    lm, table = replay_table(fixture)
    return run_program(program, {"question": QUESTION}, table)
