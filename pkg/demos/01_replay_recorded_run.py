"""
Replaying a recorded run of the iterative-answer program
========================================================

The shipped program drafts an answer, then loops over an "edit" prompt that
lists issues and rewrites the answer until the model picks "submit". Here a
scripted model replays a recorded run line by line, so everything below is
deterministic and needs no network.
"""

import json
from pathlib import Path

from sta.compiler import compile_source, library_path, render_header
from sta.lm import SamplingConfig, ScriptedLm
from sta.runtime import BackendTable, render_document, replay_run, run_program, serialize_trace

FIXTURES = Path(__file__).resolve().parents[1] / "tests" / "fixtures"

# %%
# Macros fix the counts: T thoughts, N answer sentences, R issues with S
# solutions each, and at most L visits of the edit prompt. The extra first
# line overrides the wording of one header slot to match the recording.
source = "fmts: Each prompt expects one of the following formats:\n"
source += library_path("iterative_answer").read_text()
program = compile_source(source, {"T": 3, "N": 2, "R": 2, "S": 3, "L": 2})
print(program.successor_graph())

# %%
# Every prompt is sent to the model behind a header that explains the
# questionnaire. This is the edit prompt's header.
print(render_header(program.prompts["edit"], program))

# %%
# The scripted model follows the recorded lines. It works per character, so
# text formats need a generous token budget.
lm = ScriptedLm.from_file(FIXTURES / "gpt35_scripted.json")
roomy = SamplingConfig(max_tokens=1000)
backends = BackendTable(lm, sampling={f: roomy for f in ("text", "thought", "sentence")})

outputs, trace = run_program(program, {"question": "Explain the different phases of a compiler"}, backends)
print(json.dumps(outputs, indent=2))

# %%
# Each prompt keeps a stack of the documents it produced. The edit document
# renders back to the questionnaire lines the model saw.
(edit,) = trace.documents()["edit"][0]
print(edit.shape())
print(render_document(program.prompts["edit"], edit))

# %%
# The trace is plain JSON. Replaying it swaps the model for the recorded
# completions and choices and checks that the same stacks come out.
text = serialize_trace(trace)
again, _ = replay_run(program, text)
assert again == outputs
kinds = [e["event"] for e in json.loads(text)["events"]]
print({k: kinds.count(k) for k in sorted(set(kinds))})
