"""
Channels, calls and fan-out
===========================

Data reaches a prompt through channels that run when the prompt is entered.
A mapped channel creates one questionnaire instance per element, and a call
channel fetches values from any registered callable, including another
compiled program. None of the programs below asks the model anything.
"""

from sta.compiler import compile_source
from sta.lm import ScriptedLm
from sta.runtime import run_program

# %%
# Two mapped channels: two topics times three styles gives six instances,
# and the exiting prompt returns one association per instance.
pairs = compile_source(
    """entry(p): pair topics with styles
prompt(p): one combination
- target(topic) from(topics) mapped
- target(style) from(styles) mapped
> topic: the subject
> style: the register
__exit(topic,style):
"""
)
outputs, _ = run_program(pairs, {"topics": ["parsing", "codegen"], "styles": ["terse", "plain", "formal"]})
for row in outputs:
    print(row)

# %%
# A call channel with a plain Python function, mapped over the input list.
tagger = compile_source(
    """entry(p): tag each item
prompt(p): tagged
- call(tag) kwargs(item, items) kwargs(label, "todo") target(line) from(items) mapped
> line: tagged item
__exit(line):
"""
)
outputs, _ = run_program(tagger, {"items": ["lexer", "parser", "emitter"]}, None, {"tag": lambda item, label: f"[{label}] {item}"})
print(outputs)

# %%
# A compiled program can be registered as a callee too; its outputs are
# flattened into the target state.
shout = compile_source("entry(q): echo\nprompt(q): echo\n- target(y) from(x)\n> y: copy\n__exit(y):\n")
caller = compile_source(
    "entry(p): ask\nprompt(p): ask\n- call(shout) kwargs(x, question) target(a)\n> a: result\n__exit(a):\n"
)
outputs, trace = run_program(caller, {"question": "what are the phases?"}, ScriptedLm(), {"shout": shout})
print(outputs)
print([e["event"] for e in trace.events])
