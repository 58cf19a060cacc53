"""
Choosing among candidate lines
==============================

Whenever a questionnaire may continue in more than one way, the model picks
the candidate whose tokens it finds most likely. Candidates are placed in a
prefix tree so each shared prefix costs one distribution query, and a
candidate's score is the geometric mean of its token probabilities, which
keeps long candidates from being penalized for their length.
"""

import itertools

import numpy as np

from sta.lm import ScriptedLm, TokenChoiceTree, choose_scored

# %%
# A three-token model: a, b and c with probabilities 0.5, 0.3 and 0.2,
# except that after b the model strongly expects c.
lm = ScriptedLm(["a", "b", "c"], [("", [0.5, 0.3, 0.2]), ("b", [0.05, 0.05, 0.9])])
print(np.exp(lm.greedy("Q:")), np.exp(lm.greedy("Q:b")))

# %%
# "bc" has joint probability 0.27, lower than "a" at 0.5, but its per-token
# mean sqrt(0.27) ~ 0.52 wins.
index, scores = choose_scored(lm, "Q:", ["a", "c", "bc"])
print(index, [round(s, 4) for s in scores])

# %%
# The order of the candidates does not change the winner.
for perm in itertools.permutations(["a", "c", "bc"]):
    i, _ = choose_scored(lm, "Q:", list(perm))
    print(perm, "->", perm[i])

# %%
# Query economy: one call for the root plus one per distinct proper prefix.
tree = TokenChoiceTree()
cands = ["abc", "abb", "ac", "b"]
for c in cands:
    tree.add(lm, c)
lm.reset()
tree.evaluate(lm, "Q:")
prefixes = {c[:k] for c in cands for k in range(1, len(c))}
print(lm.greedy_calls, "queries for prefixes", sorted(prefixes))
