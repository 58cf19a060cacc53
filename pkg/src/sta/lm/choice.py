"""Choice among candidate continuations.

Candidates are tokenized into a prefix tree so shared prefixes cost one
model query. Each leaf is scored by the geometric mean of its token
probabilities, ``cumul ** (1 / depth)``, and the best leaf wins.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from ..errors import CapabilityError, EmptyCandidate
from .base import LmBackend, SamplingConfig


class TokenChoiceTree:
    def __init__(self, token: int | None = None, depth: int = 0, parent: "TokenChoiceTree | None" = None):
        self.token = token
        self.depth = depth
        self.parent = parent
        self.children: dict[int, TokenChoiceTree] = {}
        self.proba: float | None = None
        # kept in log space: long candidates underflow a plain product
        self.log_cumul = 0.0

    @property
    def cumul(self) -> float:
        return math.exp(self.log_cumul)

    def add(self, backend: LmBackend, text: str) -> "TokenChoiceTree":
        """Insert ``text``'s token path and return its leaf."""
        tokens = backend.tokenize(text) if text else []
        if not tokens:
            raise EmptyCandidate(f"candidate {text!r} has no tokens")
        node = self
        for tok in tokens:
            if tok not in node.children:
                node.children[tok] = TokenChoiceTree(tok, node.depth + 1, node)
            node = node.children[tok]
        return node

    def evaluate(self, backend: LmBackend, prompt: str) -> int:
        """Fill ``proba``/``cumul`` for every node; returns the number of model queries.

        The root is always queried, other nodes only when they have children.
        """
        if not backend.capabilities.supports_full_distribution:
            raise CapabilityError(f"{type(backend).__name__} does not expose the next-token distribution")
        calls = 0
        stack = [(self, prompt)]
        while stack:
            node, text = stack.pop()
            if node.token is not None:
                text = text + backend.detokenize([node.token])
            if node.depth > 0 and not node.children:
                continue
            logprobs = backend.greedy(text)
            calls += 1
            for child in node.children.values():
                lp = float(logprobs[child.token])
                child.proba = math.exp(lp)
                child.log_cumul = node.log_cumul + lp
            # reversed so children are visited in insertion order
            stack.extend((c, text) for c in reversed(list(node.children.values())))
        return calls

    def probability(self) -> float | None:
        if self.depth == 0:
            return None
        return math.exp(self.log_cumul / self.depth)

    def count_internal(self) -> int:
        own = 1 if (self.depth == 0 or self.children) else 0
        return own + sum(c.count_internal() for c in self.children.values())


def tree_add(tree: TokenChoiceTree, candidate: str, backend: LmBackend) -> TokenChoiceTree:
    return tree.add(backend, candidate)


def tree_eval(tree: TokenChoiceTree, prompt: str, backend: LmBackend) -> None:
    tree.evaluate(backend, prompt)


def _common_prefix(a: str, b: str) -> int:
    n = 0
    for x, y in zip(a, b):
        if x != y:
            break
        n += 1
    return n


def choose_scored(backend: LmBackend, prompt: str, candidates: Sequence[str]) -> tuple[int, list[float]]:
    """Index of the most likely candidate and the score of each candidate.

    Ties go to the lowest index. Backends without a full next-token
    distribution are scored by continuation log-probabilities when they
    offer them, otherwise by the longest prefix shared with one greedy
    completion.
    """
    if not candidates:
        raise EmptyCandidate("no candidates to choose from")
    if len(candidates) == 1:
        return 0, [1.0]

    caps = backend.capabilities
    if caps.supports_full_distribution:
        tree = TokenChoiceTree()
        leaves = [tree.add(backend, c) for c in candidates]
        tree.evaluate(backend, prompt)
        scores = [leaf.probability() for leaf in leaves]
    elif caps.supports_continuation_logprobs:
        scores = []
        for c in candidates:
            if not c:
                raise EmptyCandidate("empty candidate")
            lps = backend.continuation_logprobs(prompt, c)
            scores.append(math.exp(sum(lps) / len(lps)) if lps else 0.0)
    else:
        longest = max(len(backend.tokenize(c)) for c in candidates)
        text = backend.complete(prompt, SamplingConfig(max_tokens=max(longest, 1), temperature=0.0))
        scores = [float(_common_prefix(text, c)) for c in candidates]
    return int(np.argmax(scores)), [float(s) for s in scores]


def choose(backend: LmBackend, prompt: str, candidates: Sequence[str]) -> int:
    return choose_scored(backend, prompt, candidates)[0]
