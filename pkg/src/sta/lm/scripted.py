"""Deterministic language model used as a test double.

Two behaviours combine:

* distribution rules: the next-token distribution is that of the rule whose
  context suffix is the longest suffix of the prompt (uniform when nothing
  matches); completions are sampled from it with a generator seeded by the
  prompt text, so equal prompts give equal outputs everywhere.
* a transcript: an ordered list of ``(line prefix, text)`` pairs replaying a
  recorded questionnaire. Completions return the recorded text for the
  current line, and the distribution steers choices towards the next
  recorded line.
"""

from __future__ import annotations

import hashlib
import json
import string
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence, Union

import numpy as np
import yaml

from .base import Capabilities, LmBackend, SamplingConfig, sample_token

START_MARKER = "start(record):\n"
DEFAULT_VOCAB = tuple(c for c in string.printable if c not in "\r\x0b\x0c")

Probs = Union[Sequence[float], Mapping[str, float]]


@dataclass(frozen=True)
class TranscriptEntry:
    prefix: str
    text: str = ""

    @property
    def line(self) -> str:
        return f"{self.prefix} {self.text}" if self.text else self.prefix


def structural_prefix(line: str) -> str:
    """``> > consider[2](thought):`` out of a full questionnaire line."""
    if line.startswith("exit("):
        i = line.find("):")
        return line[: i + 2] if i != -1 else line
    i = line.find("):")
    return line[: i + 2] if i != -1 else line.rstrip()


def transcript_from_text(text: str) -> list[TranscriptEntry]:
    """Entries for every line after ``start(record):`` of a raw transcript."""
    i = text.find(START_MARKER)
    body = text[i + len(START_MARKER) :] if i != -1 else text
    entries = []
    for line in body.split("\n"):
        if not line.strip():
            continue
        prefix = structural_prefix(line)
        rest = line[len(prefix) :]
        entries.append(TranscriptEntry(prefix, rest[1:] if rest.startswith(" ") else rest))
    return entries


class ScriptedLm(LmBackend):
    """Character-level (or vocabulary-driven) scripted model.

    ``greedy_calls`` and ``complete_calls`` count queries for tests.
    """

    def __init__(
        self,
        vocab: Sequence[str] | None = None,
        rules: Sequence[tuple[str, Probs]] = (),
        transcript: Sequence[TranscriptEntry | tuple[str, str]] = (),
        seed: int = 0,
        steer: float = 0.999,
    ):
        self.transcript = [e if isinstance(e, TranscriptEntry) else TranscriptEntry(*e) for e in transcript]
        if vocab is None:
            extra = {c for e in self.transcript for c in e.line}
            extra |= {c for suffix, _ in rules for c in suffix}
            vocab = list(DEFAULT_VOCAB) + sorted(extra - set(DEFAULT_VOCAB))
        if len(set(vocab)) != len(vocab) or any(not t for t in vocab):
            raise ValueError("vocabulary tokens must be unique and non-empty")
        self.vocab = list(vocab)
        self._ids = {tok: i for i, tok in enumerate(self.vocab)}
        self._max_len = max(len(t) for t in self.vocab)
        self.rules = [(suffix, self._normalize(probs)) for suffix, probs in rules]
        self.seed = seed
        self.steer = steer
        self.greedy_calls = 0
        self.complete_calls = 0
        self._lock = threading.Lock()
        self._pos = 0
        self._page_header: str | None = None
        self._page_lines: list[str] = []
        self.capabilities = Capabilities(
            supports_full_distribution=True,
            supports_concurrent_calls=not self.transcript,
        )

    # -- construction ------------------------------------------------------

    def _normalize(self, probs: Probs) -> np.ndarray:
        if isinstance(probs, Mapping):
            vec = np.zeros(len(self.vocab))
            for tok, p in probs.items():
                vec[self._ids[tok]] = p
        else:
            vec = np.asarray(probs, dtype=float)
            if vec.shape != (len(self.vocab),):
                raise ValueError(f"rule has {vec.size} probabilities for a vocabulary of {len(self.vocab)}")
        if np.any(vec < 0) or abs(vec.sum() - 1.0) > 1e-9:
            raise ValueError(f"rule probabilities must be non-negative and sum to 1, got {vec.sum()!r}")
        return vec

    @classmethod
    def from_dict(cls, data: Mapping) -> "ScriptedLm":
        rules = [(r.get("suffix", ""), r["probs"]) for r in data.get("rules", ())]
        transcript = [TranscriptEntry(t["prefix"], t.get("text", "")) for t in data.get("transcript", ())]
        return cls(data.get("vocab"), rules, transcript, seed=data.get("seed", 0))

    @classmethod
    def from_file(cls, path: str | Path) -> "ScriptedLm":
        """Load a JSON or YAML definition with ``vocab``, ``rules`` and ``transcript``."""
        path = Path(path)
        text = path.read_text(encoding="utf-8")
        data = json.loads(text) if path.suffix == ".json" else yaml.safe_load(text)
        return cls.from_dict(data)

    # -- tokens -------------------------------------------------------------

    def tokenize(self, text: str) -> list[int]:
        out = []
        i = 0
        while i < len(text):
            for n in range(min(self._max_len, len(text) - i), 0, -1):
                tok = self._ids.get(text[i : i + n])
                if tok is not None:
                    out.append(tok)
                    i += n
                    break
            else:
                raise ValueError(f"character {text[i]!r} is not in the vocabulary")
        return out

    def detokenize(self, tokens: Sequence[int]) -> str:
        return "".join(self.vocab[t] for t in tokens)

    # -- distributions -------------------------------------------------------

    def rule_probs(self, prompt: str) -> np.ndarray:
        best = None
        for suffix, vec in self.rules:
            if prompt.endswith(suffix) and (best is None or len(suffix) > len(best[0])):
                best = (suffix, vec)
        if best is None:
            return np.full(len(self.vocab), 1.0 / len(self.vocab))
        return best[1]

    def _steered(self, prompt: str) -> np.ndarray | None:
        if not self.transcript or self._pos >= len(self.transcript):
            return None
        partial = prompt[prompt.rfind("\n") + 1 :]
        target = self.transcript[self._pos].line
        if not target.startswith(partial) or len(partial) >= len(target):
            return None
        ahead = target[len(partial) :]
        for n in range(min(self._max_len, len(ahead)), 0, -1):
            tok = self._ids.get(ahead[:n])
            if tok is not None:
                break
        else:
            return None
        rest = (1.0 - self.steer) / max(len(self.vocab) - 1, 1)
        vec = np.full(len(self.vocab), rest)
        vec[tok] = self.steer if len(self.vocab) > 1 else 1.0
        return vec

    def greedy(self, prompt: str) -> np.ndarray:
        with self._lock:
            self.greedy_calls += 1
            self._sync(prompt)
            probs = self._steered(prompt)
        if probs is None:
            probs = self.rule_probs(prompt)
        with np.errstate(divide="ignore"):
            return np.log(probs)

    def complete(self, prompt: str, config: SamplingConfig) -> str:
        with self._lock:
            self.complete_calls += 1
            self._sync(prompt)
            recorded = self._recorded_text(prompt)
        if recorded is not None:
            return recorded
        return self._sample(prompt, config)

    def _sample(self, prompt: str, config: SamplingConfig) -> str:
        digest = hashlib.sha256(f"{self.seed}\0{prompt}".encode("utf-8")).digest()
        rng = np.random.default_rng(int.from_bytes(digest[:8], "little"))
        out = ""
        for _ in range(config.max_tokens):
            with np.errstate(divide="ignore"):
                logprobs = np.log(self.rule_probs(prompt + out))
            out += self.vocab[sample_token(logprobs, config, rng)]
            if any(s and s in out for s in config.stop_sequences):
                break
        return out

    # -- transcript bookkeeping --------------------------------------------

    def _page_end(self) -> int:
        """One past the exit entry closing the current page."""
        for j in range(self._pos, len(self.transcript)):
            if self.transcript[j].prefix.startswith("exit("):
                return j + 1
        return len(self.transcript)

    def _recorded_text(self, prompt: str) -> str | None:
        key = prompt[prompt.rfind("\n") + 1 :].rstrip()
        for j in range(self._pos, self._page_end()):
            if self.transcript[j].prefix == key:
                return self.transcript[j].text
        return None

    def _sync(self, prompt: str) -> None:
        """Advance past transcript entries whose lines already appear in the prompt.

        The transcript is split in pages, one per questionnaire, each closed
        by its ``exit(...)`` line. A prompt with a different header or a body
        that does not extend the last one seen starts the next page.
        """
        if not self.transcript:
            return
        i = prompt.rfind(START_MARKER)
        if i == -1:
            return
        header = prompt[:i]
        lines = prompt[i + len(START_MARKER) :].split("\n")[:-1]
        n = len(self._page_lines)
        if header == self._page_header and lines[:n] == self._page_lines:
            new = lines[n:]
        else:
            new = lines
            if self._page_header is not None:
                self._pos = self._page_end()
        for line in new:
            key = structural_prefix(line)
            for j in range(self._pos, self._page_end()):
                if self.transcript[j].prefix == key:
                    self._pos = j + 1
                    break
        self._page_header = header
        self._page_lines = lines

    def reset(self) -> None:
        with self._lock:
            self._pos = 0
            self._page_header = None
            self._page_lines = []
            self.greedy_calls = 0
            self.complete_calls = 0


def scripted_greedy(lm: ScriptedLm, prompt: str) -> np.ndarray:
    return lm.greedy(prompt)
