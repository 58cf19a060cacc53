from __future__ import annotations

import abc
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from ..errors import CapabilityError


@dataclass(frozen=True)
class SamplingConfig:
    max_tokens: int = 20
    temperature: float = 0.4
    top_k: int | None = None
    top_p: float | None = None
    stop_sequences: tuple[str, ...] = ("\n",)

    def __post_init__(self):
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be at least 1")
        if self.temperature < 0:
            raise ValueError("temperature must be non-negative")
        if self.top_k is not None and self.top_k < 1:
            raise ValueError("top_k must be at least 1")
        if self.top_p is not None and not 0 < self.top_p <= 1:
            raise ValueError("top_p must lie in (0, 1]")
        object.__setattr__(self, "stop_sequences", tuple(self.stop_sequences))

    def with_overrides(self, **kwargs) -> "SamplingConfig":
        return replace(self, **kwargs)

    def to_dict(self) -> dict:
        return {
            "max_tokens": self.max_tokens,
            "temperature": self.temperature,
            "top_k": self.top_k,
            "top_p": self.top_p,
            "stop_sequences": list(self.stop_sequences),
        }


# Thoughts are short and creative, sentences longer and calmer.
DEFAULT_SAMPLING = {
    "text": SamplingConfig(max_tokens=20, temperature=0.4),
    "thought": SamplingConfig(max_tokens=15, temperature=1.0),
    "sentence": SamplingConfig(max_tokens=50, temperature=0.7),
}


@dataclass(frozen=True)
class Capabilities:
    supports_full_distribution: bool = False
    supports_concurrent_calls: bool = False
    # per-token log-probabilities of a forced continuation (echo mode)
    supports_continuation_logprobs: bool = False


class LmBackend(abc.ABC):
    """What the runtime needs from a language model."""

    capabilities = Capabilities()

    @abc.abstractmethod
    def tokenize(self, text: str) -> list[int]: ...

    @abc.abstractmethod
    def detokenize(self, tokens: Sequence[int]) -> str: ...

    @abc.abstractmethod
    def complete(self, prompt: str, config: SamplingConfig) -> str: ...

    def greedy(self, prompt: str) -> np.ndarray:
        """Natural-log probabilities of every vocabulary token following ``prompt``."""
        raise CapabilityError(f"{type(self).__name__} does not expose the next-token distribution")

    def continuation_logprobs(self, prompt: str, continuation: str) -> list[float]:
        raise CapabilityError(f"{type(self).__name__} cannot score forced continuations")


def complete_line(backend: LmBackend, prompt: str, config: SamplingConfig) -> str:
    """One line of completion: cut at the first stop sequence, at most
    ``max_tokens`` tokens, trailing whitespace removed."""
    if "\n" not in config.stop_sequences:
        raise ValueError("line completion requires a newline stop sequence")
    text = backend.complete(prompt, config)
    cut = len(text)
    for stop in config.stop_sequences:
        if stop:
            i = text.find(stop)
            if i != -1:
                cut = min(cut, i)
    text = text[:cut]
    tokens = backend.tokenize(text)
    if len(tokens) > config.max_tokens:
        text = backend.detokenize(tokens[: config.max_tokens])
    return text.rstrip()


def sample_token(logprobs: np.ndarray, config: SamplingConfig, rng: np.random.Generator) -> int:
    """Draw one token id. Temperature 0 is argmax decoding."""
    logprobs = np.asarray(logprobs, dtype=float)
    if config.temperature == 0:
        return int(np.argmax(logprobs))
    with np.errstate(invalid="ignore"):
        logits = logprobs / config.temperature
    logits = np.where(np.isfinite(logits), logits, -np.inf)
    logits = logits - np.max(logits)
    probs = np.exp(logits)
    probs /= probs.sum()
    order = np.argsort(-probs, kind="stable")
    keep = np.zeros_like(probs, dtype=bool)
    if config.top_k is not None:
        keep[order[: config.top_k]] = True
    else:
        keep[:] = True
    if config.top_p is not None:
        cumulative = np.cumsum(probs[order])
        cutoff = int(np.searchsorted(cumulative, config.top_p - 1e-12)) + 1
        nucleus = np.zeros_like(keep)
        nucleus[order[:cutoff]] = True
        keep &= nucleus
    probs = np.where(keep, probs, 0.0)
    probs /= probs.sum()
    return int(rng.choice(len(probs), p=probs))
