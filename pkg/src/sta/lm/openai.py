"""Client for services exposing the OpenAI ``/v1/completions`` endpoint."""

from __future__ import annotations

import logging
import os
import re
import time
from typing import Sequence

import httpx

from ..errors import BackendError
from .base import Capabilities, LmBackend, SamplingConfig

log = logging.getLogger(__name__)

_PIECES = re.compile(r"\s+|\w+|[^\w\s]")
_RETRYABLE = {408, 409, 429, 500, 502, 503, 504}


class OpenAICompatibleLm(LmBackend):
    """Completion-only backend.

    The service tokenizer is not available, so ``tokenize`` splits on words,
    whitespace runs and punctuation. It is only used for length bookkeeping;
    the service enforces ``max_tokens`` itself. Set ``echo_logprobs`` when
    the server returns prompt log-probabilities with ``echo`` (vLLM does),
    which lets choices be scored without a next-token distribution.
    """

    def __init__(
        self,
        model: str,
        base_url: str = "https://api.openai.com",
        api_key_env: str = "OPENAI_API_KEY",
        timeout: float = 30.0,
        retries: int = 2,
        backoff: float = 0.5,
        echo_logprobs: bool = False,
        concurrent: bool = True,
        client: httpx.Client | None = None,
    ):
        self.model = model
        self.base_url = base_url.rstrip("/")
        self.api_key_env = api_key_env
        self.retries = retries
        self.backoff = backoff
        self._client = client or httpx.Client(timeout=timeout)
        self._vocab: dict[str, int] = {}
        self._pieces: list[str] = []
        self.capabilities = Capabilities(
            supports_full_distribution=False,
            supports_concurrent_calls=concurrent,
            supports_continuation_logprobs=echo_logprobs,
        )

    def tokenize(self, text: str) -> list[int]:
        out = []
        for piece in _PIECES.findall(text):
            if piece not in self._vocab:
                self._vocab[piece] = len(self._pieces)
                self._pieces.append(piece)
            out.append(self._vocab[piece])
        return out

    def detokenize(self, tokens: Sequence[int]) -> str:
        return "".join(self._pieces[t] for t in tokens)

    def _post(self, payload: dict) -> dict:
        headers = {}
        key = os.environ.get(self.api_key_env)
        if key:
            headers["Authorization"] = f"Bearer {key}"
        url = f"{self.base_url}/v1/completions"
        attempts = 0
        while True:
            attempts += 1
            try:
                resp = self._client.post(url, json=payload, headers=headers)
            except httpx.HTTPError as exc:
                if attempts > self.retries:
                    raise BackendError(f"request to {url} failed: {exc}", attempts, retryable=True) from exc
                log.warning("completion request failed (%s), retrying", exc)
            else:
                if resp.status_code == 200:
                    return resp.json()
                retryable = resp.status_code in _RETRYABLE
                if not retryable or attempts > self.retries:
                    raise BackendError(
                        f"{url} answered {resp.status_code}: {resp.text[:200]}",
                        attempts,
                        status=resp.status_code,
                        retryable=retryable,
                    )
                log.warning("completion request got %s, retrying", resp.status_code)
            time.sleep(self.backoff * 2 ** (attempts - 1))

    def complete(self, prompt: str, config: SamplingConfig) -> str:
        payload = {
            "model": self.model,
            "prompt": prompt,
            "max_tokens": config.max_tokens,
            "temperature": config.temperature,
            "stop": list(config.stop_sequences) or None,
            "logprobs": None,
        }
        if config.top_p is not None:
            payload["top_p"] = config.top_p
        if config.top_k is not None:
            payload["top_k"] = config.top_k
        data = self._post(payload)
        try:
            return data["choices"][0]["text"]
        except (KeyError, IndexError, TypeError) as exc:
            raise BackendError(f"malformed completion response: {data!r}"[:300]) from exc

    def continuation_logprobs(self, prompt: str, continuation: str) -> list[float]:
        data = self._post(
            {
                "model": self.model,
                "prompt": prompt + continuation,
                "max_tokens": 1,
                "temperature": 0.0,
                "echo": True,
                "logprobs": 0,
            }
        )
        try:
            lp = data["choices"][0]["logprobs"]
            offsets = lp["text_offset"]
            values = lp["token_logprobs"]
        except (KeyError, IndexError, TypeError) as exc:
            raise BackendError("response carries no echoed log-probabilities") from exc
        end = len(prompt) + len(continuation)
        return [float(v) for off, v in zip(offsets, values) if len(prompt) <= off < end and v is not None]
