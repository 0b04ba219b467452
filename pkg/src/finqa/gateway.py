"""Uniform completion interface over pluggable LLM backends.

Backends: an OpenAI-style chat-completions HTTP client, two deterministic
local mocks (faithful and hallucinating) used for testing and benchmarking,
and a replay backend serving canned completions keyed by prompt hash.
"""
from __future__ import annotations

import hashlib
import json
import os
import random
import re
import threading
import time
from dataclasses import dataclass
from decimal import Decimal
from pathlib import Path

import requests

from .corpus import render_value
from .errors import (
    BackendRejected,
    BackendTimeout,
    MalformedBackendReply,
    UnknownBackend,
    UnparseablePrompt,
)
from .prompt import NO_DATA_MARKER, parse_data_lines, parse_prompt_sections
from .scoring import extract_numbers

MAX_RETRIES = 2
BACKOFF_SECONDS = (0.25, 1.0)
ECHO_LIMIT = 3
INSUFFICIENT_DATA_ANSWER = "There is insufficient data to answer this question."
DEFAULT_CONCURRENCY_CAP = 4


@dataclass(frozen=True)
class CompletionParams:
    temperature: float = 0.0
    max_tokens: int = 512
    timeout_ms: int = 30000
    seed: int | None = None


@dataclass(frozen=True)
class CompletionResult:
    text: str
    latency_ms: float
    backend_id: str
    attempt_count: int


def prompt_hash(serialized_prompt: str) -> str:
    return hashlib.sha256(serialized_prompt.encode("utf-8")).hexdigest()


def _echo_sentences(prompt_text: str) -> list[str] | None:
    """Data-section sentences, or None when the no-data marker is present."""
    sections = parse_prompt_sections(prompt_text)
    data = sections["### Data"]
    if data.strip() == NO_DATA_MARKER:
        return None
    pairs = parse_data_lines(data)
    if not pairs:
        raise UnparseablePrompt("data section has neither chunk lines nor the no-data marker")
    return [sentence for _, sentence in pairs]


def mock_faithful(prompt_text: str) -> str:
    """Non-hallucinating oracle: echo the first data sentences verbatim."""
    sentences = _echo_sentences(prompt_text)
    if sentences is None:
        return INSUFFICIENT_DATA_ANSWER
    return "Based on the data: " + " ".join(sentences[:ECHO_LIMIT])


def _perturb_sentence(sentence: str, perturbation: float) -> str:
    factor = Decimal(1) + Decimal(str(perturbation))
    out = sentence
    for num in reversed(extract_numbers(sentence)):
        rendered = render_value(num.value * factor)
        if num.kind == "percentage":
            rendered += "%"
        out = out[:num.start] + rendered + out[num.end:]
    return out


def mock_hallucinate(prompt_text: str, perturbation: float, seed: int) -> str:
    """Adversarial oracle: as mock_faithful, but every numeric literal is
    scaled by (1 + perturbation); the seed picks sentences when >3 exist."""
    sentences = _echo_sentences(prompt_text)
    if sentences is None:
        return INSUFFICIENT_DATA_ANSWER
    if len(sentences) > ECHO_LIMIT:
        rng = random.Random(seed)
        chosen = sorted(rng.sample(range(len(sentences)), ECHO_LIMIT))
        sentences = [sentences[i] for i in chosen]
    perturbed = [_perturb_sentence(s, perturbation) for s in sentences]
    return "Based on the data: " + " ".join(perturbed)


class Backend:
    """Base class; subclasses implement one completion attempt."""

    def __init__(self, backend_id: str, concurrency_cap: int = DEFAULT_CONCURRENCY_CAP):
        self.backend_id = backend_id
        self._semaphore = threading.Semaphore(concurrency_cap)

    def _attempt(self, prompt_text: str, params: CompletionParams) -> str:
        raise NotImplementedError

    def _retryable(self, exc: Exception) -> bool:
        return False

    def complete(self, prompt_text: str, params: CompletionParams) -> CompletionResult:
        if not prompt_text:
            raise ValueError("prompt must be non-empty")
        with self._semaphore:
            start = time.perf_counter()
            attempts = 0
            while True:
                attempts += 1
                try:
                    text = self._attempt(prompt_text, params)
                    break
                except Exception as exc:
                    if attempts > MAX_RETRIES or not self._retryable(exc):
                        if isinstance(exc, TimeoutError):
                            raise BackendTimeout(str(exc)) from exc
                        raise
                    time.sleep(BACKOFF_SECONDS[attempts - 1])
            latency = (time.perf_counter() - start) * 1000.0
            return CompletionResult(
                text=text, latency_ms=latency, backend_id=self.backend_id, attempt_count=attempts
            )


class MockFaithfulBackend(Backend):
    def _attempt(self, prompt_text, params):
        return mock_faithful(prompt_text)


class MockHallucinateBackend(Backend):
    def __init__(self, backend_id: str, perturbation: float = 0.10, seed: int = 0, **kw):
        super().__init__(backend_id, **kw)
        self.perturbation = perturbation
        self.seed = seed

    def _attempt(self, prompt_text, params):
        seed = params.seed if params.seed is not None else self.seed
        return mock_hallucinate(prompt_text, self.perturbation, seed)


class ReplayBackend(Backend):
    """Serves canned completions from a fixture keyed by prompt hash."""

    def __init__(self, backend_id: str, fixture_path: str | Path, **kw):
        super().__init__(backend_id, **kw)
        self.fixtures = json.loads(Path(fixture_path).read_text(encoding="utf-8"))

    def _attempt(self, prompt_text, params):
        key = prompt_hash(prompt_text)
        if key not in self.fixtures:
            raise MalformedBackendReply(f"no replay fixture for prompt hash {key}")
        return self.fixtures[key]


class _RetryableHTTPError(Exception):
    pass


class HTTPBackend(Backend):
    """OpenAI-style chat-completions client. The persona section travels as
    the system message; the rest of the prompt as the user message."""

    def __init__(
        self,
        backend_id: str,
        base_url: str,
        model: str,
        api_key_env: str | None = None,
        session: requests.Session | None = None,
        **kw,
    ):
        super().__init__(backend_id, **kw)
        self.base_url = base_url.rstrip("/")
        self.model = model
        self.api_key_env = api_key_env
        self.session = session or requests.Session()

    def _retryable(self, exc: Exception) -> bool:
        return isinstance(exc, (TimeoutError, _RetryableHTTPError))

    def _attempt(self, prompt_text, params: CompletionParams):
        try:
            persona = parse_prompt_sections(prompt_text)["### Persona"]
            marker = "### Definitions"
            rest = prompt_text[prompt_text.index(marker):]
        except UnparseablePrompt:
            persona, rest = "", prompt_text
        headers = {"Content-Type": "application/json"}
        if self.api_key_env:
            key = os.environ.get(self.api_key_env, "")
            if key:
                headers["Authorization"] = f"Bearer {key}"
        body = {
            "model": self.model,
            "messages": [
                {"role": "system", "content": persona},
                {"role": "user", "content": rest},
            ],
            "temperature": params.temperature,
            "max_tokens": params.max_tokens,
        }
        try:
            resp = self.session.post(
                f"{self.base_url}/chat/completions",
                json=body,
                headers=headers,
                timeout=params.timeout_ms / 1000.0,
            )
        except requests.Timeout as exc:
            raise TimeoutError(str(exc)) from exc
        if resp.status_code >= 500:
            raise _RetryableHTTPError(f"status {resp.status_code}")
        if resp.status_code >= 400:
            raise BackendRejected(resp.status_code, resp.text)
        try:
            return resp.json()["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise MalformedBackendReply(f"reply missing text: {exc}") from exc

    def complete(self, prompt_text, params):
        try:
            return super().complete(prompt_text, params)
        except _RetryableHTTPError as exc:
            raise BackendTimeout(f"gave up after retries: {exc}") from exc


class GatewayRegistry:
    """Backend registry built from the service configuration."""

    def __init__(self):
        self._backends: dict[str, Backend] = {}
        self.call_count = 0  # instrumentation for the refusal-guard tests

    def register(self, backend: Backend) -> None:
        self._backends[backend.backend_id] = backend

    def get(self, backend_id: str) -> Backend:
        try:
            return self._backends[backend_id]
        except KeyError:
            raise UnknownBackend(backend_id) from None

    def ids(self) -> list[str]:
        return sorted(self._backends)

    def complete(self, backend_id: str, prompt_text: str, params: CompletionParams) -> CompletionResult:
        backend = self.get(backend_id)
        self.call_count += 1
        return backend.complete(prompt_text, params)

    @classmethod
    def from_config(cls, entries: list[dict]) -> "GatewayRegistry":
        registry = cls()
        for entry in entries:
            kind = entry["kind"]
            bid = entry["backend_id"]
            cap = entry.get("concurrency_cap", DEFAULT_CONCURRENCY_CAP)
            if kind == "mock_faithful":
                registry.register(MockFaithfulBackend(bid, concurrency_cap=cap))
            elif kind == "mock_hallucinate":
                registry.register(
                    MockHallucinateBackend(
                        bid,
                        perturbation=entry.get("perturbation", 0.10),
                        seed=entry.get("seed", 0),
                        concurrency_cap=cap,
                    )
                )
            elif kind == "replay":
                registry.register(
                    ReplayBackend(bid, entry["fixture_path"], concurrency_cap=cap)
                )
            elif kind == "http":
                registry.register(
                    HTTPBackend(
                        bid,
                        base_url=entry["base_url"],
                        model=entry.get("model", ""),
                        api_key_env=entry.get("api_key_env"),
                        concurrency_cap=cap,
                    )
                )
            else:
                raise ValueError(f"unknown backend kind {kind!r}")
        return registry
