"""Text-completion clients: scripted mocks, an HTTP chat client, and a replay wrapper."""

from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass, field
from typing import Mapping, Protocol, Sequence

import httpx

from .cache import ReplayCache, fingerprint
from .errors import BackendError, MalformedResponseError, TransportError, with_retries


@dataclass(frozen=True)
class CompletionRequest:
    prompt: str
    max_tokens: int = 1024
    temperature: float = 0.0

    def __post_init__(self):
        if not self.prompt:
            raise ValueError("prompt must be non-empty")
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be positive")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")

    def to_dict(self) -> dict:
        return {"prompt": self.prompt, "max_tokens": self.max_tokens, "temperature": float(self.temperature)}

    @property
    def fingerprint(self) -> str:
        return fingerprint("completion", self.to_dict())


class LLMClient(Protocol):
    def complete(self, request: CompletionRequest) -> str: ...


class ScriptMiss(BackendError):
    pass


@dataclass(frozen=True)
class ScriptRule:
    """Matches when every ``contains`` snippet occurs in the prompt (case-insensitive)."""

    contains: tuple[str, ...]
    response: str

    def matches(self, prompt: str) -> bool:
        low = prompt.casefold()
        return all(s.casefold() in low for s in self.contains)


class ScriptedLLM:
    """Deterministic mock answering from a fingerprint table, then ordered rules, then a default."""

    def __init__(
        self,
        responses: Mapping[str, str] | None = None,
        rules: Sequence[ScriptRule] = (),
        default: str | None = None,
    ):
        self.responses = dict(responses or {})
        self.rules = list(rules)
        self.default = default
        self.calls: list[CompletionRequest] = []
        self._lock = threading.Lock()

    @classmethod
    def from_file(cls, path) -> "ScriptedLLM":
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
        rules = [ScriptRule(tuple(r["contains"]), r["response"]) for r in doc.get("rules", [])]
        return cls(doc.get("responses"), rules, doc.get("default"))

    def complete(self, request: CompletionRequest) -> str:
        with self._lock:
            self.calls.append(request)
        fp = request.fingerprint
        if fp in self.responses:
            return self.responses[fp]
        for rule in self.rules:
            if rule.matches(request.prompt):
                return rule.response
        if self.default is not None:
            return self.default
        raise ScriptMiss(f"no scripted response for request {fp}")

    @property
    def call_count(self) -> int:
        return len(self.calls)


class HTTPChatLLM:
    """Chat-completion client for an OpenAI-compatible JSON endpoint."""

    def __init__(
        self,
        endpoint: str,
        model: str,
        api_key_env: str = "IRISCD_LLM_API_KEY",
        auth_header: str = "Authorization",
        auth_scheme: str = "Bearer",
        timeout: float = 120.0,
        attempts: int = 3,
        client: httpx.Client | None = None,
    ):
        self.endpoint = endpoint
        self.model = model
        self.api_key_env = api_key_env
        self.auth_header = auth_header
        self.auth_scheme = auth_scheme
        self.attempts = attempts
        self._client = client or httpx.Client(timeout=timeout)

    def _headers(self) -> dict:
        key = os.environ.get(self.api_key_env)
        if not key:
            return {}
        value = f"{self.auth_scheme} {key}" if self.auth_scheme else key
        return {self.auth_header: value}

    def payload(self, request: CompletionRequest) -> dict:
        return {
            "model": self.model,
            "messages": [{"role": "user", "content": request.prompt}],
            "max_tokens": request.max_tokens,
            "temperature": request.temperature,
        }

    def _once(self, request: CompletionRequest) -> str:
        try:
            resp = self._client.post(self.endpoint, json=self.payload(request), headers=self._headers())
        except httpx.HTTPError as exc:
            raise TransportError(str(exc)) from exc
        if resp.status_code == 429 or resp.status_code >= 500:
            raise TransportError(f"HTTP {resp.status_code} from {self.endpoint}")
        if resp.status_code >= 400:
            raise BackendError(f"HTTP {resp.status_code} from {self.endpoint}: {resp.text[:200]}")
        try:
            content = resp.json()["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise MalformedResponseError(f"unexpected completion payload: {resp.text[:200]}") from exc
        if not isinstance(content, str):
            raise MalformedResponseError("completion content is not a string")
        return content

    def complete(self, request: CompletionRequest) -> str:
        return with_retries(lambda: self._once(request), attempts=self.attempts)


@dataclass
class CachedLLM:
    """Routes completions through a ReplayCache; ``inner`` may be None in replay mode."""

    inner: LLMClient | None
    cache: ReplayCache
    calls: int = field(default=0)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False, compare=False)

    def complete(self, request: CompletionRequest) -> str:
        with self._lock:
            self.calls += 1

        def live():
            if self.inner is None:
                raise BackendError("no live LLM backend configured")
            return self.inner.complete(request)

        return self.cache.get_or_call("completion", request.to_dict(), live)


class CountingLLM:
    """Counts calls and failures of a wrapped client."""

    def __init__(self, inner: LLMClient):
        self.inner = inner
        self.calls = 0
        self.failures = 0
        self._lock = threading.Lock()

    def complete(self, request: CompletionRequest) -> str:
        with self._lock:
            self.calls += 1
        try:
            return self.inner.complete(request)
        except Exception:
            with self._lock:
                self.failures += 1
            raise
