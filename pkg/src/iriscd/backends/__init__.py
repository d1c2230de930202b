"""Clients for the completion and search services, with record/replay."""

from .cache import CacheMode, ReplayCache, fingerprint
from .errors import (
    BackendError,
    MalformedResponseError,
    ReplayMissError,
    TransportError,
    with_retries,
)
from .llm import (
    CachedLLM,
    CompletionRequest,
    CountingLLM,
    HTTPChatLLM,
    LLMClient,
    ScriptedLLM,
    ScriptMiss,
    ScriptRule,
)
from .search import (
    CachedSearch,
    Document,
    FixtureRecord,
    FixtureSearch,
    HTTPSearch,
    Query,
    SearchBackend,
    SearchHit,
    SynonymRegistry,
    document_id,
    host_allowed,
    html_to_text,
)

__all__ = [
    "BackendError", "CacheMode", "CachedLLM", "CachedSearch", "CompletionRequest", "CountingLLM",
    "Document", "FixtureRecord", "FixtureSearch", "HTTPChatLLM", "HTTPSearch", "LLMClient",
    "MalformedResponseError", "Query", "ReplayCache", "ReplayMissError", "ScriptMiss", "ScriptRule",
    "ScriptedLLM", "SearchBackend", "SearchHit", "SynonymRegistry", "TransportError",
    "document_id", "fingerprint", "host_allowed", "html_to_text", "with_retries",
]
