"""Web-search clients: an in-memory fixture corpus, an HTTP client, and a replay wrapper."""

from __future__ import annotations

import hashlib
import json
import os
import threading
from dataclasses import dataclass, field
from html.parser import HTMLParser
from typing import Iterable, Mapping, Protocol, Sequence
from urllib.parse import urlparse

import httpx

from ..graph import name_key
from .cache import ReplayCache
from .errors import BackendError, MalformedResponseError, TransportError, with_retries

Query = tuple[str, ...]


@dataclass(frozen=True)
class SearchHit:
    url: str
    title: str = ""
    snippet: str = ""

    def to_dict(self) -> dict:
        return {"url": self.url, "title": self.title, "snippet": self.snippet}


def document_id(url: str) -> str:
    return hashlib.sha256(url.encode("utf-8")).hexdigest()[:16]


@dataclass(frozen=True)
class Document:
    id: str
    url: str
    text: str
    source_query: Query | None = None
    tags: tuple[str, ...] = ()

    @classmethod
    def create(cls, url: str, text: str, source_query: Query | None = None, tags: Iterable[str] = ()) -> "Document":
        if not text:
            raise BackendError(f"empty text extracted from {url}")
        return cls(document_id(url), url, text, tuple(source_query) if source_query else None, tuple(tags))

    def to_record(self) -> dict:
        tags = list(self.tags)
        if self.source_query:
            tags.append("source_query=" + " AND ".join(self.source_query))
        return {"id": self.id, "url": self.url, "text": self.text, "tags": tags}


class SearchBackend(Protocol):
    def search(self, query: Query, k: int, domain_allowlist: Sequence[str] | None = None) -> list[SearchHit]: ...

    def count(self, query: Query) -> int: ...

    def fetch(self, url: str) -> Document: ...


def host_allowed(url: str, allowlist: Sequence[str] | None) -> bool:
    if allowlist is None:
        return True
    host = (urlparse(url).hostname or "").lower()
    for entry in allowlist:
        entry = entry.lower().lstrip(".")
        if host == entry or host.endswith("." + entry):
            return True
    return False


def _check_query(query: Query) -> Query:
    query = tuple(t for t in (q.strip() for q in query) if t)
    if not query:
        raise ValueError("search query needs at least one term")
    return query


class _TextExtractor(HTMLParser):
    _SKIP = {"script", "style", "noscript", "head"}

    def __init__(self):
        super().__init__(convert_charrefs=True)
        self.parts: list[str] = []
        self._depth = 0

    def handle_starttag(self, tag, attrs):
        if tag in self._SKIP:
            self._depth += 1
        else:
            self.parts.append(" ")

    def handle_endtag(self, tag):
        if tag in self._SKIP and self._depth:
            self._depth -= 1
        else:
            self.parts.append(" ")

    def handle_data(self, data):
        if not self._depth:
            self.parts.append(data)


def html_to_text(markup: str) -> str:
    """Strip tags and collapse whitespace."""
    parser = _TextExtractor()
    parser.feed(markup)
    parser.close()
    return " ".join("".join(parser.parts).split())


class SynonymRegistry:
    def __init__(self, groups: Mapping[str, Sequence[str]] | None = None):
        self._alts: dict[str, tuple[str, ...]] = {}
        for term, syns in (groups or {}).items():
            self.register(term, syns)

    def register(self, term: str, synonyms: Sequence[str]) -> None:
        group = [term, *synonyms]
        for t in group:
            key = name_key(t)
            merged = list(self._alts.get(key, ()))
            for g in group:
                if name_key(g) not in map(name_key, merged):
                    merged.append(g)
            self._alts[key] = tuple(merged)

    def register_variables(self, variables) -> None:
        for v in variables:
            self.register(v.name, v.synonyms)

    def alternatives(self, term: str) -> tuple[str, ...]:
        return self._alts.get(name_key(term), (term,))


@dataclass
class FixtureRecord:
    id: str
    url: str
    text: str
    tags: tuple[str, ...] = ()


class FixtureSearch:
    """Search over a fixed corpus by case-insensitive substring conjunction."""

    def __init__(self, records: Sequence[FixtureRecord], synonyms: SynonymRegistry | None = None):
        self.records = list(records)
        self.synonyms = synonyms or SynonymRegistry()
        self._by_url = {r.url: r for r in self.records}
        self._lock = threading.Lock()
        self.calls = {"search": 0, "count": 0, "fetch": 0}

    @classmethod
    def from_jsonl(cls, path, synonyms: SynonymRegistry | None = None) -> "FixtureSearch":
        records = []
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    d = json.loads(line)
                    records.append(FixtureRecord(str(d["id"]), d["url"], d["text"], tuple(d.get("tags", ()))))
        return cls(records, synonyms)

    def _tick(self, kind):
        with self._lock:
            self.calls[kind] += 1

    def _matches(self, text: str, query: Query) -> bool:
        low = text.casefold()
        return all(
            any(alt.casefold() in low for alt in self.synonyms.alternatives(term)) for term in query
        )

    def search(self, query: Query, k: int, domain_allowlist: Sequence[str] | None = None) -> list[SearchHit]:
        if k < 1:
            raise ValueError("k must be >= 1")
        query = _check_query(query)
        self._tick("search")
        hits = []
        for r in self.records:
            if not host_allowed(r.url, domain_allowlist) or not self._matches(r.text, query):
                continue
            hits.append(SearchHit(r.url, r.id, r.text[:160]))
            if len(hits) == k:
                break
        return hits

    def count(self, query: Query) -> int:
        query = _check_query(query)
        self._tick("count")
        return sum(self._matches(r.text, query) for r in self.records)

    def fetch(self, url: str) -> Document:
        self._tick("fetch")
        try:
            r = self._by_url[url]
        except KeyError:
            raise BackendError(f"unknown fixture url {url}") from None
        return Document.create(r.url, r.text, tags=r.tags)


class HTTPSearch:
    """Client for a Custom-Search-style JSON API.

    ``endpoint`` receives ``q``, ``num`` and ``start`` parameters plus any
    ``extra_params``; results are read from ``items[].link/title/snippet`` and
    totals from ``searchInformation.totalResults``.
    """

    PAGE = 10

    def __init__(
        self,
        endpoint: str,
        api_key_env: str = "IRISCD_SEARCH_API_KEY",
        key_param: str = "key",
        extra_params: Mapping[str, str] | None = None,
        synonyms: SynonymRegistry | None = None,
        timeout: float = 30.0,
        attempts: int = 3,
        client: httpx.Client | None = None,
    ):
        self.endpoint = endpoint
        self.api_key_env = api_key_env
        self.key_param = key_param
        self.extra_params = dict(extra_params or {})
        self.synonyms = synonyms or SynonymRegistry()
        self.attempts = attempts
        self._client = client or httpx.Client(timeout=timeout, follow_redirects=True)

    def render(self, query: Query) -> str:
        groups = []
        for term in _check_query(query):
            alts = self.synonyms.alternatives(term)
            quoted = [f'"{a}"' for a in alts]
            groups.append(quoted[0] if len(quoted) == 1 else "(" + " OR ".join(quoted) + ")")
        return " AND ".join(groups)

    def _get(self, params: dict) -> dict:
        params = {**self.extra_params, **params}
        key = os.environ.get(self.api_key_env)
        if key:
            params[self.key_param] = key

        def once():
            try:
                resp = self._client.get(self.endpoint, params=params)
            except httpx.HTTPError as exc:
                raise TransportError(str(exc)) from exc
            if resp.status_code == 429 or resp.status_code >= 500:
                raise TransportError(f"HTTP {resp.status_code} from search endpoint")
            if resp.status_code >= 400:
                raise BackendError(f"HTTP {resp.status_code} from search endpoint")
            try:
                return resp.json()
            except ValueError as exc:
                raise MalformedResponseError("search endpoint returned non-JSON") from exc

        return with_retries(once, attempts=self.attempts)

    def search(self, query: Query, k: int, domain_allowlist: Sequence[str] | None = None) -> list[SearchHit]:
        if k < 1:
            raise ValueError("k must be >= 1")
        q = self.render(query)
        hits, seen, start = [], set(), 1
        while len(hits) < k:
            page = self._get({"q": q, "num": self.PAGE, "start": start})
            items = page.get("items") or []
            if not items:
                break
            for it in items:
                url = it.get("link")
                if not url or url in seen or not host_allowed(url, domain_allowlist):
                    continue
                seen.add(url)
                hits.append(SearchHit(url, it.get("title", ""), it.get("snippet", "")))
                if len(hits) == k:
                    break
            start += self.PAGE
        return hits

    def count(self, query: Query) -> int:
        page = self._get({"q": self.render(query), "num": 1, "start": 1})
        try:
            return int(page["searchInformation"]["totalResults"])
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedResponseError("search response lacks totalResults") from exc

    def fetch(self, url: str) -> Document:
        def once():
            try:
                resp = self._client.get(url)
            except httpx.HTTPError as exc:
                raise TransportError(str(exc)) from exc
            if resp.status_code >= 500:
                raise TransportError(f"HTTP {resp.status_code} fetching {url}")
            if resp.status_code >= 400:
                raise BackendError(f"HTTP {resp.status_code} fetching {url}")
            return resp.text

        return Document.create(url, html_to_text(with_retries(once, attempts=self.attempts)))


@dataclass
class CachedSearch:
    """Routes search, count and fetch through a ReplayCache."""

    inner: SearchBackend | None
    cache: ReplayCache
    calls: dict = field(default_factory=lambda: {"search": 0, "count": 0, "fetch": 0})
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False, compare=False)

    def _tick(self, kind):
        with self._lock:
            self.calls[kind] += 1

    def _live(self):
        if self.inner is None:
            raise BackendError("no live search backend configured")
        return self.inner

    def search(self, query: Query, k: int, domain_allowlist: Sequence[str] | None = None) -> list[SearchHit]:
        if k < 1:
            raise ValueError("k must be >= 1")
        query = _check_query(query)
        self._tick("search")
        req = {"query": list(query), "k": k, "allowlist": list(domain_allowlist) if domain_allowlist is not None else None}
        raw = self.cache.get_or_call(
            "search", req, lambda: [h.to_dict() for h in self._live().search(query, k, domain_allowlist)]
        )
        return [SearchHit(**h) for h in raw]

    def count(self, query: Query) -> int:
        query = _check_query(query)
        self._tick("count")
        return int(self.cache.get_or_call("count", {"query": list(query)}, lambda: self._live().count(query)))

    def fetch(self, url: str) -> Document:
        self._tick("fetch")

        def live():
            d = self._live().fetch(url)
            return {"url": d.url, "text": d.text, "tags": list(d.tags)}

        raw = self.cache.get_or_call("fetch", {"url": url}, live)
        return Document.create(raw["url"], raw["text"], tags=raw.get("tags", ()))
