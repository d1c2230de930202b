"""Record/replay store for external-service responses, one JSON file per request."""

from __future__ import annotations

import enum
import hashlib
import json
import os
import tempfile
import threading
from pathlib import Path
from typing import Any, Callable

from .errors import ReplayMissError


class CacheMode(str, enum.Enum):
    RECORD = "record"
    REPLAY = "replay"
    PASSTHROUGH = "passthrough"


def canonical_json(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def fingerprint(kind: str, request: dict) -> str:
    """Stable hash of a normalized request."""
    payload = canonical_json({"kind": kind, "request": request})
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


class ReplayCache:
    def __init__(self, directory: str | os.PathLike, mode: CacheMode | str = CacheMode.REPLAY):
        self.directory = Path(directory)
        self.mode = CacheMode(mode)
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0
        if self.mode is CacheMode.RECORD:
            self.directory.mkdir(parents=True, exist_ok=True)

    def _path(self, fp: str) -> Path:
        return self.directory / f"{fp}.json"

    def lookup(self, fp: str) -> tuple[bool, Any]:
        path = self._path(fp)
        try:
            with open(path, encoding="utf-8") as fh:
                return True, json.load(fh)["response"]
        except FileNotFoundError:
            return False, None

    def store(self, fp: str, kind: str, request: dict, response: Any) -> None:
        record = {"fingerprint": fp, "kind": kind, "request": request, "response": response}
        text = json.dumps(record, indent=2, sort_keys=True, ensure_ascii=False) + "\n"
        with self._lock:
            fd, tmp = tempfile.mkstemp(dir=self.directory, suffix=".tmp")
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                fh.write(text)
            os.replace(tmp, self._path(fp))

    def get_or_call(self, kind: str, request: dict, call: Callable[[], Any]) -> Any:
        fp = fingerprint(kind, request)
        if self.mode is CacheMode.PASSTHROUGH:
            return call()
        found, value = self.lookup(fp)
        with self._lock:
            if found:
                self.hits += 1
            else:
                self.misses += 1
        if found:
            return value
        if self.mode is CacheMode.REPLAY:
            raise ReplayMissError(fp, kind)
        value = call()
        self.store(fp, kind, request, value)
        return value

    def stats(self) -> dict:
        total = self.hits + self.misses
        return {
            "mode": self.mode.value,
            "hits": self.hits,
            "misses": self.misses,
            "hit_rate": (self.hits / total) if total else None,
        }
