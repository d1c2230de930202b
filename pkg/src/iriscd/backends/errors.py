import time
from typing import Callable, TypeVar

T = TypeVar("T")


class BackendError(RuntimeError):
    """Failure talking to an external service."""


class TransportError(BackendError):
    """Retryable network or server failure."""


class MalformedResponseError(BackendError):
    pass


class ReplayMissError(BackendError):
    def __init__(self, fingerprint: str, kind: str = "request"):
        super().__init__(f"replay cache has no recorded {kind} for fingerprint {fingerprint}")
        self.fingerprint = fingerprint
        self.kind = kind


def with_retries(
    fn: Callable[[], T],
    attempts: int = 3,
    base_delay: float = 1.0,
    sleep: Callable[[float], None] = time.sleep,
) -> T:
    """Call ``fn``; retry TransportError with exponential backoff (1s, 2s, ...)."""
    for i in range(attempts):
        try:
            return fn()
        except TransportError:
            if i == attempts - 1:
                raise
            sleep(base_delay * 2**i)
    raise AssertionError("unreachable")
