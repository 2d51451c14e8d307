"""Per-address fixed-window rate limiting for anonymous creates."""

from __future__ import annotations

import threading
import time
from typing import Callable

__all__ = ["RateLimiter"]


class RateLimiter:
    """Deny once ``max_creates`` allowances are spent inside one window.

    Windows are fixed-size and start at the first request after expiry;
    counters for expired windows are pruned on touch. Decisions are
    deterministic for a given clock.
    """

    def __init__(self, max_creates: int, window_seconds: int,
                 now: Callable[[], float] = time.time) -> None:
        self.max_creates = max_creates
        self.window_seconds = window_seconds
        self.now = now
        self._counters: dict[str, tuple[float, int]] = {}
        self._lock = threading.Lock()

    def check(self, key: str) -> bool:
        """True = allow (and consume one unit), False = deny."""
        at = self.now()
        with self._lock:
            self._prune(at)
            window_start, count = self._counters.get(key, (at, 0))
            if at - window_start >= self.window_seconds:
                window_start, count = at, 0
            if count >= self.max_creates:
                return False
            self._counters[key] = (window_start, count + 1)
            return True

    def _prune(self, at: float) -> None:
        expired = [
            key
            for key, (window_start, _) in self._counters.items()
            if at - window_start >= self.window_seconds
        ]
        for key in expired:
            del self._counters[key]
