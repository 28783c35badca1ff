"""Injectable time source so logs and snapshots can be replayed bit-for-bit."""

from __future__ import annotations

import threading
from datetime import datetime, timedelta, timezone
from typing import Protocol


class Clock(Protocol):
    def now(self) -> datetime: ...


class SystemClock:
    def now(self) -> datetime:
        return datetime.now(timezone.utc)


class LogicalClock:
    """Counter-backed clock: each call advances one second from a fixed epoch."""

    def __init__(self, start: datetime | None = None):
        self._base = start or datetime(2024, 1, 1, tzinfo=timezone.utc)
        self._ticks = 0
        self._lock = threading.Lock()

    def now(self) -> datetime:
        with self._lock:
            self._ticks += 1
            return self._base + timedelta(seconds=self._ticks)


def isoformat(ts: datetime) -> str:
    return ts.isoformat().replace("+00:00", "Z")
