"""Injectable clocks so scripted runs are byte-deterministic.

Timestamps circulate through the package as ISO-8601 UTC strings; the
clock is the only component allowed to mint them.
"""

from __future__ import annotations

from datetime import datetime, timedelta, timezone
from typing import Protocol


class Clock(Protocol):
    def now(self) -> str:
        """Next timestamp as an ISO-8601 UTC string."""
        ...


class SystemClock:
    """Wall-clock time, second resolution (stable to format)."""

    def now(self) -> str:
        return datetime.now(timezone.utc).replace(microsecond=0).isoformat()


class FixedClock:
    """Deterministic clock: starts at ``start`` and advances ``step`` per call."""

    def __init__(
        self,
        start: datetime | None = None,
        step: timedelta = timedelta(seconds=1),
    ):
        self._current = start or datetime(2024, 1, 1, tzinfo=timezone.utc)
        self._step = step

    def now(self) -> str:
        stamp = self._current.isoformat()
        self._current = self._current + self._step
        return stamp
