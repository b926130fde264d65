"""Deterministic discrete-event backbone.

A virtual clock, a (time, sequence)-ordered event queue, a reliable
same-tick classical broadcast bus, and label-keyed random streams. All
protocol state mutation happens on the single event-loop thread; the event
log is an append-only list of stable, tab-separated records suitable for
golden-file comparison.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import Callable

from .rng import RandomStream


class SchedulingError(ValueError):
    """Raised when an event is scheduled before the current simulation time."""


class UndeployedOriginError(ValueError):
    """Raised when an undeployed node tries to broadcast."""


@dataclass(frozen=True)
class ScenarioEvent:
    at: float
    kind: str  # deploy | organize | move | qkd | send | eve_toggle | param_set | link_active | snapshot
    payload: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.at < 0:
            raise ValueError("event time must be >= 0")


@dataclass(frozen=True)
class LogRecord:
    time: float
    seq: int
    kind: str
    origin: str
    details: str

    def to_line(self) -> str:
        return f"{self.time:.6f}\t{self.seq}\t{self.kind}\t{self.origin}\t{self.details}"


def fmt(value) -> str:
    """Stable scalar formatting for log and report fields (6 significant
    digits for floats)."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def details_str(**fields) -> str:
    return " ".join(f"{k}={fmt(v)}" for k, v in fields.items())


class SimEngine:
    """Event queue, clock, broadcast bus, and stream factory."""

    def __init__(self, seed: int):
        self.seed = seed
        self.now = 0.0
        self.log: list[LogRecord] = []
        self.deployed: list[str] = []  # insertion order = deployment order
        self._deployed_set: set[str] = set()
        self._queue: list[tuple[float, int, ScenarioEvent]] = []
        self._schedule_seq = 0
        self._log_seq = 0
        self.handler: Callable[[ScenarioEvent], None] | None = None
        self.events_processed = 0

    # -- random streams ------------------------------------------------

    def stream(self, label: str) -> RandomStream:
        return RandomStream(self.seed, label)

    # -- logging ---------------------------------------------------------

    def emit(self, kind: str, origin: str, **fields) -> LogRecord:
        rec = LogRecord(self.now, self._log_seq, kind, origin, details_str(**fields))
        self._log_seq += 1
        self.log.append(rec)
        return rec

    def log_lines(self) -> list[str]:
        return [rec.to_line() for rec in self.log]

    # -- deployment registry ----------------------------------------------

    def mark_deployed(self, node_id: str) -> None:
        if node_id not in self._deployed_set:
            self._deployed_set.add(node_id)
            self.deployed.append(node_id)

    def is_deployed(self, node_id: str) -> bool:
        return node_id in self._deployed_set

    # -- queue ----------------------------------------------------------

    def schedule(self, ev: ScenarioEvent) -> None:
        if ev.at < self.now:
            raise SchedulingError(f"event at t={ev.at} scheduled in the past (now={self.now})")
        heapq.heappush(self._queue, (ev.at, self._schedule_seq, ev))
        self._schedule_seq += 1

    def run_until(self, t_end: float) -> dict:
        """Process every queued event with at <= t_end, in (time, sequence)
        order, then advance the clock to t_end."""
        if self.handler is None:
            raise RuntimeError("no event handler installed")
        processed = 0
        while self._queue and self._queue[0][0] <= t_end:
            at, _, ev = heapq.heappop(self._queue)
            self.now = at
            self.handler(ev)
            processed += 1
        self.now = max(self.now, t_end)
        self.events_processed += processed
        return {"events": processed}

    def pending_events(self) -> int:
        return len(self._queue)

    def last_event_time(self) -> float:
        return max((at for at, _, _ in self._queue), default=self.now)

    # -- broadcast bus -----------------------------------------------------

    def broadcast(self, origin: str, topic: str, payload: str = "") -> int:
        """Deliver a payload to every other deployed node at the current
        tick. Returns the number of deliveries."""
        if not self.is_deployed(origin):
            raise UndeployedOriginError(f"origin {origin!r} is not deployed")
        self.emit("broadcast", origin, topic=topic, payload=payload)
        count = 0
        for node in self.deployed:
            if node == origin:
                continue
            self.emit("bcast_rx", node, source=origin, topic=topic)
            count += 1
        return count
