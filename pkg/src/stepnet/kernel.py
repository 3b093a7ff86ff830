"""Discrete-event engine: integer-nanosecond clock, ordered event heap, seeded streams.

The engine knows nothing about networks. Components register one handler per
event kind and the run loop dispatches popped events to it.
"""

from __future__ import annotations

import enum
import hashlib
import heapq
import random
from dataclasses import dataclass
from typing import Any, Callable, Optional

NS_PER_S = 1_000_000_000


def seconds(value: float) -> int:
    """Convert seconds to integer nanoseconds (round half away from zero)."""
    if value < 0:
        return -seconds(-value)
    return int(value * NS_PER_S + 0.5)


def to_seconds(ns: int) -> float:
    return ns / NS_PER_S


class SchedulingInPast(ValueError):
    pass


class EventKind(enum.IntEnum):
    SOURCE_EMIT = 0
    LINK_DELIVER = 1
    PORT_DEQUEUE_READY = 2
    STATS_SAMPLE = 3
    RUN_END = 4


class Event:
    __slots__ = ("fire_at", "sequence", "kind", "target", "payload", "cancelled")

    def __init__(self, fire_at: int, kind: EventKind, target: Any = None, payload: Any = None):
        self.fire_at = fire_at
        self.sequence = -1
        self.kind = kind
        self.target = target
        self.payload = payload
        self.cancelled = False

    def __repr__(self) -> str:
        return (f"Event(fire_at={self.fire_at}, seq={self.sequence}, "
                f"kind={self.kind.name}, target={self.target!r})")


class EventHandle:
    """Returned by :meth:`Simulator.schedule`; lets the caller cancel the event."""

    __slots__ = ("_event",)

    def __init__(self, event: Event):
        self._event = event

    @property
    def event(self) -> Event:
        return self._event

    def cancel(self) -> None:
        self._event.cancelled = True

    @property
    def cancelled(self) -> bool:
        return self._event.cancelled


@dataclass(frozen=True)
class RunStats:
    events_processed: int
    clock: int


class RandomStream:
    """A labelled generator whose state depends only on (seed, label)."""

    def __init__(self, seed: int, label: str):
        self.seed = seed
        self.label = label
        digest = hashlib.sha256(f"{seed}\x00{label}".encode()).digest()
        self._rng = random.Random(int.from_bytes(digest, "big"))

    def random(self) -> float:
        return self._rng.random()

    def exponential(self, mean: float) -> float:
        return self._rng.expovariate(1.0 / mean)

    def randrange(self, n: int) -> int:
        return self._rng.randrange(n)

    def uniform(self, a: float, b: float) -> float:
        return self._rng.uniform(a, b)


def keyed_uniform(seed: int, *keys: int) -> float:
    """Stateless uniform variate in [0, 1) determined by (seed, keys).

    Used where a draw must not depend on the order in which the simulation
    happens to visit things (e.g. per packet-hop corruption).
    """
    h = hashlib.blake2b(digest_size=8)
    h.update(seed.to_bytes(8, "little", signed=False))
    for k in keys:
        h.update(int(k).to_bytes(8, "little", signed=False))
    return (int.from_bytes(h.digest(), "little") >> 11) / float(1 << 53)


Handler = Callable[[Event], None]


class Simulator:
    def __init__(self, seed: int = 0, trace: bool = False):
        self.seed = seed
        self._now = 0
        self._heap: list[tuple[int, int, Event]] = []
        self._seq = 0
        self._handlers: dict[EventKind, Handler] = {}
        self._streams: dict[str, RandomStream] = {}
        self.events_processed = 0
        self.trace: Optional[list[tuple]] = [] if trace else None

    def now(self) -> int:
        return self._now

    def on(self, kind: EventKind, handler: Handler) -> None:
        self._handlers[kind] = handler

    def schedule(self, event: Event) -> EventHandle:
        if event.fire_at < self._now:
            raise SchedulingInPast(
                f"event at {event.fire_at} ns scheduled when clock is {self._now} ns")
        event.sequence = self._seq
        self._seq += 1
        heapq.heappush(self._heap, (event.fire_at, event.sequence, event))
        return EventHandle(event)

    def at(self, fire_at: int, kind: EventKind, target: Any = None,
           payload: Any = None) -> EventHandle:
        return self.schedule(Event(fire_at, kind, target, payload))

    def after(self, delay: int, kind: EventKind, target: Any = None,
              payload: Any = None) -> EventHandle:
        return self.schedule(Event(self._now + delay, kind, target, payload))

    def pending(self) -> int:
        return sum(1 for _, _, e in self._heap if not e.cancelled)

    def rng_stream(self, label: str) -> RandomStream:
        stream = self._streams.get(label)
        if stream is None:
            stream = self._streams[label] = RandomStream(self.seed, label)
        return stream

    def run_until(self, t_end: int) -> RunStats:
        if t_end <= 0:
            raise ValueError("t_end must be positive")
        heap = self._heap
        handlers = self._handlers
        trace = self.trace
        processed = 0
        while heap and heap[0][0] <= t_end:
            fire_at, _, event = heapq.heappop(heap)
            if event.cancelled:
                continue
            self._now = fire_at
            if trace is not None:
                pid = getattr(event.payload, "id", event.payload)
                trace.append((fire_at, event.sequence, event.kind.name, event.target, pid))
            handler = handlers.get(event.kind)
            if handler is not None:
                handler(event)
            processed += 1
        if t_end > self._now:
            self._now = t_end
        self.events_processed += processed
        return RunStats(processed, self._now)
