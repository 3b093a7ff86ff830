"""Egress-port queuing disciplines: FIFO, strict priority, weighted fair queuing.

All three share one contract: ``enqueue(packet, now)`` returns an
:class:`EnqueueOutcome` and tail-drops when the (shared) buffer is full;
``dequeue(now)`` returns the next packet to transmit or ``None``.

Packets only need ``tos``, ``size_bytes`` and ``flow`` attributes.
"""

from __future__ import annotations

import enum
import heapq
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Optional

DEFAULT_BUFFER = 500
VOICE_TOS = 6
BEST_EFFORT_TOS = 0


class InvalidTos(ValueError):
    pass


class EnqueueOutcome(enum.Enum):
    ACCEPTED = "accepted"
    DROPPED = "dropped"


class QdiscKind(enum.Enum):
    FIFO = "fifo"
    PQ = "pq"
    WFQ = "wfq"


def default_weight(tos: int) -> float:
    return float(max(tos, 1))


@dataclass
class QdiscConfig:
    kind: QdiscKind = QdiscKind.FIFO
    buffer_capacity_packets: int = DEFAULT_BUFFER
    wfq_weights: dict[int, float] = field(default_factory=dict)
    pq_levels: int = 8

    def validate(self) -> None:
        if self.buffer_capacity_packets < 1:
            raise ValueError("buffer_capacity_packets must be >= 1")
        if not 1 <= self.pq_levels <= 8:
            raise ValueError("pq_levels must lie in [1, 8]")
        for tos, w in self.wfq_weights.items():
            classify_tos(tos)
            if w <= 0:
                raise ValueError(f"WFQ weight for ToS {tos} must be positive")

    def weight(self, tos: int) -> float:
        return self.wfq_weights.get(tos, default_weight(tos))


def classify_tos(tos: int) -> int:
    if not isinstance(tos, int) or not 0 <= tos <= 7:
        raise InvalidTos(f"ToS must be an integer in [0, 7], got {tos!r}")
    return tos


def classify(packet) -> int:
    return classify_tos(packet.tos)


DropLogger = Callable[[int, object, str], None]


class Qdisc:
    """Shared bookkeeping: capacity, counters, optional drop logger."""

    kind: QdiscKind

    def __init__(self, capacity: Optional[int] = DEFAULT_BUFFER,
                 drop_logger: Optional[DropLogger] = None):
        if capacity is not None and capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self.occupancy = 0
        self.offered = 0
        self.accepted = 0
        self.dropped = 0
        self.dequeued = 0
        self.drop_logger = drop_logger

    def __len__(self) -> int:
        return self.occupancy

    def enqueue(self, packet, now: int) -> EnqueueOutcome:
        self.offered += 1
        classify(packet)
        if self.capacity is not None and self.occupancy >= self.capacity:
            self.dropped += 1
            if self.drop_logger is not None:
                self.drop_logger(now, packet, "BufferFull")
            return EnqueueOutcome.DROPPED
        self._push(packet, now)
        self.occupancy += 1
        self.accepted += 1
        return EnqueueOutcome.ACCEPTED

    def dequeue(self, now: int):
        if self.occupancy == 0:
            self._idle(now)
            return None
        packet = self._pop(now)
        self.occupancy -= 1
        self.dequeued += 1
        return packet

    def packets(self) -> list:
        """Queued packets (any order); for end-of-run accounting."""
        raise NotImplementedError

    def _push(self, packet, now: int) -> None:
        raise NotImplementedError

    def _pop(self, now: int):
        raise NotImplementedError

    def _idle(self, now: int) -> None:
        pass


class FifoQdisc(Qdisc):
    kind = QdiscKind.FIFO

    def __init__(self, capacity: Optional[int] = DEFAULT_BUFFER, drop_logger=None):
        super().__init__(capacity, drop_logger)
        self._queue: deque = deque()

    def _push(self, packet, now):
        self._queue.append(packet)

    def _pop(self, now):
        return self._queue.popleft()

    def packets(self):
        return list(self._queue)


class PriorityQdisc(Qdisc):
    """Strict priority over per-class FIFOs; higher ToS is served first.

    All classes draw on the same ``capacity``.
    """

    kind = QdiscKind.PQ

    def __init__(self, capacity: Optional[int] = DEFAULT_BUFFER, levels: int = 8,
                 drop_logger=None):
        super().__init__(capacity, drop_logger)
        self.levels = levels
        self._queues = [deque() for _ in range(levels)]

    def level(self, tos: int) -> int:
        return tos * self.levels // 8

    def _push(self, packet, now):
        self._queues[self.level(packet.tos)].append(packet)

    def _pop(self, now):
        for q in reversed(self._queues):
            if q:
                return q.popleft()
        raise AssertionError("occupancy out of sync")

    def packets(self):
        return [p for q in self._queues for p in q]


@dataclass
class WfqFlow:
    weight: float
    last_finish: float = 0.0


def wfq_finish_time(flow: WfqFlow, size_bits: float, v_now: float) -> float:
    """Virtual finish tag ``max(V, F_prev) + L/w``; stored as the flow's new F_prev."""
    finish = max(v_now, flow.last_finish) + size_bits / flow.weight
    flow.last_finish = finish
    return finish


class WfqQdisc(Qdisc):
    """Packet-by-packet GPS emulation.

    Tags use the flow's weight (looked up by ToS); the system virtual time
    tracks the fluid GPS reference exactly: it advances at
    ``rate / (sum of GPS-backlogged weights)`` and a flow leaves the
    backlogged set when V reaches its last finish tag.
    """

    kind = QdiscKind.WFQ

    def __init__(self, rate_bps: float, weights: Optional[dict[int, float]] = None,
                 capacity: Optional[int] = DEFAULT_BUFFER, drop_logger=None):
        super().__init__(capacity, drop_logger)
        if rate_bps <= 0:
            raise ValueError("rate_bps must be positive")
        self.rate = float(rate_bps)
        self.weights = dict(weights or {})
        self.flows: dict[object, WfqFlow] = {}
        self.virtual_time = 0.0
        self._t = 0.0  # ns at which virtual_time was last brought up to date
        self._active: dict[object, float] = {}
        self._active_weight = 0.0
        self._finish_heap: list[tuple[float, object]] = []
        self._queue: list[tuple[float, object, int, object]] = []
        self._seq = 0

    def weight(self, tos: int) -> float:
        return self.weights.get(tos, default_weight(tos))

    def advance(self, now: int) -> float:
        """Bring the virtual time up to real time ``now`` (ns) and return it."""
        heap = self._finish_heap
        while self._active and self._t < now:
            while heap[0][0] != self.flows[heap[0][1]].last_finish or heap[0][1] not in self._active:
                heapq.heappop(heap)
            f_min = heap[0][0]
            ns_to_min = (f_min - self.virtual_time) * self._active_weight / self.rate * 1e9
            if self._t + ns_to_min <= now:
                self.virtual_time = f_min
                self._t += ns_to_min
                while heap and heap[0][0] <= f_min:
                    _, key = heapq.heappop(heap)
                    if key in self._active and self.flows[key].last_finish <= f_min:
                        del self._active[key]
                self._active_weight = sum(self._active.values())
            else:
                self.virtual_time += (now - self._t) * 1e-9 * self.rate / self._active_weight
                self._t = now
        if self._t < now:
            self._t = now
        return self.virtual_time

    def _push(self, packet, now):
        v = self.advance(now)
        key = packet.flow
        flow = self.flows.get(key)
        if flow is None:
            flow = self.flows[key] = WfqFlow(self.weight(packet.tos))
        finish = wfq_finish_time(flow, 8 * packet.size_bytes, v)
        packet.finish_tag = finish
        if key not in self._active:
            self._active[key] = flow.weight
            self._active_weight += flow.weight
        heapq.heappush(self._finish_heap, (finish, key))
        heapq.heappush(self._queue, (finish, key, self._seq, packet))
        self._seq += 1

    def _pop(self, now):
        self.advance(now)
        return heapq.heappop(self._queue)[3]

    def _idle(self, now):
        self.advance(now)

    def packets(self):
        return [entry[3] for entry in self._queue]


def make_qdisc(config: QdiscConfig, rate_bps: float,
               drop_logger: Optional[DropLogger] = None) -> Qdisc:
    cap = config.buffer_capacity_packets
    if config.kind is QdiscKind.FIFO:
        return FifoQdisc(cap, drop_logger)
    if config.kind is QdiscKind.PQ:
        return PriorityQdisc(cap, config.pq_levels, drop_logger)
    if config.kind is QdiscKind.WFQ:
        return WfqQdisc(rate_bps, config.wfq_weights, cap, drop_logger)
    raise ValueError(f"unknown qdisc kind {config.kind!r}")
