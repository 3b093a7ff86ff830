"""Packet sources (constant-rate voice, bulk FTP) and host sinks."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Optional

from .kernel import RandomStream, seconds
from .qdisc import BEST_EFFORT_TOS, VOICE_TOS, classify_tos


class MisroutedPacket(RuntimeError):
    pass


class Packet:
    __slots__ = ("id", "src", "dst", "tos", "size_bytes", "created_at",
                 "corrupted", "finish_tag")

    def __init__(self, id: int, src: str, dst: str, tos: int, size_bytes: int,
                 created_at: int):
        if size_bytes < 1:
            raise ValueError("size_bytes must be >= 1")
        self.id = id
        self.src = src
        self.dst = dst
        self.tos = classify_tos(tos)
        self.size_bytes = size_bytes
        self.created_at = created_at
        self.corrupted = False
        self.finish_tag = 0.0

    @property
    def flow(self) -> tuple[str, str, int]:
        return (self.src, self.dst, self.tos)

    def __repr__(self) -> str:
        return (f"Packet(id={self.id}, {self.src}->{self.dst}, tos={self.tos}, "
                f"{self.size_bytes}B, t={self.created_at})")


@dataclass(frozen=True)
class VoipSourceSpec:
    """PCM speech: 64 kbit/s in 20 ms frames of 160 bytes plus 40 header bytes."""

    src: str
    dst: str
    frame_interval: float = 0.02
    payload_bytes: int = 160
    header_bytes: int = 40
    start: float = 0.0
    stop: float = math.inf
    tos: int = VOICE_TOS

    def validate(self) -> None:
        if self.frame_interval <= 0:
            raise ValueError("frame_interval must be positive")
        if self.payload_bytes < 1:
            raise ValueError("payload_bytes must be >= 1")
        if self.header_bytes < 0:
            raise ValueError("header_bytes must be >= 0")
        if self.start < 0 or self.stop <= self.start:
            raise ValueError("need 0 <= start < stop")
        if self.src == self.dst:
            raise ValueError("source and destination must differ")
        classify_tos(self.tos)

    @property
    def packet_bytes(self) -> int:
        return self.payload_bytes + self.header_bytes


@dataclass(frozen=True)
class FtpSourceSpec:
    src: str
    dst: str
    mean_interrequest: float = 1.0
    file_size_bytes: int = 1_000_000
    segment_payload: int = 1460
    header_bytes: int = 40
    start: float = 0.0
    stop: float = math.inf
    tos: int = BEST_EFFORT_TOS

    def validate(self) -> None:
        if self.mean_interrequest <= 0:
            raise ValueError("mean_interrequest must be positive")
        if self.file_size_bytes < 1:
            raise ValueError("file_size_bytes must be >= 1")
        if self.segment_payload < 1:
            raise ValueError("segment_payload must be >= 1")
        if self.start < 0 or self.stop <= self.start:
            raise ValueError("need 0 <= start < stop")
        if self.src == self.dst:
            raise ValueError("source and destination must differ")
        classify_tos(self.tos)

    @property
    def segment_bytes(self) -> int:
        return self.segment_payload + self.header_bytes


def segment_sizes(file_size: int, segment_payload: int) -> list[int]:
    """Payload bytes of each segment a file is cut into."""
    full, rest = divmod(file_size, segment_payload)
    return [segment_payload] * full + ([rest] if rest else [])


def _stop_ns(stop: float) -> Optional[int]:
    return None if math.isinf(stop) else seconds(stop)


class VoipSource:
    def __init__(self, spec: VoipSourceSpec, ids: Iterator[int]):
        spec.validate()
        self.spec = spec
        self.ids = ids
        self.start = seconds(spec.start)
        self.stop = _stop_ns(spec.stop)
        self.interval = seconds(spec.frame_interval)
        self.emitted = 0

    def first_emit(self) -> int:
        return self.start

    def emit(self, now: int) -> tuple[Packet, Optional[int]]:
        """One voice frame; also returns the next emission time (None once past stop)."""
        s = self.spec
        pkt = Packet(next(self.ids), s.src, s.dst, s.tos, s.packet_bytes, now)
        self.emitted += 1
        nxt = self.start + self.emitted * self.interval
        if self.stop is not None and nxt >= self.stop:
            nxt = None
        return pkt, nxt


class FtpSource:
    """Open-loop file transfers: each request dumps a whole file's segments at once."""

    def __init__(self, spec: FtpSourceSpec, ids: Iterator[int], rng: RandomStream):
        spec.validate()
        self.spec = spec
        self.ids = ids
        self.rng = rng
        self.start = seconds(spec.start)
        self.stop = _stop_ns(spec.stop)
        self.sizes = [p + spec.header_bytes
                      for p in segment_sizes(spec.file_size_bytes, spec.segment_payload)]
        self.requests = 0

    def _gap(self) -> int:
        return max(1, seconds(self.rng.exponential(self.spec.mean_interrequest)))

    def first_emit(self) -> Optional[int]:
        t = self.start + self._gap()
        return None if self.stop is not None and t >= self.stop else t

    def emit(self, now: int) -> tuple[list[Packet], Optional[int]]:
        s = self.spec
        segments = [Packet(next(self.ids), s.src, s.dst, s.tos, size, now)
                    for size in self.sizes]
        self.requests += 1
        nxt = now + self._gap()
        if self.stop is not None and nxt >= self.stop:
            nxt = None
        return segments, nxt


@dataclass(frozen=True)
class DeliveryRecord:
    packet_id: int
    created_at: int
    delivered_at: int
    src: str
    dst: str
    tos: int
    size_bytes: int


class Sink:
    def __init__(self, host: str):
        self.host = host
        self.received: dict[int, int] = {}

    def receive(self, packet: Packet, now: int) -> DeliveryRecord:
        if packet.dst != self.host:
            raise MisroutedPacket(f"{packet!r} delivered to {self.host}")
        self.received[packet.tos] = self.received.get(packet.tos, 0) + 1
        return DeliveryRecord(packet.id, packet.created_at, now, packet.src,
                              packet.dst, packet.tos, packet.size_bytes)
