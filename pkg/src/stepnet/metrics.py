"""Counters, delay/jitter statistics, time-bucketed series and their export."""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from .kernel import NS_PER_S, RandomStream
from .traffic import DeliveryRecord

BUFFER_FULL = "BufferFull"
BIT_ERROR = "BitError"
RESERVOIR_CAP = 1 << 22

SERIES_METRICS = (
    "sent_packets",
    "sent_bytes",
    "received_packets",
    "received_bytes",
    "throughput_bps",
    "dropped_packets",
    "errored_packets",
    "delay_mean_s",
)


class NegativeDelay(RuntimeError):
    pass


class IoFailure(OSError):
    pass


def e2e_delay(record: DeliveryRecord) -> int:
    if record.delivered_at < record.created_at:
        raise NegativeDelay(f"packet {record.packet_id} delivered before it was created")
    return record.delivered_at - record.created_at


@dataclass
class JitterState:
    jitter: float = 0.0
    last_transit: float = 0.0
    initialized: bool = False


def update_jitter(state: JitterState, transit: float) -> float:
    """Interarrival jitter, J += (|D| - J) / 16, in the units of ``transit``."""
    if not state.initialized:
        state.initialized = True
        state.last_transit = transit
        state.jitter = 0.0
        return 0.0
    d = transit - state.last_transit
    state.last_transit = transit
    state.jitter += (abs(d) - state.jitter) / 16.0
    return state.jitter


def bucketize(times: Iterable[int], width: int, n_buckets: Optional[int] = None,
              values: Optional[Iterable[float]] = None) -> np.ndarray:
    """Sum ``values`` (default: 1 per event) into buckets ``[k*width, (k+1)*width)``.

    Times and width share a unit (ns in the simulator). Events past the last
    bucket are ignored when ``n_buckets`` is given.
    """
    if width <= 0:
        raise ValueError("bucket width must be positive")
    t = np.asarray(list(times), dtype=np.int64)
    idx = t // width
    if n_buckets is None:
        n_buckets = int(idx.max()) + 1 if len(idx) else 0
    w = None if values is None else np.asarray(list(values), dtype=np.float64)
    keep = idx < n_buckets
    if w is not None:
        w = w[keep]
        return np.bincount(idx[keep], weights=w, minlength=n_buckets)[:n_buckets]
    return np.bincount(idx[keep], minlength=n_buckets)[:n_buckets]


def nearest_rank(sorted_values: list, q: float):
    if not sorted_values:
        return None
    rank = max(1, math.ceil(q * len(sorted_values)))
    return sorted_values[rank - 1]


@dataclass
class TosCounters:
    sent_packets: int = 0
    sent_bytes: int = 0
    received_packets: int = 0
    received_bytes: int = 0
    dropped_buffer: int = 0
    dropped_bit_error: int = 0
    in_flight: int = 0
    delay_count: int = 0
    delay_sum: int = 0
    delay_sumsq: float = 0.0
    delay_min: Optional[int] = None
    delay_max: Optional[int] = None


@dataclass
class _Series:
    sent: list = field(default_factory=list)        # (t, bytes)
    received: list = field(default_factory=list)    # (t, bytes, delay)
    dropped: list = field(default_factory=list)
    errored: list = field(default_factory=list)


class MetricsStore:
    def __init__(self, bucket_width: int = NS_PER_S, reservoir_rng: Optional[RandomStream] = None,
                 reservoir_cap: int = RESERVOIR_CAP):
        if bucket_width <= 0:
            raise ValueError("bucket width must be positive")
        self.bucket_width = bucket_width
        self.counters: dict[int, TosCounters] = {}
        self.series: dict[int, _Series] = {}
        self.samples: dict[int, list[int]] = {}
        self.jitter: dict[tuple, JitterState] = {}
        self.reservoir_cap = reservoir_cap
        self._rng = reservoir_rng or RandomStream(0, "delay-reservoir")

    def _tos(self, tos: int) -> TosCounters:
        c = self.counters.get(tos)
        if c is None:
            c = self.counters[tos] = TosCounters()
            self.series[tos] = _Series()
            self.samples[tos] = []
        return c

    def on_sent(self, packet, now: int) -> None:
        c = self._tos(packet.tos)
        c.sent_packets += 1
        c.sent_bytes += packet.size_bytes
        c.in_flight += 1
        self.series[packet.tos].sent.append((now, packet.size_bytes))

    def on_drop(self, packet, now: int, reason: str = BUFFER_FULL) -> None:
        c = self._tos(packet.tos)
        if reason == BUFFER_FULL:
            c.dropped_buffer += 1
            self.series[packet.tos].dropped.append(now)
        elif reason == BIT_ERROR:
            c.dropped_bit_error += 1
            self.series[packet.tos].errored.append(now)
        else:
            raise ValueError(f"unknown drop reason {reason!r}")
        c.in_flight -= 1

    def on_received(self, record: DeliveryRecord) -> int:
        delay = e2e_delay(record)
        c = self._tos(record.tos)
        c.received_packets += 1
        c.received_bytes += record.size_bytes
        c.in_flight -= 1
        c.delay_count += 1
        c.delay_sum += delay
        c.delay_sumsq += float(delay) * delay
        if c.delay_min is None or delay < c.delay_min:
            c.delay_min = delay
        if c.delay_max is None or delay > c.delay_max:
            c.delay_max = delay
        self.series[record.tos].received.append((record.delivered_at, record.size_bytes, delay))
        self._sample(record.tos, delay, c.delay_count)
        flow = (record.src, record.dst, record.tos)
        state = self.jitter.get(flow)
        if state is None:
            state = self.jitter[flow] = JitterState()
        update_jitter(state, delay)
        return delay

    def _sample(self, tos: int, delay: int, seen: int) -> None:
        samples = self.samples[tos]
        if len(samples) < self.reservoir_cap:
            samples.append(delay)
        else:
            j = self._rng.randrange(seen)
            if j < self.reservoir_cap:
                samples[j] = delay

    # queries -----------------------------------------------------------

    def active_tos(self) -> list[int]:
        return sorted(t for t, c in self.counters.items() if c.sent_packets > 0)

    def throughput(self, tos: int, window: tuple[int, int]) -> float:
        """Received bits per second over ``[start, end)`` (ns)."""
        start, end = window
        if end <= start:
            raise ValueError("window must have positive duration")
        s = self.series.get(tos)
        if s is None:
            return 0.0
        total = sum(b for t, b, _ in s.received if start <= t < end)
        return total * 8 * NS_PER_S / (end - start)

    def bucket_series(self, duration: int) -> dict[tuple[str, int], list]:
        n = -(-duration // self.bucket_width)
        w = self.bucket_width
        out: dict[tuple[str, int], list] = {}
        for tos in self.active_tos():
            s = self.series[tos]
            sent_t = [t for t, _ in s.sent]
            recv_t = [t for t, _, _ in s.received]
            out[("sent_packets", tos)] = bucketize(sent_t, w, n).astype(int).tolist()
            out[("sent_bytes", tos)] = bucketize(sent_t, w, n, [b for _, b in s.sent]).astype(int).tolist()
            out[("received_packets", tos)] = rp = bucketize(recv_t, w, n).astype(int).tolist()
            rb = bucketize(recv_t, w, n, [b for _, b, _ in s.received]).astype(int).tolist()
            out[("received_bytes", tos)] = rb
            out[("throughput_bps", tos)] = [b * 8 * NS_PER_S / w for b in rb]
            out[("dropped_packets", tos)] = bucketize(s.dropped, w, n).astype(int).tolist()
            out[("errored_packets", tos)] = bucketize(s.errored, w, n).astype(int).tolist()
            dsum = bucketize(recv_t, w, n, [d for _, _, d in s.received]).tolist()
            out[("delay_mean_s", tos)] = [None if k == 0 else ds / k / NS_PER_S
                                          for ds, k in zip(dsum, rp)]
        return out

    def summary(self, duration: int, in_flight_observed: Optional[dict[int, int]] = None) -> dict:
        per_tos = {}
        conserved = True
        for tos in self.active_tos():
            c = self.counters[tos]
            observed = c.in_flight if in_flight_observed is None else in_flight_observed.get(tos, 0)
            ok = (c.sent_packets == c.received_packets + c.dropped_buffer
                  + c.dropped_bit_error + observed) and observed == c.in_flight
            conserved &= ok
            samples = sorted(self.samples[tos])
            n = c.delay_count
            mean = c.delay_sum / n if n else None
            std = math.sqrt(max(c.delay_sumsq / n - mean * mean, 0.0)) if n else None
            flows = [j.jitter for k, j in sorted(self.jitter.items()) if k[2] == tos]
            per_tos[str(tos)] = {
                "sent_packets": c.sent_packets,
                "sent_bytes": c.sent_bytes,
                "received_packets": c.received_packets,
                "received_bytes": c.received_bytes,
                "dropped_buffer_full": c.dropped_buffer,
                "dropped_bit_error": c.dropped_bit_error,
                "in_flight": observed,
                "error_rate": c.dropped_bit_error / c.sent_packets,
                "throughput_bps": c.received_bytes * 8 * NS_PER_S / duration,
                "delay_mean_s": None if mean is None else mean / NS_PER_S,
                "delay_std_s": None if std is None else std / NS_PER_S,
                "delay_min_s": None if c.delay_min is None else c.delay_min / NS_PER_S,
                "delay_max_s": None if c.delay_max is None else c.delay_max / NS_PER_S,
                "delay_p95_s": None if not samples else nearest_rank(samples, 0.95) / NS_PER_S,
                "delay_min_ns": c.delay_min,
                "jitter_mean_s": (sum(flows) / len(flows) / NS_PER_S) if flows else None,
                "jitter_max_s": (max(flows) / NS_PER_S) if flows else None,
                "conservation": ok,
            }
        return {"per_tos": per_tos, "conservation": conserved}


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def series_csv(store: MetricsStore, duration: int) -> str:
    rows = ["bucket_start_s,metric,tos,value"]
    table = store.bucket_series(duration)
    for metric, tos in sorted(table):
        for k, v in enumerate(table[(metric, tos)]):
            start = k * store.bucket_width / NS_PER_S
            rows.append(f"{start!r},{metric},{tos},{_fmt(v)}")
    return "\n".join(rows) + "\n"


def export(store: MetricsStore, path, duration: int,
           in_flight_observed: Optional[dict[int, int]] = None,
           extra: Optional[dict] = None) -> dict:
    """Write ``series.csv`` and ``summary.json`` into directory ``path``."""
    summary = store.summary(duration, in_flight_observed)
    if extra:
        summary = {**extra, **summary}
    try:
        os.makedirs(path, exist_ok=True)
        with open(os.path.join(path, "series.csv"), "w", newline="") as fh:
            fh.write(series_csv(store, duration))
        with open(os.path.join(path, "summary.json"), "w") as fh:
            json.dump(summary, fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        raise IoFailure(f"cannot write metrics to {path}: {exc}") from exc
    return summary
