"""Test drivers: a bare single-server port and an M/M/1 model on the kernel."""

from __future__ import annotations

from stepnet.kernel import EventKind, Simulator, seconds
from stepnet.qdisc import EnqueueOutcome, FifoQdisc


class P:
    """Minimal packet for queue-level tests."""

    __slots__ = ("id", "src", "dst", "tos", "size_bytes", "finish_tag", "arrival")

    def __init__(self, id, tos=0, size_bytes=100, src="a", dst="b", arrival=0):
        self.id = id
        self.src = src
        self.dst = dst
        self.tos = tos
        self.size_bytes = size_bytes
        self.finish_tag = 0.0
        self.arrival = arrival

    @property
    def flow(self):
        return (self.src, self.dst, self.tos)

    def __repr__(self):
        return f"P({self.id}, tos={self.tos}, {self.src}->{self.dst})"


def tx_ns(size_bytes: int, rate_bps: int) -> int:
    return (8 * size_bytes * 1_000_000_000 + rate_bps // 2) // rate_bps


def serve(qdisc, arrivals, rate_bps, on_dequeue=None):
    """Drive one non-preemptive output port.

    ``arrivals``: packets with an ``arrival`` time in ns, in time order.
    Returns ``(departures, drops)``; departures are ``(start, finish, packet)``.
    ``on_dequeue(packet, qdisc)`` is called right after each dequeue.
    """
    arrivals = sorted(arrivals, key=lambda p: p.arrival)
    n = len(arrivals)
    i = 0
    t = 0
    departures, drops = [], []
    while i < n or len(qdisc):
        if len(qdisc) == 0 and arrivals[i].arrival > t:
            t = arrivals[i].arrival
        while i < n and arrivals[i].arrival <= t:
            p = arrivals[i]
            if qdisc.enqueue(p, p.arrival) is EnqueueOutcome.DROPPED:
                drops.append(p)
            i += 1
        p = qdisc.dequeue(t)
        if p is None:
            continue
        if on_dequeue is not None:
            on_dequeue(p, qdisc)
        d = tx_ns(p.size_bytes, rate_bps)
        departures.append((t, t + d, p))
        t += d
    return departures, drops


def mm1_mean_sojourn(n_arrivals: int, lam: float, mu: float, seed: int = 7) -> float:
    """Mean time in system of a FIFO queue fed by Poisson arrivals, exp service.

    Rates are per second; runs on the event kernel with the FIFO discipline.
    """
    sim = Simulator(seed=seed)
    arr = sim.rng_stream("mm1-arrivals")
    svc = sim.rng_stream("mm1-service")
    q = FifoQdisc(None)
    state = {"busy": False, "count": 0, "done": 0, "total": 0}

    def start_service(now):
        p = q.dequeue(now)
        if p is None:
            state["busy"] = False
            return
        state["busy"] = True
        sim.at(now + max(1, seconds(svc.exponential(1.0 / mu))),
               EventKind.PORT_DEQUEUE_READY, payload=p)

    def on_arrival(ev):
        now = ev.fire_at
        state["count"] += 1
        q.enqueue(P(state["count"], arrival=now), now)
        if not state["busy"]:
            start_service(now)
        if state["count"] < n_arrivals:
            sim.at(now + max(1, seconds(arr.exponential(1.0 / lam))), EventKind.SOURCE_EMIT)

    def on_departure(ev):
        state["done"] += 1
        state["total"] += ev.fire_at - ev.payload.arrival
        start_service(ev.fire_at)

    sim.on(EventKind.SOURCE_EMIT, on_arrival)
    sim.on(EventKind.PORT_DEQUEUE_READY, on_departure)
    sim.at(0, EventKind.SOURCE_EMIT)
    horizon = 1
    while state["done"] < n_arrivals:
        horizon *= 2
        sim.run_until(seconds(horizon * n_arrivals / lam))
    return state["total"] / state["done"] / 1e9
