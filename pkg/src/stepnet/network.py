"""Wire a topology, its egress ports, traffic sources and sinks onto the kernel."""

from __future__ import annotations

import itertools
from typing import Optional

from .kernel import Event, EventKind, Simulator, keyed_uniform
from .metrics import BIT_ERROR, BUFFER_FULL, MetricsStore
from .qdisc import FifoQdisc, Qdisc, QdiscConfig, EnqueueOutcome, make_qdisc
from .topology import (Link, RoutingTable, Topology, link_error_probability,
                       link_transmission_delay)
from .traffic import FtpSource, FtpSourceSpec, Sink, VoipSource, VoipSourceSpec


class Port:
    __slots__ = ("link", "qdisc", "in_service")

    def __init__(self, link: Link, qdisc: Qdisc):
        self.link = link
        self.qdisc = qdisc
        self.in_service = None


class Network:
    """Store-and-forward packet network.

    Router egress ports run the configured discipline; host NICs are
    unbounded FIFOs so that the router queues are the only place packets
    are buffer-dropped.
    """

    def __init__(self, sim: Simulator, topology: Topology, routes: RoutingTable,
                 qdisc: QdiscConfig, metrics: MetricsStore,
                 drop_log: Optional[list] = None):
        self.sim = sim
        self.topology = topology
        self.routes = routes
        self.metrics = metrics
        self.drop_log = drop_log
        self.ids = itertools.count()
        self.ports: list[Port] = []
        for link in topology.links:
            if topology.is_router(link.src):
                q = make_qdisc(qdisc, link.rate, self._drop_logger(link))
            else:
                q = FifoQdisc(None)
            self.ports.append(Port(link, q))
        self.sinks = {h: Sink(h) for h in topology.hosts}
        self.sources: list = []
        self.on_wire: dict[int, int] = {}
        sim.on(EventKind.SOURCE_EMIT, self._on_emit)
        sim.on(EventKind.PORT_DEQUEUE_READY, self._on_tx_done)
        sim.on(EventKind.LINK_DELIVER, self._on_deliver)

    def _drop_logger(self, link: Link):
        if self.drop_log is None:
            return None
        log = self.drop_log

        def record(now, packet, reason):
            src, dst, tos = packet.flow
            log.append((now, link.name, packet.tos, f"{src}-{dst}-{tos}", reason))
        return record

    # sources -------------------------------------------------------------

    def _check_host(self, host: str) -> None:
        if host not in self.sinks:
            raise ValueError(f"unknown host {host!r}")

    def add_voip(self, spec: VoipSourceSpec) -> VoipSource:
        self._check_host(spec.src)
        self._check_host(spec.dst)
        src = VoipSource(spec, self.ids)
        self._add_source(src)
        return src

    def add_ftp(self, spec: FtpSourceSpec) -> FtpSource:
        self._check_host(spec.src)
        self._check_host(spec.dst)
        index = len(self.sources)
        rng = self.sim.rng_stream(f"ftp-arrivals/{index}")
        src = FtpSource(spec, self.ids, rng)
        self._add_source(src)
        return src

    def _add_source(self, source) -> None:
        index = len(self.sources)
        self.sources.append(source)
        first = source.first_emit()
        if first is not None:
            self.sim.at(first, EventKind.SOURCE_EMIT, index)

    def _on_emit(self, event: Event) -> None:
        source = self.sources[event.target]
        now = event.fire_at
        packets, nxt = source.emit(now)
        if not isinstance(packets, list):
            packets = [packets]
        for pkt in packets:
            self.metrics.on_sent(pkt, now)
            self._arrive(pkt.src, pkt, now)
        if nxt is not None:
            self.sim.at(nxt, EventKind.SOURCE_EMIT, event.target)

    # forwarding ----------------------------------------------------------

    def _arrive(self, node: str, pkt, now: int) -> None:
        if pkt.corrupted:
            self.metrics.on_drop(pkt, now, BIT_ERROR)
            return
        if node == pkt.dst:
            self.metrics.on_received(self.sinks[node].receive(pkt, now))
            return
        port = self.ports[self.routes.next_link(node, pkt.dst).index]
        if port.qdisc.enqueue(pkt, now) is EnqueueOutcome.DROPPED:
            self.metrics.on_drop(pkt, now, BUFFER_FULL)
        elif port.in_service is None:
            self._start(port, now)

    def _start(self, port: Port, now: int) -> None:
        pkt = port.qdisc.dequeue(now)
        port.in_service = pkt
        if pkt is not None:
            self.sim.at(now + link_transmission_delay(port.link, pkt.size_bytes),
                        EventKind.PORT_DEQUEUE_READY, port.link.index, pkt)

    def _on_tx_done(self, event: Event) -> None:
        port = self.ports[event.target]
        pkt = event.payload
        link = port.link
        if link.ber > 0.0:
            p = link_error_probability(link, pkt.size_bytes)
            if keyed_uniform(self.sim.seed, link.index, pkt.id) < p:
                pkt.corrupted = True
        self.on_wire[pkt.tos] = self.on_wire.get(pkt.tos, 0) + 1
        self.sim.at(event.fire_at + link.prop_delay, EventKind.LINK_DELIVER, link.index, pkt)
        self._start(port, event.fire_at)

    def _on_deliver(self, event: Event) -> None:
        pkt = event.payload
        self.on_wire[pkt.tos] -= 1
        self._arrive(self.ports[event.target].link.dst, pkt, event.fire_at)

    # accounting ----------------------------------------------------------

    def in_flight(self) -> dict[int, int]:
        """Packets physically inside the network right now, per ToS."""
        counts = {t: n for t, n in self.on_wire.items() if n}
        for port in self.ports:
            held = port.qdisc.packets()
            if port.in_service is not None:
                held.append(port.in_service)
            for pkt in held:
                counts[pkt.tos] = counts.get(pkt.tos, 0) + 1
        return counts

    def port_stats(self) -> list[dict]:
        return [{"port": p.link.name, "offered": p.qdisc.offered, "accepted": p.qdisc.accepted,
                 "dropped": p.qdisc.dropped, "dequeued": p.qdisc.dequeued,
                 "queued": len(p.qdisc)} for p in self.ports]
