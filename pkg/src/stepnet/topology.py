"""Step topology: a chain of routers, one per step, with hosts star-attached."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .kernel import NS_PER_S, seconds


class InvalidSpec(ValueError):
    pass


MBPS = 1_000_000


@dataclass(frozen=True)
class StepSpec:
    steps: int = 4
    hosts_per_step: int = 2
    backbone_rate: int = 10 * MBPS
    access_rate: int = 10 * MBPS
    backbone_prop_delay: float = 5e-6
    access_prop_delay: float = 5e-6
    ber: float = 0.0

    def validate(self) -> None:
        if self.steps < 1:
            raise InvalidSpec(f"steps must be >= 1, got {self.steps}")
        if self.hosts_per_step < 1:
            raise InvalidSpec(f"hosts_per_step must be >= 1, got {self.hosts_per_step}")
        if self.backbone_rate <= 0 or self.access_rate <= 0:
            raise InvalidSpec("link rates must be positive")
        if self.backbone_prop_delay < 0 or self.access_prop_delay < 0:
            raise InvalidSpec("propagation delays must be nonnegative")
        if not 0 <= self.ber < 1:
            raise InvalidSpec(f"ber must lie in [0, 1), got {self.ber}")


def router_name(step: int) -> str:
    return f"r{step}"


def host_name(step: int, index: int) -> str:
    return f"h{step}_{index}"


@dataclass(frozen=True)
class Link:
    index: int
    src: str
    dst: str
    rate: int
    prop_delay: int  # ns
    ber: float
    backbone: bool

    @property
    def name(self) -> str:
        return f"{self.src}>{self.dst}"


@dataclass
class Topology:
    routers: list[str]
    hosts: list[str]
    links: list[Link]
    adjacency: dict[str, list[Link]] = field(default_factory=dict)
    attachment: dict[str, str] = field(default_factory=dict)  # host -> router

    def is_router(self, node: str) -> bool:
        return node.startswith("r")

    def link(self, src: str, dst: str) -> Link:
        for link in self.adjacency[src]:
            if link.dst == dst:
                return link
        raise KeyError(f"no link {src}>{dst}")

    def step_of(self, node: str) -> int:
        if self.is_router(node):
            return int(node[1:])
        return int(node[1:].split("_")[0])

    def dump(self) -> str:
        """One line per directed link: ``src dst rate_bps prop_delay_ns ber``."""
        return "".join(f"{l.src} {l.dst} {l.rate} {l.prop_delay} {l.ber!r}\n"
                       for l in self.links)


def build_step_topology(spec: StepSpec) -> Topology:
    spec.validate()
    routers = [router_name(i) for i in range(spec.steps)]
    hosts: list[str] = []
    links: list[Link] = []

    def add(src: str, dst: str, rate: int, delay: float, backbone: bool) -> None:
        links.append(Link(len(links), src, dst, int(rate), seconds(delay), spec.ber, backbone))

    for i in range(spec.steps - 1):
        add(routers[i], routers[i + 1], spec.backbone_rate, spec.backbone_prop_delay, True)
        add(routers[i + 1], routers[i], spec.backbone_rate, spec.backbone_prop_delay, True)
    attachment = {}
    for i in range(spec.steps):
        for j in range(spec.hosts_per_step):
            h = host_name(i, j)
            hosts.append(h)
            attachment[h] = routers[i]
            add(h, routers[i], spec.access_rate, spec.access_prop_delay, False)
            add(routers[i], h, spec.access_rate, spec.access_prop_delay, False)

    adjacency: dict[str, list[Link]] = {n: [] for n in routers + hosts}
    for link in links:
        adjacency[link.src].append(link)
    return Topology(routers, hosts, links, adjacency, attachment)


class RoutingTable:
    """Static host-to-host paths over the router chain."""

    def __init__(self, topology: Topology):
        self.topology = topology
        self._paths: dict[tuple[str, str], list[Link]] = {}
        self._next: dict[tuple[str, str], Link] = {}

    def route(self, src: str, dst: str) -> list[Link]:
        key = (src, dst)
        path = self._paths.get(key)
        if path is None:
            path = self._paths[key] = _chain_path(self.topology, src, dst)
        return path

    def next_link(self, node: str, dst: str) -> Link:
        """Egress link at ``node`` toward host ``dst``."""
        key = (node, dst)
        link = self._next.get(key)
        if link is None:
            topo = self.topology
            if not topo.is_router(node):
                link = topo.adjacency[node][0]
            else:
                here = topo.step_of(node)
                target = topo.step_of(dst)
                if here == target:
                    link = topo.link(node, dst)
                else:
                    step = here + (1 if target > here else -1)
                    link = topo.link(node, router_name(step))
            self._next[key] = link
        return link

    def pairs(self):
        hosts = self.topology.hosts
        for u in hosts:
            for v in hosts:
                if u != v:
                    yield u, v


def _chain_path(topo: Topology, src: str, dst: str) -> list[Link]:
    if src == dst:
        return []
    ra, rb = topo.attachment[src], topo.attachment[dst]
    path = [topo.link(src, ra)]
    i, j = topo.step_of(ra), topo.step_of(rb)
    step = 1 if j > i else -1
    while i != j:
        path.append(topo.link(router_name(i), router_name(i + step)))
        i += step
    path.append(topo.link(rb, dst))
    return path


def compute_routes(topology: Topology) -> RoutingTable:
    return RoutingTable(topology)


def _size(packet) -> int:
    return packet if isinstance(packet, int) else packet.size_bytes


def link_transmission_delay(link: Link, packet) -> int:
    """Serialization time in ns, rounded to the nearest tick.

    ``packet`` may be a packet object or a plain byte count.
    """
    bits = 8 * _size(packet)
    return (bits * NS_PER_S + link.rate // 2) // link.rate


def link_error_probability(link: Link, packet) -> float:
    """Probability that at least one of the packet's bits is flipped."""
    if link.ber == 0.0:
        return 0.0
    return -math.expm1(8 * _size(packet) * math.log1p(-link.ber))
