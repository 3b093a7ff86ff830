import math

import pytest

from oracles import all_simple_paths, bfs_path, components
from stepnet.topology import (InvalidSpec, StepSpec, build_step_topology, compute_routes,
                              link_error_probability, link_transmission_delay)


def undirected(topo):
    adj = {n: [] for n in topo.routers + topo.hosts}
    for l in topo.links:
        adj[l.src].append(l.dst)
    return adj


def test_minimal_topology():
    t = build_step_topology(StepSpec(steps=1, hosts_per_step=1))
    assert len(t.routers) == 1 and len(t.hosts) == 1
    assert sum(l.backbone for l in t.links) == 0
    assert sum(not l.backbone for l in t.links) == 2


def test_four_steps_two_hosts():
    # Drawn graph: r0-r1-r2-r3 with two hosts hanging off each router:
    # 3 router pairs x 2 directions = 6, 8 hosts x 2 directions = 16.
    t = build_step_topology(StepSpec(steps=4, hosts_per_step=2))
    assert len(t.routers) == 4 and len(t.hosts) == 8
    assert sum(l.backbone for l in t.links) == 6
    assert sum(not l.backbone for l in t.links) == 16


@pytest.mark.parametrize("kwargs", [
    {"steps": 0}, {"hosts_per_step": 0}, {"backbone_rate": 0}, {"access_rate": -1},
    {"ber": 1.0}, {"ber": -0.1},
])
def test_invalid_specs(kwargs):
    with pytest.raises(InvalidSpec):
        build_step_topology(StepSpec(**kwargs))


@pytest.mark.parametrize("S", range(1, 17))
@pytest.mark.parametrize("H", range(1, 9))
def test_edge_count_closed_forms(S, H):
    t = build_step_topology(StepSpec(steps=S, hosts_per_step=H))
    assert sum(l.backbone for l in t.links) == 2 * (S - 1)
    assert sum(not l.backbone for l in t.links) == 2 * S * H
    assert len(t.hosts) == S * H


@pytest.mark.parametrize("S", range(2, 9))
def test_router_subgraph_is_a_path(S):
    t = build_step_topology(StepSpec(steps=S, hosts_per_step=2))
    degree = {r: 0 for r in t.routers}
    for l in t.links:
        if l.backbone:
            degree[l.src] += 1
    assert sorted(degree.values()) == [1, 1] + [2] * (S - 2)
    for l in t.links:
        if l.backbone:
            assert abs(t.step_of(l.src) - t.step_of(l.dst)) == 1


def test_every_host_has_one_bidirectional_access_link():
    t = build_step_topology(StepSpec(steps=3, hosts_per_step=3))
    for h in t.hosts:
        out = [l for l in t.links if l.src == h]
        back = [l for l in t.links if l.dst == h]
        assert len(out) == len(back) == 1
        assert out[0].dst == back[0].src == t.attachment[h]
        assert out[0].rate > 0 and out[0].prop_delay >= 0


@pytest.mark.parametrize("S", range(2, 8))
def test_removing_a_backbone_link_splits_routers_in_two(S):
    t = build_step_topology(StepSpec(steps=S, hosts_per_step=1))
    pairs = {(min(l.src, l.dst), max(l.src, l.dst)) for l in t.links if l.backbone}
    for cut in pairs:
        rest = [p for p in pairs if p != cut]
        assert components(t.routers, rest) == 2


def test_same_step_route():
    t = build_step_topology(StepSpec(steps=4, hosts_per_step=2))
    path = compute_routes(t).route("h0_0", "h0_1")
    assert [(l.src, l.dst) for l in path] == [("h0_0", "r0"), ("r0", "h0_1")]
    assert not any(l.backbone for l in path)


def test_cross_chain_route_length():
    t = build_step_topology(StepSpec(steps=4, hosts_per_step=2))
    path = compute_routes(t).route("h0_0", "h3_1")
    assert len(path) == 5
    assert sum(l.backbone for l in path) == 3


@pytest.mark.parametrize("S", range(1, 7))
@pytest.mark.parametrize("H", range(1, 4))
def test_routes_match_bfs_and_are_unique(S, H):
    t = build_step_topology(StepSpec(steps=S, hosts_per_step=H))
    routes = compute_routes(t)
    adj = undirected(t)
    for u, v in routes.pairs():
        path = routes.route(u, v)
        nodes = [path[0].src] + [l.dst for l in path]
        assert nodes == bfs_path(adj, u, v)
        assert len(path) == abs(t.step_of(u) - t.step_of(v)) + 2
        assert len(set(nodes)) == len(nodes)
        if S <= 4:
            assert len(all_simple_paths(adj, u, v)) == 1
        back = routes.route(v, u)
        assert [(l.dst, l.src) for l in reversed(path)] == [(l.src, l.dst) for l in back]


def test_next_link_follows_route():
    t = build_step_topology(StepSpec(steps=5, hosts_per_step=2))
    routes = compute_routes(t)
    for u, v in routes.pairs():
        node = u
        for expected in routes.route(u, v):
            assert routes.next_link(node, v) == expected
            node = expected.dst
        assert node == v


def test_transmission_delay():
    link = build_step_topology(StepSpec()).links[0]
    assert link.rate == 10_000_000
    assert link_transmission_delay(link, 1500) == 1_200_000   # 1500*8/1e7 s
    assert link_transmission_delay(link, 200) == 160_000      # 200*8/1e7 s


def test_error_probability():
    zero = build_step_topology(StepSpec(ber=0.0)).links[0]
    assert link_error_probability(zero, 1500) == 0.0
    link = build_step_topology(StepSpec(ber=1e-5)).links[0]
    p125 = link_error_probability(link, 125)
    p250 = link_error_probability(link, 250)
    assert p125 == pytest.approx(1 - (1 - 1e-5) ** 1000, rel=1e-12)
    assert p125 == pytest.approx(1 - math.exp(1000 * math.log(1 - 1e-5)), rel=1e-12)
    assert p125 == pytest.approx(0.009950, abs=5e-7)
    assert p250 == pytest.approx(0.019801, abs=5e-7)
    assert p250 > p125


def test_adjacency_dump_format():
    t = build_step_topology(StepSpec(steps=2, hosts_per_step=1, ber=1e-6))
    lines = t.dump().splitlines()
    assert len(lines) == len(t.links) == 2 + 4
    assert lines[0] == "r0 r1 10000000 5000 1e-06"
    for line in lines:
        src, dst, rate, delay, ber = line.split(" ")
        assert int(rate) > 0 and int(delay) >= 0 and float(ber) == 1e-6
