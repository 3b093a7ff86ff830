"""
Latency floor of an idle path
=============================

With nothing else on the network a voice packet sees only serialization and
propagation on each hop. The simulated minimum delay matches the hand sum.
"""

from stepnet import (build_step_topology, compute_routes, link_transmission_delay,
                     load_scenario, run_scenario)

scenario = load_scenario("uncongested")
topo = build_step_topology(scenario.step_spec)
routes = compute_routes(topo)

voice = scenario.voip[0]
size = voice.payload_bytes + voice.header_bytes
path = routes.route(voice.src, voice.dst)

total = 0
for link in path:
    tx = link_transmission_delay(link, size)
    print(f"{link.name:10s} tx={tx:7d} ns  prop={link.prop_delay:5d} ns")
    total += tx + link.prop_delay
print("closed form:", total, "ns")

r = run_scenario(scenario)
print("simulated minimum:", r.voice()["delay_min_ns"], "ns")
