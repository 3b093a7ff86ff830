"""
How many calls fit?
===================

Sweeps the number of voice clients on the 2 Mbit/s backbone under WFQ and
prints the voice drop rate for each point.
"""

from stepnet import load_scenario
from stepnet.scenario import run_scenario, sweep_points

scenario = load_scenario("sweep")
for key, value, point in sweep_points(scenario):
    if key != "voip.0.clients":
        continue
    v = run_scenario(point).voice()
    rate = v["dropped_buffer_full"] / v["sent_packets"]
    print(f"clients={value:>3s}  sent={v['sent_packets']:6d}  drop rate={rate:.4f}  "
          f"p95 delay={v['delay_p95_s'] * 1e3:.1f} ms")
