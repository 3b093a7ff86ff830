"""
Voice under FIFO, PQ and WFQ
============================

Runs the bundled overload scenario once per discipline and plots the voice
packets sent, received and dropped in each one-second bucket.
"""

from stepnet import QdiscKind, load_scenario, run_scenario
from stepnet.scenario import evaluate
from stepnet.kernel import seconds

scenario = load_scenario("overload", {"run.seed": "1"})
results = {k.value: run_scenario(scenario.with_qdisc(k)) for k in QdiscKind}

for kind, r in results.items():
    v = r.voice()
    print(f"{kind:5s} sent={v['sent_packets']} received={v['received_packets']} "
          f"dropped={v['dropped_buffer_full']} mean delay={v['delay_mean_s'] * 1e3:.1f} ms")

report = evaluate(results)
for verdict in report.verdicts:
    print(verdict.name, "PASS" if verdict.passed else "FAIL")

# per-bucket series, one line per discipline
series = {k: r.metrics.bucket_series(seconds(scenario.duration)) for k, r in results.items()}

try:
    import matplotlib.pyplot as plt
except ImportError:
    plt = None

if plt is not None:
    fig, axes = plt.subplots(1, 3, figsize=(13, 3.5), sharex=True)
    for ax, metric in zip(axes, ["sent_packets", "received_packets", "dropped_packets"]):
        for kind, table in series.items():
            ax.plot(table[(metric, 6)], label=kind)
        ax.set_title(metric.replace("_", " "))
        ax.set_xlabel("time (s)")
    axes[0].set_ylabel("voice packets per bucket")
    axes[0].legend()
    fig.tight_layout()
    plt.show()
