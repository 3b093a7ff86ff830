"""
Weighted fair queueing, packet by packet
========================================

Two backlogged flows share a 1 Gbit/s port with weights 2 and 1. Printing the
finish tags shows how the heavier flow gets two packets for every one of the
lighter flow.
"""

from stepnet import Packet, WfqQdisc

q = WfqQdisc(rate_bps=10**9, weights={6: 2, 0: 1}, capacity=None)
for i in range(6):
    q.enqueue(Packet(i, "h0_0", "h1_0", 6, 125, 0), 0)
    q.enqueue(Packet(100 + i, "h0_1", "h1_1", 0, 125, 0), 0)

t = 0
while len(q):
    p = q.dequeue(t)
    print(f"t={t:5d} ns  tos={p.tos}  finish tag={p.finish_tag:7.1f}")
    t += 1000  # 125 bytes at 1 Gbit/s

# virtual time runs faster when fewer flows are backlogged
q.enqueue(Packet(999, "h0_1", "h1_1", 0, 125, t), t)
print("V just after a lone arrival:", q.advance(t))
print("V half way through it:     ", q.advance(t + 500))
