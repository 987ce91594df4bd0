"""The elevator problem: what a sudden uplink collapse does to frame latency.

A 5 Mbps link collapses to 1.23 Mbps mid-session.  The classic stack rides
the congestion controller up to its ceiling, so the collapse lands on a full
pipe: the queue overflows, packets retransmit, and frame latency spikes past
a second.  The confidence-capped stack has already stopped near the point
where the model answers comfortably (~968 kbps at these settings), so the
collapse passes underneath it.

Run:  python demos/step_drop.py
"""

import os

from uplinksim import harness, scenarios

OUT = os.path.join(os.path.dirname(__file__), "out", "step_drop")

trace = scenarios.step_drop_trace(high_kbps=5000.0, low_kbps=1230.0, drop_at_ms=15_000.0)

results = {}
for stack in ("webrtc", "artic"):
    sc = harness.ScenarioConfig(trace=trace, duration_ms=30_000.0, seed=2,
                                stack=stack, cc="gcc")
    results[stack] = harness.run(sc)
    harness.write_run_outputs(os.path.join(OUT, stack), results[stack])

print(f"{'stack':<8} {'peak ms':>9} {'mean ms':>9} {'p95 ms':>8} {'sent kbps':>10} {'drops':>6}")
for stack, res in results.items():
    peak = max(r.latency_ms for r in res.rows if r.latency_ms is not None)
    s = res.summary
    print(f"{stack:<8} {peak:>9.0f} {s.mean_latency_ms:>9.1f} {s.p95_latency_ms:>8.1f} "
          f"{s.mean_bitrate_kbps:>10.0f} {res.dropped_packets:>6}")

# The capped stack's bitrate before the drop tells the story: it sits below
# the post-collapse capacity, so there is nothing to drain.
pre_drop = [r.bitrate_kbps for r in results["artic"].rows
            if 12_000.0 <= r.encode_ms < 15_000.0]
print(f"\nartic bitrate just before the collapse: {max(pre_drop):.0f} kbps "
      f"(post-collapse capacity: 1230 kbps)")
print(f"per-frame logs in {OUT}/<stack>/frames.csv")
