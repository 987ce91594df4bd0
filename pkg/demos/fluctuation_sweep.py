"""Latency vs. bandwidth-switching frequency.

Capacity switches at random among industry bitrate levels N times per
minute.  The more often it switches, the more often a CC-following sender
gets caught over-transmitting, and the larger the advantage of capping the
bitrate at the model's saturation point.  Ten-minute simulation per point.

Run:  python demos/fluctuation_sweep.py   (about a minute of compute)
"""

import os

from uplinksim import harness, scenarios

OUT = os.path.join(os.path.dirname(__file__), "out", "fluctuation")
os.makedirs(OUT, exist_ok=True)

DURATION_MS = 600_000.0
SEED = 0

all_results = []
print(f"{'switches/min':>12} {'webrtc ms':>10} {'recap ms':>9} {'gap ms':>7} "
      f"{'webrtc kbps':>12} {'recap kbps':>11}")
for freq in (1, 2, 3, 4):
    trace = scenarios.fluctuation_trace(freq, DURATION_MS,
                                        seed=harness.derive_seed(SEED, "trace", freq))
    point = {}
    for stack in ("webrtc", "webrtc+recap"):
        sc = harness.ScenarioConfig(trace=trace, duration_ms=DURATION_MS,
                                    seed=harness.derive_seed(SEED, "run", freq),
                                    stack=stack, cc="gcc")
        res = harness.run(sc)
        res.axis, res.axis_value = "fluctuation_per_min", float(freq)
        point[stack] = res
        all_results.append(res)
    w, r = point["webrtc"].summary, point["webrtc+recap"].summary
    print(f"{freq:>12} {w.mean_latency_ms:>10.1f} {r.mean_latency_ms:>9.1f} "
          f"{w.mean_latency_ms - r.mean_latency_ms:>7.1f} "
          f"{w.mean_bitrate_kbps:>12.0f} {r.mean_bitrate_kbps:>11.0f}")

harness.write_summary(os.path.join(OUT, "sweep_summary.csv"), all_results, with_axis=True)
for res in all_results:
    tag = f"{res.scenario.stack.replace('+', '_')}_f{res.axis_value:g}"
    harness.write_frame_rows(os.path.join(OUT, f"frames_{tag}.csv"), res)
print(f"\nsweep summary and per-run frame logs in {OUT}")
