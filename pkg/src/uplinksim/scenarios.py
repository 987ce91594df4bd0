"""Synthetic scenario builders used by experiments, demos and tests.

Traces mirror the measured uplink shapes driving the design: a sudden
capacity collapse (entering an elevator), and random switching between
industry bitrate levels at a configurable per-minute frequency.  QA scenes
place scripted questions with small critical regions so accuracy can be
graded at desk scale.
"""

from __future__ import annotations

import numpy as np

from .codec import FrameSpec
from .network import BandwidthTrace
from .oracle import QaSample, ScenarioScript, Trajectory

# Capacity levels (kbps) used by the fluctuation scenarios; the lowest one
# mirrors the measured 1.23 Mbps collapse floor.
INDUSTRY_LEVELS_KBPS = (1230.0, 2000.0, 3500.0, 5000.0)


def constant_trace(capacity_kbps: float) -> BandwidthTrace:
    return BandwidthTrace([(0.0, capacity_kbps)])


def step_drop_trace(high_kbps: float = 5000.0, low_kbps: float = 1230.0,
                    drop_at_ms: float = 5000.0) -> BandwidthTrace:
    """Capacity collapses from high to low at ``drop_at_ms`` and stays low."""
    return BandwidthTrace([(0.0, high_kbps), (drop_at_ms, low_kbps)])


def fluctuation_trace(switches_per_min: float, duration_ms: float,
                      seed: int, levels=INDUSTRY_LEVELS_KBPS) -> BandwidthTrace:
    """Capacity switching uniformly at random among ``levels``.

    Switch instants are evenly spaced at the requested frequency; each
    switch picks a level different from the current one (seeded).
    """
    if switches_per_min <= 0:
        raise ValueError("switch frequency must be positive")
    rng = np.random.default_rng(seed)
    interval = 60_000.0 / switches_per_min
    levels = list(levels)
    current = levels[int(rng.integers(len(levels)))]
    samples = [(0.0, current)]
    t = interval
    while t < duration_ms:
        options = [lv for lv in levels if lv != current]
        current = options[int(rng.integers(len(options)))]
        samples.append((t, current))
        t += interval
    return BandwidthTrace(samples)


def qa_grid_script(n_samples: int, frame: FrameSpec, seed: int,
                   first_ask_ms: float = 4000.0, ask_spacing_ms: float = 2000.0,
                   legibility_range: tuple[int, int] = (26, 44),
                   area_range: tuple[float, float] = (0.04, 0.15),
                   drift_px_s: float = 30.0) -> ScenarioScript:
    """A scene of ``n_samples`` questions, one drifting region each.

    Regions cover between 4% and 15% of the frame (well under the 30%
    bound the accuracy experiments assume); legibility thresholds spread
    across the QP range so accuracy responds smoothly to bitrate.
    """
    rng = np.random.default_rng(seed)
    trajectories = {}
    samples = []
    for k in range(n_samples):
        ask = first_ask_ms + k * ask_spacing_ms
        frac = rng.uniform(*area_range)
        aspect = rng.uniform(0.6, 1.6)
        area = frac * frame.width * frame.height
        w = min(float(np.sqrt(area * aspect)), frame.width * 0.8)
        h = min(area / w, frame.height * 0.8)
        x0 = rng.uniform(0, frame.width - w)
        y0 = rng.uniform(0, frame.height - h)
        angle = rng.uniform(0, 2 * np.pi)
        span_ms = ask_spacing_ms * 2
        dx = drift_px_s * np.cos(angle) * span_ms / 1000.0
        dy = drift_px_s * np.sin(angle) * span_ms / 1000.0
        x1 = min(max(x0 + dx, 0.0), frame.width - w)
        y1 = min(max(y0 + dy, 0.0), frame.height - h)
        oid = f"obj{k:04d}"
        t0 = max(ask - span_ms, 0.0)
        trajectories[oid] = Trajectory(oid, [(t0, x0, y0, w, h), (ask + span_ms, x1, y1, w, h)])
        q_leg = int(rng.integers(legibility_range[0], legibility_range[1] + 1))
        samples.append(QaSample(
            id=f"q{k:04d}", ask_at_ms=ask,
            critical_region=trajectories[oid].box_at(ask),
            legibility_qp=float(q_leg), tags=("text_rich",), object_id=oid))
    return ScenarioScript(trajectories=trajectories, samples=samples)
