"""Simulated server-side model.

Stands in for the cloud multimodal assistant at desk scale: it watches the
per-patch QP of delivered frames, answers scripted questions (an answer is
correct when the critical region arrived legibly enough), reports a
confidence score, and feeds back the ground-truth region trajectory as its
prediction, delayed by the measured feedback latency range of 1.20-1.52 s.

Confidence is a sigmoid of the QP margin in the critical region, chosen so
that "confident" and "graded correct" agree exactly at the 0.5 level.

A live variant speaking to a real model API would implement the same
``emit_feedback``/``grade`` surface; only the simulated one ships.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .codec import EncodedFrame, FrameSpec, region_mean_qp
from .roi import BoundingBox, TrajectoryPrediction

FEEDBACK_DELAY_MIN_MS = 1200.0
FEEDBACK_DELAY_MAX_MS = 1520.0
PREDICTION_STEP_OFFSETS_MS = (0.0, 500.0, 1000.0, 1500.0)


@dataclass(frozen=True)
class QaSample:
    """A scripted question: answerable iff its region arrives below the
    legibility QP threshold around ask time."""

    id: str
    ask_at_ms: float
    critical_region: BoundingBox
    legibility_qp: float
    tags: tuple = ()
    object_id: Optional[str] = None

    def __post_init__(self):
        if not 0 <= self.legibility_qp <= 51:
            raise ValueError("legibility threshold must be a QP in [0, 51]")


@dataclass(frozen=True)
class FeedbackMessage:
    confidence: float
    predictions: Optional[TrajectoryPrediction]
    emitted_at_ms: float
    deliver_at_ms: float

    def __post_init__(self):
        lag = self.deliver_at_ms - self.emitted_at_ms
        if not FEEDBACK_DELAY_MIN_MS <= lag <= FEEDBACK_DELAY_MAX_MS:
            raise ValueError(f"feedback delay {lag:.1f} ms outside "
                             f"[{FEEDBACK_DELAY_MIN_MS:.0f}, {FEEDBACK_DELAY_MAX_MS:.0f}]")
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError("confidence must be within [0, 1]")


@dataclass
class OracleConfig:
    sigmoid_scale: float = 2.0      # QP units per confidence e-fold
    emit_period_ms: float = 1000.0
    seed: int = 0
    prediction_noise_px: float = 0.0
    # Legibility assumed for scene-level sufficiency when no question is
    # active; puts the saturation point near 968 kbps at default calibration.
    default_legibility_qp: float = 35.0

    def __post_init__(self):
        if self.sigmoid_scale <= 0:
            raise ValueError("sigmoid scale must be positive")


class Trajectory:
    """Piecewise-linear ground-truth track of one region."""

    def __init__(self, object_id: str, keyframes: Sequence[tuple]):
        # keyframes: (t_ms, x, y, w, h), strictly increasing times
        if not keyframes:
            raise ValueError("trajectory needs at least one keyframe")
        kf = sorted((tuple(map(float, k)) for k in keyframes), key=lambda k: k[0])
        times = [k[0] for k in kf]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("trajectory keyframe times must be strictly increasing")
        self.object_id = object_id
        self._times = times
        self._frames = kf

    def box_at(self, t_ms: float) -> BoundingBox:
        """Linearly interpolated box; clamped to the first/last keyframe."""
        if t_ms <= self._times[0]:
            k = self._frames[0]
            return BoundingBox(k[1], k[2], k[3], k[4], valid_at_ms=t_ms)
        if t_ms >= self._times[-1]:
            k = self._frames[-1]
            return BoundingBox(k[1], k[2], k[3], k[4], valid_at_ms=t_ms)
        hi = bisect_right(self._times, t_ms)
        lo = hi - 1
        t0, t1 = self._times[lo], self._times[hi]
        a, b = self._frames[lo], self._frames[hi]
        f = (t_ms - t0) / (t1 - t0)
        vals = [a[i] + f * (b[i] - a[i]) for i in range(1, 5)]
        return BoundingBox(*vals, valid_at_ms=t_ms)


@dataclass
class ScenarioScript:
    """QA samples plus the region trajectories they reference."""

    trajectories: dict = field(default_factory=dict)   # object_id -> Trajectory
    samples: list = field(default_factory=list)        # sorted by ask time

    def __post_init__(self):
        self.samples = sorted(self.samples, key=lambda s: s.ask_at_ms)

    def active_sample(self, now_ms: float) -> Optional[QaSample]:
        """The question currently being watched for: the next one to be
        asked, or the last one once all have fired."""
        for s in self.samples:
            if s.ask_at_ms >= now_ms:
                return s
        return self.samples[-1] if self.samples else None

    def region_at(self, object_id: str, t_ms: float) -> BoundingBox:
        return self.trajectories[object_id].box_at(t_ms)


def parse_script(text: str) -> ScenarioScript:
    """Parse the scenario script line format.

    ``traj <object_id> <t_ms> <x> <y> <w> <h>`` declares a trajectory
    keyframe; ``qa <id> <ask_ms> <object_id> <legibility_qp> [tags]``
    declares a question whose critical region is the object's box at ask
    time.  ``#`` starts a comment.
    """
    keyframes: dict[str, list] = {}
    raw_samples = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        kind = parts[0]
        if kind == "traj":
            if len(parts) != 7:
                raise ValueError(f"line {lineno}: traj expects object t x y w h")
            keyframes.setdefault(parts[1], []).append(tuple(float(v) for v in parts[2:7]))
        elif kind == "qa":
            if len(parts) not in (5, 6):
                raise ValueError(f"line {lineno}: qa expects id ask_ms object legibility [tags]")
            tags = tuple(parts[5].split(",")) if len(parts) == 6 else ()
            raw_samples.append((parts[1], float(parts[2]), parts[3], float(parts[4]), tags))
        else:
            raise ValueError(f"line {lineno}: unknown record {kind!r}")
    trajectories = {oid: Trajectory(oid, kfs) for oid, kfs in keyframes.items()}
    samples = []
    for sid, ask, oid, q_leg, tags in raw_samples:
        if oid not in trajectories:
            raise ValueError(f"qa sample {sid} references unknown object {oid}")
        region = trajectories[oid].box_at(ask)
        samples.append(QaSample(id=sid, ask_at_ms=ask, critical_region=region,
                                legibility_qp=q_leg, tags=tags, object_id=oid))
    return ScenarioScript(trajectories=trajectories, samples=samples)


def load_script(path) -> ScenarioScript:
    with open(path, encoding="utf-8") as fh:
        return parse_script(fh.read())


def dump_script(script: ScenarioScript) -> str:
    lines = []
    for oid in sorted(script.trajectories):
        for k in script.trajectories[oid]._frames:
            lines.append(f"traj {oid} {k[0]:g} {k[1]:g} {k[2]:g} {k[3]:g} {k[4]:g}")
    for s in script.samples:
        tag = f" {','.join(s.tags)}" if s.tags else ""
        lines.append(f"qa {s.id} {s.ask_at_ms:g} {s.object_id} {s.legibility_qp:g}{tag}")
    return "\n".join(lines) + "\n"


def grade(spec: FrameSpec, sample: QaSample, frame: Optional[EncodedFrame]) -> bool:
    """Correct iff the critical region's mean achieved QP is at or below the
    sample's legibility threshold.  A missing frame is always wrong."""
    if frame is None:
        return False
    return region_mean_qp(spec, frame, sample.critical_region) <= sample.legibility_qp


def confidence(cfg: OracleConfig, spec: FrameSpec, legibility_qp: float,
               region: Optional[BoundingBox], frame: Optional[EncodedFrame]) -> float:
    """Sufficiency score: sigmoid of the QP margin in the watched region.

    0.5 exactly at the legibility threshold, so grading and confidence agree.
    With no region, the whole frame is the region.
    """
    if frame is None:
        return 0.0
    if region is not None:
        q_bar = region_mean_qp(spec, frame, region)
    else:
        q_bar = frame.mean_qp
    z = (q_bar - legibility_qp) / cfg.sigmoid_scale
    z = min(max(z, -60.0), 60.0)
    return 1.0 / (1.0 + math.exp(z))


class SimulatedOracle:
    """Emission-side state: periodic confidence + trajectory feedback."""

    def __init__(self, cfg: OracleConfig, spec: FrameSpec, script: ScenarioScript):
        self.cfg = cfg
        self.spec = spec
        self.script = script
        self.rng = np.random.default_rng(cfg.seed)
        self.last_emit_ms: Optional[float] = None

    def confidence_at(self, now_ms: float, frame: Optional[EncodedFrame]) -> float:
        sample = self.script.active_sample(now_ms)
        if sample is not None and sample.object_id is not None:
            region = self.script.region_at(sample.object_id, now_ms)
            q_leg = sample.legibility_qp
        elif sample is not None:
            region, q_leg = sample.critical_region, sample.legibility_qp
        else:
            region, q_leg = None, self.cfg.default_legibility_qp
        return confidence(self.cfg, self.spec, q_leg, region, frame)

    def _predict(self, now_ms: float) -> Optional[TrajectoryPrediction]:
        sample = self.script.active_sample(now_ms)
        if sample is None or sample.object_id is None:
            return None
        traj = self.script.trajectories[sample.object_id]
        steps = []
        for off in PREDICTION_STEP_OFFSETS_MS:
            t = now_ms + off
            box = traj.box_at(t)
            if self.cfg.prediction_noise_px > 0:
                jx, jy = self.rng.normal(0.0, self.cfg.prediction_noise_px, size=2)
                box = BoundingBox(box.x + jx, box.y + jy, box.w, box.h, valid_at_ms=t)
            steps.append((t, (box.clamped(self.spec.width, self.spec.height),)))
        return TrajectoryPrediction(emitted_at_ms=now_ms, steps=tuple(steps))

    def emit_feedback(self, now_ms: float, frame: Optional[EncodedFrame]) -> FeedbackMessage:
        """One feedback message: confidence now, predictions for the next
        1.5 s, delivered after the sampled feedback latency."""
        if self.last_emit_ms is not None and now_ms - self.last_emit_ms < self.cfg.emit_period_ms:
            raise ValueError("emission period has not elapsed")
        self.last_emit_ms = now_ms
        delay = self.rng.uniform(FEEDBACK_DELAY_MIN_MS, FEEDBACK_DELAY_MAX_MS)
        return FeedbackMessage(
            confidence=self.confidence_at(now_ms, frame),
            predictions=self._predict(now_ms),
            emitted_at_ms=now_ms,
            deliver_at_ms=now_ms + delay,
        )

    def grade(self, sample: QaSample, frame: Optional[EncodedFrame]) -> bool:
        return grade(self.spec, sample, frame)
