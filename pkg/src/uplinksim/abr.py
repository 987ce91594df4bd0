"""Response-capability-aware bitrate control.

The controller turns the latest model confidence score and the congestion
controller's bandwidth estimate into the next sending bitrate.  The
confidence gap against a threshold is raised to a sensitivity exponent to
form an update weight, and the new rate is always capped at the bandwidth
estimate.  A saturated model (confidence above threshold) makes the weight
negative, so the sender voluntarily backs away from the estimate and keeps
headroom for bandwidth drops.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional


@dataclass
class ControllerConfig:
    tau: float = 0.8                 # confidence threshold
    gamma: float = 2.0               # sensitivity exponent
    floor_kbps: float = 100.0
    ceiling_kbps: float = 4000.0
    stale_after_ms: float = 3000.0   # confidence older than this falls back to CC

    def __post_init__(self):
        if not 0 < self.tau <= 1:
            raise ValueError("tau must be in (0, 1]")
        if self.gamma < 1:
            raise ValueError("gamma must be >= 1")
        if self.floor_kbps >= self.ceiling_kbps:
            raise ValueError("floor must be below ceiling")


@dataclass(frozen=True)
class ConfidenceSample:
    """A delivered confidence score; ``observed_at_ms`` is when the model
    emitted it, ``delivered_at_ms`` when the sender received it."""

    c: float
    observed_at_ms: float
    delivered_at_ms: float

    def __post_init__(self):
        if not 0.0 <= self.c <= 1.0:
            raise ValueError("confidence must be within [0, 1]")
        if self.delivered_at_ms < self.observed_at_ms:
            raise ValueError("delivery cannot precede observation")


@dataclass(frozen=True)
class BitrateDecision:
    rate_kbps: float
    gap: float
    weight: float
    capped_by_cc: bool
    estimator_fault: bool = False


def confidence_gap(cfg: ControllerConfig, c: float) -> float:
    """Normalized distance of confidence ``c`` below the threshold."""
    if not 0.0 <= c <= 1.0:
        raise ValueError("confidence must be within [0, 1]")
    return (cfg.tau - c) / cfg.tau


def weight(cfg: ControllerConfig, delta: float) -> float:
    """Signed update weight: ``delta * |delta| ** (gamma - 1)``."""
    return delta * abs(delta) ** (cfg.gamma - 1.0)


def next_bitrate(cfg: ControllerConfig, r_t: float, b_hat: float,
                 latest: Optional[ConfidenceSample], now_ms: float) -> BitrateDecision:
    """Next sending bitrate given the current rate and bandwidth estimate.

    Without fresh confidence the controller simply follows the estimate.
    With it, the rate moves toward (confidence low) or away from (confidence
    high) the estimate, and is always capped at the estimate, then clamped
    to the configured range.  The floor wins if the estimate sits below it.
    """
    if b_hat <= 0:
        return BitrateDecision(cfg.floor_kbps, 0.0, 0.0, False, estimator_fault=True)
    effective_cap = min(cfg.ceiling_kbps, max(b_hat, cfg.floor_kbps))
    if latest is None or now_ms - latest.delivered_at_ms > cfg.stale_after_ms:
        return BitrateDecision(effective_cap, 0.0, 0.0, True)
    delta = confidence_gap(cfg, latest.c)
    w = weight(cfg, delta)
    raw = r_t + w * (b_hat - r_t)
    capped = min(b_hat, raw)
    rate = min(max(capped, cfg.floor_kbps), effective_cap)
    return BitrateDecision(rate, delta, w, b_hat < raw)


class ReCapController:
    """Holds the newest delivered confidence and applies the control law.

    ``on_feedback`` stores the sample (hold-last, no smoothing);
    ``decide`` runs the full update; ``cap_only`` is the once-per-second
    safety pass that only enforces the bandwidth-estimate cap between
    feedback arrivals.
    """

    def __init__(self, cfg: ControllerConfig = None):
        self.cfg = cfg or ControllerConfig()
        self.latest: Optional[ConfidenceSample] = None

    def on_feedback(self, sample: ConfidenceSample) -> None:
        if self.latest is None or sample.delivered_at_ms >= self.latest.delivered_at_ms:
            self.latest = sample

    def decide(self, r_t: float, b_hat: float, now_ms: float) -> BitrateDecision:
        return next_bitrate(self.cfg, r_t, b_hat, self.latest, now_ms)

    def cap_only(self, r_t: float, b_hat: float) -> float:
        if b_hat <= 0:
            return self.cfg.floor_kbps
        return max(min(r_t, b_hat, self.cfg.ceiling_kbps), self.cfg.floor_kbps)
