"""Context-aware spatial bitrate allocation.

Fed-back (possibly predicted) bounding boxes are turned into a per-patch
importance map: importance is 1 inside a box and decays linearly with the
Euclidean distance to the nearest box, reaching 0 at half the frame
diagonal (scaled by ``mu``).  Importance then maps quadratically onto the
QP range, so patches far from any relevant region are compressed hard while
boxes keep maximum fidelity.

The allocation is only engaged under pressure: a trigger with hysteresis
enables it when the bitrate is low and the model reports low confidence,
and releases it only after the rate has stayed comfortably high for a
holding period.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np


class NoContextError(ValueError):
    """No region context available; callers fall back to uniform QP."""


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned box, top-left origin, pixel units."""

    x: float
    y: float
    w: float
    h: float
    valid_at_ms: float = 0.0

    def __post_init__(self):
        if self.w <= 0 or self.h <= 0:
            raise ValueError("box must have positive width and height")

    def clamped(self, width: int, height: int) -> "BoundingBox":
        x0 = min(max(self.x, 0.0), width - 1.0)
        y0 = min(max(self.y, 0.0), height - 1.0)
        x1 = min(self.x + self.w, float(width))
        y1 = min(self.y + self.h, float(height))
        return BoundingBox(x0, y0, max(x1 - x0, 1.0), max(y1 - y0, 1.0), self.valid_at_ms)

    def area(self) -> float:
        return self.w * self.h


@dataclass(frozen=True)
class TrajectoryPrediction:
    """Predicted region boxes for several future instants."""

    emitted_at_ms: float
    steps: tuple  # ordered (valid_at_ms, tuple[BoundingBox, ...])

    HORIZON_MS = 1500.0

    def __post_init__(self):
        times = [t for t, _ in self.steps]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("prediction step times must be strictly increasing")
        if times and times[-1] - self.emitted_at_ms > self.HORIZON_MS:
            raise ValueError("prediction horizon exceeds 1.5 s")


@dataclass
class ZecoConfig:
    mu: float = 0.5
    q_min: int = 20
    q_max: int = 51
    patch_px: int = 64
    trigger_rate_kbps: float = 500.0
    exit_factor: float = 1.2
    exit_hold_ms: float = 2000.0
    # Mirrors the controller's confidence threshold; the trigger fires only
    # while the model is struggling.
    confidence_threshold: float = 0.8

    def __post_init__(self):
        if not 0 <= self.q_min < self.q_max <= 51:
            raise ValueError("require 0 <= q_min < q_max <= 51")
        if self.mu <= 0:
            raise ValueError("mu must be positive")


@dataclass
class ImportanceMap:
    rho: np.ndarray  # shape (rows, cols) = (ceil(H/patch), ceil(W/patch))
    width: int
    height: int
    patch_px: int

    def __post_init__(self):
        if np.any(self.rho < 0) or np.any(self.rho > 1):
            raise ValueError("importance values must lie in [0, 1]")


@dataclass
class QpMap:
    qp: np.ndarray  # integer grid, same shape as the importance map
    width: int
    height: int
    patch_px: int


def grid_shape(width: int, height: int, patch_px: int) -> tuple[int, int]:
    """(rows, cols) of the patch grid covering a width x height frame."""
    return math.ceil(height / patch_px), math.ceil(width / patch_px)


def distance_to_boxes(point: tuple[float, float], boxes: Sequence[BoundingBox]) -> float:
    """Euclidean distance from ``point`` to the nearest box; 0 if inside any."""
    if not boxes:
        raise NoContextError("no region context")
    px, py = point
    best = math.inf
    for b in boxes:
        dx = max(b.x - px, 0.0, px - (b.x + b.w))
        dy = max(b.y - py, 0.0, py - (b.y + b.h))
        d = math.hypot(dx, dy)
        if d < best:
            best = d
            if best == 0.0:
                break
    return best


def patch_centers(width: int, height: int, patch_px: int) -> tuple[np.ndarray, np.ndarray]:
    """Center coordinates of every patch column (x) and row (y), clamped
    into the frame for edge patches."""
    rows, cols = grid_shape(width, height, patch_px)
    cx = np.minimum(np.arange(cols) * patch_px + patch_px / 2.0, width - 1.0)
    cy = np.minimum(np.arange(rows) * patch_px + patch_px / 2.0, height - 1.0)
    return cx, cy


def importance_map(cfg: ZecoConfig, width: int, height: int,
                   boxes: Sequence[BoundingBox]) -> ImportanceMap:
    """Per-patch importance: 1 inside a box, linear decay to 0 at
    ``mu * frame diagonal`` away."""
    if width <= 0 or height <= 0:
        raise ValueError("frame dimensions must be positive")
    if not boxes:
        raise NoContextError("no region context")
    cx, cy = patch_centers(width, height, cfg.patch_px)
    xs = cx[None, :]   # (1, cols)
    ys = cy[:, None]   # (rows, 1)
    dist = np.full((len(cy), len(cx)), np.inf)
    for b in boxes:
        dx = np.maximum(np.maximum(b.x - xs, xs - (b.x + b.w)), 0.0)
        dy = np.maximum(np.maximum(b.y - ys, ys - (b.y + b.h)), 0.0)
        dist = np.minimum(dist, np.hypot(dx, dy))
    reach = cfg.mu * math.hypot(width, height)
    rho = np.maximum(0.0, 1.0 - dist / reach)
    return ImportanceMap(rho=rho, width=width, height=height, patch_px=cfg.patch_px)


def qp_map(cfg: ZecoConfig, imp: ImportanceMap) -> QpMap:
    """Quadratic importance-to-QP mapping, rounded half-up to integers."""
    q = cfg.q_min + (cfg.q_max - cfg.q_min) * (1.0 - imp.rho) ** 2
    q = np.floor(q + 0.5).astype(int)
    q = np.clip(q, cfg.q_min, cfg.q_max)
    return QpMap(qp=q, width=imp.width, height=imp.height, patch_px=imp.patch_px)


EXPIRY_GRACE_MS = 500.0


def boxes_for_now(pred: TrajectoryPrediction, now_ms: float) -> list[BoundingBox]:
    """Boxes of the prediction step nearest to ``now_ms``.

    Returns an empty list once ``now_ms`` runs more than the grace period
    past the last predicted step (the prediction has expired).
    """
    if not pred.steps:
        raise ValueError("prediction has no steps")
    last_t = pred.steps[-1][0]
    if now_ms > last_t + EXPIRY_GRACE_MS:
        return []
    best_t, best_boxes = min(pred.steps, key=lambda s: (abs(s[0] - now_ms), s[0]))
    return list(best_boxes)


@dataclass(frozen=True)
class TriggerState:
    enabled: bool = False
    high_rate_since_ms: Optional[float] = None


def trigger(cfg: ZecoConfig, current_rate_kbps: float,
            latest_confidence: Optional[float], prev: TriggerState,
            now_ms: float) -> TriggerState:
    """Hysteresis gate deciding whether region-weighted QP is active.

    Engages when the rate is below the trigger level while confidence is
    below the threshold; disengages only after the rate has exceeded
    ``exit_factor`` times the trigger level continuously for the hold time.
    """
    if not prev.enabled:
        on = (current_rate_kbps < cfg.trigger_rate_kbps
              and latest_confidence is not None
              and latest_confidence < cfg.confidence_threshold)
        return TriggerState(enabled=on, high_rate_since_ms=None)
    exit_rate = cfg.exit_factor * cfg.trigger_rate_kbps
    if current_rate_kbps > exit_rate:
        since = prev.high_rate_since_ms if prev.high_rate_since_ms is not None else now_ms
        if now_ms - since >= cfg.exit_hold_ms:
            return TriggerState(enabled=False, high_rate_since_ms=None)
        return TriggerState(enabled=True, high_rate_since_ms=since)
    return TriggerState(enabled=True, high_rate_since_ms=None)


def write_qp_map_csv(path, frame_id: int, qpmap: QpMap, append: bool = False) -> None:
    """Export ``frame_id,patch_i,patch_j,qp`` rows (patch_i = column index)."""
    mode = "a" if append else "w"
    with open(path, mode, newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        if not append:
            writer.writerow(["frame_id", "patch_i", "patch_j", "qp"])
        rows, cols = qpmap.qp.shape
        for j in range(rows):
            for i in range(cols):
                writer.writerow([frame_id, i, j, int(qpmap.qp[j, i])])


def write_region_feedback_csv(path, predictions: Sequence[TrajectoryPrediction]) -> None:
    """Export replayable region feedback: ``emitted_ms,valid_ms,x,y,w,h``."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["emitted_ms", "valid_ms", "x", "y", "w", "h"])
        for pred in predictions:
            for valid_at, boxes in pred.steps:
                for b in boxes:
                    writer.writerow([f"{pred.emitted_at_ms:.3f}", f"{valid_at:.3f}",
                                     f"{b.x:.2f}", f"{b.y:.2f}", f"{b.w:.2f}", f"{b.h:.2f}"])


def read_region_feedback_csv(path) -> list[TrajectoryPrediction]:
    """Rebuild predictions from a region feedback file."""
    grouped: dict[float, dict[float, list[BoundingBox]]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            emitted = float(row["emitted_ms"])
            valid = float(row["valid_ms"])
            box = BoundingBox(float(row["x"]), float(row["y"]),
                              float(row["w"]), float(row["h"]), valid_at_ms=valid)
            grouped.setdefault(emitted, {}).setdefault(valid, []).append(box)
    preds = []
    for emitted in sorted(grouped):
        steps = tuple((t, tuple(grouped[emitted][t])) for t in sorted(grouped[emitted]))
        preds.append(TrajectoryPrediction(emitted_at_ms=emitted, steps=steps))
    return preds
