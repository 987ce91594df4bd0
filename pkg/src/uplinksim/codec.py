"""Parametric stand-in for a real encoder.

Rate follows the standard quantizer-step heuristic: bits halve for every
six QP steps.  A frame's byte budget comes straight from the target bitrate
and frame rate; the budget is split uniformly across patches (context-blind
encoding) or proportionally to a QP map (region-weighted encoding).  In the
weighted case the map is realized at the given budget by shifting every
patch QP by one common offset, which preserves the map's relative shape at
any budget.

Calibration: a 1280x720 @ 30 fps frame at QP 32 consumes ~1000 kbps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .roi import BoundingBox, QpMap, grid_shape

REF_QP = 32.0
# Bits per pixel at the reference QP (the calibration constant above).
REF_BITS_PER_PIXEL = 1000_000.0 / (30.0 * 1280.0 * 720.0)

QP_MIN = 0
QP_MAX = 51

MIN_PATCH_BITS = 8.0  # one byte


@dataclass(frozen=True)
class FrameSpec:
    width: int = 1280
    height: int = 720
    fps: float = 30.0
    patch_px: int = 64

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0 or self.fps <= 0 or self.patch_px <= 0:
            raise ValueError("frame spec values must be positive")

    @property
    def n_patches(self) -> int:
        rows, cols = grid_shape(self.width, self.height, self.patch_px)
        return rows * cols

    @property
    def grid(self) -> tuple[int, int]:
        return grid_shape(self.width, self.height, self.patch_px)

    def ref_patch_bits(self) -> float:
        """Reference bits per patch at QP 32, normalized to the frame area."""
        return REF_BITS_PER_PIXEL * self.width * self.height / self.n_patches


@dataclass
class EncodedFrame:
    frame_id: int
    total_bytes: int
    qp: np.ndarray        # integer per-patch achieved QP, shape (rows, cols)
    bits: np.ndarray      # float per-patch bits, sums to total_bytes * 8
    budget_floored: bool = False

    @property
    def mean_qp(self) -> float:
        return float(self.qp.mean())


def bits_for_qp(qp: float, b_ref: float, qp_ref: float) -> float:
    """Rate model: bits halve every six QP steps above the reference."""
    return b_ref * 2.0 ** (-(qp - qp_ref) / 6.0)


def qp_for_bits(bits: float, b_ref: float, qp_ref: float) -> float:
    """Inverse of :func:`bits_for_qp` (real-valued QP)."""
    return qp_ref - 6.0 * math.log2(bits / b_ref)


def frame_budget_bytes(target_kbps: float, fps: float) -> int:
    """Byte budget of one frame at the target bitrate."""
    return int(target_kbps * 1000.0 / (8.0 * fps))


def _round_qp(values: np.ndarray) -> np.ndarray:
    return np.clip(np.floor(values + 0.5).astype(int), QP_MIN, QP_MAX)


def encode_uniform(spec: FrameSpec, target_kbps: float, frame_id: int = 0) -> EncodedFrame:
    """Context-blind encode: even split, single solved QP."""
    if target_kbps <= 0:
        raise ValueError("target bitrate must be positive")
    n = spec.n_patches
    if n == 0:
        raise ValueError("frame has no patches")
    rows, cols = spec.grid
    budget_bits = frame_budget_bytes(target_kbps, spec.fps) * 8.0
    floored = False
    if budget_bits < MIN_PATCH_BITS * n:
        budget_bits = MIN_PATCH_BITS * n
        floored = True
    patch_bits = budget_bits / n
    q = qp_for_bits(patch_bits, spec.ref_patch_bits(), REF_QP)
    qp_grid = np.full((rows, cols), 0.0) + q
    return EncodedFrame(
        frame_id=frame_id,
        total_bytes=int(budget_bits / 8.0),
        qp=_round_qp(qp_grid),
        bits=np.full((rows, cols), patch_bits),
        budget_floored=floored,
    )


def budget_qp_offset(spec: FrameSpec, qp_values: np.ndarray, budget_bits: float) -> float:
    """Common QP shift that makes the map's total bits meet the budget.

    Positive when the map as drawn would overshoot the budget (every patch
    is compressed harder), negative when budget is ample.
    """
    planned = bits_for_qp(qp_values.astype(float), spec.ref_patch_bits(), REF_QP).sum()
    return 6.0 * math.log2(planned / budget_bits)


def encode_with_map(spec: FrameSpec, target_kbps: float, qpmap: QpMap,
                    frame_id: int = 0) -> EncodedFrame:
    """Region-weighted encode: bits proportional to the QP map's rate model.

    The same total budget as :func:`encode_uniform` is distributed across
    patches proportionally to ``2^(-(Q-ref)/6)``, and the achieved QPs are
    the map shifted by the common budget offset.
    """
    if target_kbps <= 0:
        raise ValueError("target bitrate must be positive")
    rows, cols = spec.grid
    if qpmap.qp.shape != (rows, cols):
        raise ValueError(f"QP map shape {qpmap.qp.shape} does not match frame grid {(rows, cols)}")
    n = spec.n_patches
    budget_bits = frame_budget_bytes(target_kbps, spec.fps) * 8.0
    floored = False
    if budget_bits < MIN_PATCH_BITS * n:
        budget_bits = MIN_PATCH_BITS * n
        floored = True
    weights = 2.0 ** (-(qpmap.qp.astype(float) - REF_QP) / 6.0)
    bits = budget_bits * weights / weights.sum()
    delta = budget_qp_offset(spec, qpmap.qp, budget_bits)
    achieved = qpmap.qp.astype(float) + delta
    return EncodedFrame(
        frame_id=frame_id,
        total_bytes=int(budget_bits / 8.0),
        qp=_round_qp(achieved),
        bits=bits,
        budget_floored=floored,
    )


def region_patch_slice(spec: FrameSpec, box: BoundingBox) -> tuple[slice, slice]:
    """(row, col) slices of the patches overlapping ``box`` (positive area)."""
    rows, cols = spec.grid
    p = spec.patch_px
    i0 = max(int(math.floor(box.x / p)), 0)
    i1 = min(int(math.ceil((box.x + box.w) / p)), cols)
    j0 = max(int(math.floor(box.y / p)), 0)
    j1 = min(int(math.ceil((box.y + box.h) / p)), rows)
    if i1 <= i0 or j1 <= j0:
        raise ValueError("box does not overlap the frame grid")
    return slice(j0, j1), slice(i0, i1)


def region_mean_qp(spec: FrameSpec, frame: EncodedFrame, box: BoundingBox) -> float:
    """Mean achieved QP over the patches intersecting ``box``."""
    rows_slice, cols_slice = region_patch_slice(spec, box)
    return float(frame.qp[rows_slice, cols_slice].mean())
