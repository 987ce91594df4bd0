"""Bandwidth estimation feeding the bitrate controller.

Two estimators sit behind the same two-call interface (``on_ack`` for every
delivery record, ``estimate`` to read the current bandwidth estimate):

* :class:`GccEstimator` - delay-gradient style.  Packets are grouped into
  send bursts, the one-way delay trend across groups drives an
  overuse/underuse detector, and the rate moves multiplicatively
  (0.85x receive rate on overuse, 1.08x growth otherwise, capped at 1.5x
  the measured receive rate).
* :class:`BbrEstimator` - delivery-rate style.  Instantaneous per-packet
  delivery-rate samples feed a 10 s windowed max filter; a windowed min of
  the delay proxy is kept alongside.

All state changes happen in ``on_ack``, so the estimate is a pure function
of the record stream; how often ``estimate`` is polled cannot change it.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from .network import DeliveryRecord

INITIAL_ESTIMATE_KBPS = 300.0
FLOOR_KBPS = 50.0

# GCC-style constants (published convention values).
DECREASE_FACTOR = 0.85
INCREASE_FACTOR = 1.08
RECEIVE_CAP_FACTOR = 1.5
TREND_WINDOW_GROUPS = 20
OVERUSE_SLOPE_MS_PER_GROUP = 1.0
OVERUSE_CONSECUTIVE = 2
RATE_UPDATE_INTERVAL_MS = 200.0
RECEIVE_WINDOW_MS = 1000.0
BURST_INTERVAL_MS = 5.0
# Loss-based companion controller: cut the estimate while the loss ratio
# (inferred from packet-id gaps) stays above the threshold.
LOSS_DECREASE_THRESHOLD = 0.10
LOSS_CUT_INTERVAL_MS = 300.0
LOSS_WINDOW_MS = 1000.0
# Growth is suspended while a standing queue keeps delay above the window
# minimum by more than this margin.
STANDING_DELAY_MARGIN_MS = 30.0

# BBR-style filter horizon.
BBR_WINDOW_MS = 10_000.0


@dataclass(frozen=True)
class CcEstimate:
    bandwidth_kbps: float
    at_time_ms: float


class _WindowedFilter:
    """Sliding-window max (or min) over (time, value) samples, O(1) amortized."""

    def __init__(self, window_ms: float, mode: str = "max"):
        self.window_ms = window_ms
        self._sign = 1.0 if mode == "max" else -1.0
        self._entries: deque[tuple[float, float]] = deque()

    def push(self, t_ms: float, value: float) -> None:
        v = self._sign * value
        while self._entries and self._entries[-1][1] <= v:
            self._entries.pop()
        self._entries.append((t_ms, v))
        cutoff = t_ms - self.window_ms
        while self._entries and self._entries[0][0] < cutoff:
            self._entries.popleft()

    def current(self):
        if not self._entries:
            return None
        return self._sign * self._entries[0][1]

    def __len__(self) -> int:
        return len(self._entries)


def _ls_slope(values) -> float:
    """Least-squares slope of values against their index."""
    n = len(values)
    if n < 2:
        return 0.0
    mean_x = (n - 1) / 2.0
    mean_y = sum(values) / n
    num = sum((i - mean_x) * (y - mean_y) for i, y in enumerate(values))
    den = sum((i - mean_x) ** 2 for i in range(n))
    return num / den


class _ReceiveWindow:
    """Delivered-byte rate over a trailing window.

    The rate spans the first to the last arrival inside the window (the
    first packet's own bytes are excluded, they were delivered before the
    span), so a partially filled window still measures correctly.
    """

    def __init__(self, window_ms: float = RECEIVE_WINDOW_MS):
        self.window_ms = window_ms
        self._entries: deque[tuple[float, int]] = deque()
        self._bytes = 0

    def push(self, arrive_ms: float, size_bytes: int) -> None:
        self._entries.append((arrive_ms, size_bytes))
        self._bytes += size_bytes
        cutoff = arrive_ms - self.window_ms
        while self._entries and self._entries[0][0] <= cutoff:
            _, old = self._entries.popleft()
            self._bytes -= old

    def rate_kbps(self) -> float:
        if len(self._entries) < 2:
            return 0.0
        t0, b0 = self._entries[0]
        span = self._entries[-1][0] - t0
        if span <= 0:
            return 0.0
        return (self._bytes - b0) * 8.0 / span


class GccEstimator:
    """Delay-gradient bandwidth estimator (GCC-like simplification)."""

    def __init__(self, floor_kbps: float = FLOOR_KBPS,
                 initial_kbps: float = INITIAL_ESTIMATE_KBPS):
        self.floor_kbps = floor_kbps
        self._estimate_kbps = initial_kbps
        self.mode = "hold"
        self.trend = 0.0
        self.out_of_order = 0
        self._last_arrive = None
        # Current send burst: packets whose enqueue times fall within
        # BURST_INTERVAL_MS of the burst's first packet form one group.
        self._group_first_send = None
        self._group_send_end = 0.0
        self._group_recv_end = 0.0
        self._delays: deque[float] = deque(maxlen=TREND_WINDOW_GROUPS)
        self._overuse_runs = 0
        self._last_change_ms = -1e12
        self._last_loss_cut_ms = -1e12
        self._recv = _ReceiveWindow()
        self._next_packet_id = None
        self._loss_window: deque[tuple[float, int, int]] = deque()  # (arrive, lost, got)

    def on_ack(self, record: DeliveryRecord) -> None:
        if self._last_arrive is not None and record.arrive_ms < self._last_arrive:
            self.out_of_order += 1
            return
        self._last_arrive = record.arrive_ms
        self._recv.push(record.arrive_ms, record.size_bytes)
        self._push_loss(record)
        if (self._group_first_send is None
                or record.enqueue_ms > self._group_first_send + BURST_INTERVAL_MS):
            if self._group_first_send is not None:
                self._complete_group()
            self._group_first_send = record.enqueue_ms
        self._group_send_end = record.enqueue_ms
        self._group_recv_end = record.arrive_ms

    def estimate(self, now_ms: float) -> CcEstimate:
        return CcEstimate(max(self.floor_kbps, self._estimate_kbps), now_ms)

    def receive_rate_kbps(self) -> float:
        return self._recv.rate_kbps()

    def loss_ratio(self) -> float:
        lost = sum(e[1] for e in self._loss_window)
        got = sum(e[2] for e in self._loss_window)
        total = lost + got
        return lost / total if total else 0.0

    def _push_loss(self, record: DeliveryRecord) -> None:
        gap = 0
        if self._next_packet_id is not None and record.packet_id > self._next_packet_id:
            gap = record.packet_id - self._next_packet_id
        self._next_packet_id = record.packet_id + 1
        self._loss_window.append((record.arrive_ms, gap, 1))
        cutoff = record.arrive_ms - LOSS_WINDOW_MS
        while self._loss_window and self._loss_window[0][0] <= cutoff:
            self._loss_window.popleft()

    def _complete_group(self) -> None:
        delay = self._group_recv_end - self._group_send_end
        self._delays.append(delay)
        self.trend = _ls_slope(self._delays)
        if len(self._delays) >= 4 and self.trend > OVERUSE_SLOPE_MS_PER_GROUP:
            self._overuse_runs += 1
        else:
            self._overuse_runs = 0
        now = self._group_recv_end
        rate = self.receive_rate_kbps()
        standing_queue = delay > min(self._delays) + STANDING_DELAY_MARGIN_MS
        if self._overuse_runs >= OVERUSE_CONSECUTIVE:
            # Overuse acts immediately; growth is rate-limited below.
            self.mode = "decrease"
            self._estimate_kbps = max(self.floor_kbps, DECREASE_FACTOR * rate)
            self._overuse_runs = 0
            self._last_change_ms = now
        elif len(self._delays) >= 4 and (self.trend < -OVERUSE_SLOPE_MS_PER_GROUP
                                         or standing_queue):
            self.mode = "hold"
        else:
            self.mode = "increase"
            if now - self._last_change_ms >= RATE_UPDATE_INTERVAL_MS:
                grown = self._estimate_kbps * INCREASE_FACTOR
                if rate > 0:
                    grown = min(grown, RECEIVE_CAP_FACTOR * rate)
                self._estimate_kbps = max(self.floor_kbps, grown)
                self._last_change_ms = now
        loss = self.loss_ratio()
        if loss > LOSS_DECREASE_THRESHOLD and now - self._last_loss_cut_ms >= LOSS_CUT_INTERVAL_MS:
            self.mode = "decrease"
            self._estimate_kbps = max(self.floor_kbps,
                                      self._estimate_kbps * (1.0 - 0.5 * loss))
            self._last_loss_cut_ms = now


class BbrEstimator:
    """Delivery-rate bandwidth estimator (BBR-like simplification).

    Samples the instantaneous delivery rate between consecutive arrivals, so
    back-to-back packets inside a frame burst measure the bottleneck rate
    even when the average sending rate sits well below it.  No pacing-gain
    cycling: the windowed max alone is the estimate.
    """

    def __init__(self, floor_kbps: float = FLOOR_KBPS,
                 initial_kbps: float = INITIAL_ESTIMATE_KBPS):
        self.floor_kbps = floor_kbps
        self.initial_kbps = initial_kbps
        self.out_of_order = 0
        self._last_arrive = None
        self._max_rate = _WindowedFilter(BBR_WINDOW_MS, "max")
        self._min_delay = _WindowedFilter(BBR_WINDOW_MS, "min")

    def on_ack(self, record: DeliveryRecord) -> None:
        if self._last_arrive is not None and record.arrive_ms < self._last_arrive:
            self.out_of_order += 1
            return
        self._min_delay.push(record.arrive_ms, record.arrive_ms - record.enqueue_ms)
        if self._last_arrive is not None:
            dt = record.arrive_ms - self._last_arrive
            if dt > 0:
                self._max_rate.push(record.arrive_ms, record.size_bytes * 8.0 / dt)
        self._last_arrive = record.arrive_ms

    def estimate(self, now_ms: float) -> CcEstimate:
        rate = self._max_rate.current()
        if rate is None:
            rate = self.initial_kbps
        return CcEstimate(max(self.floor_kbps, rate), now_ms)

    def min_delay_ms(self):
        return self._min_delay.current()


def make_estimator(kind: str, floor_kbps: float = FLOOR_KBPS,
                   initial_kbps: float = INITIAL_ESTIMATE_KBPS):
    """Build the estimator selected by the scenario config key ``cc``."""
    if kind == "gcc":
        return GccEstimator(floor_kbps, initial_kbps)
    if kind == "bbr":
        return BbrEstimator(floor_kbps, initial_kbps)
    raise ValueError(f"unknown congestion control kind: {kind!r} (expected gcc or bbr)")
