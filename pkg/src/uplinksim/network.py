"""Deterministic model of the uplink path.

The uplink is a single drop-tail bottleneck: frames are packetized, packets
enter a FIFO queue bounded at 60 packets, the queue is served at the capacity
given by a replayed bandwidth trace, and delivered packets arrive one
propagation delay after their last bit leaves the queue.

Service is computed in continuous time directly from the trace, so results
carry no tick-quantization artifacts and are exactly reproducible.
"""

from __future__ import annotations

import bisect
import csv
import math
from collections import deque
from dataclasses import dataclass, field

# Frames are split into payloads of at most this size; the link itself
# accepts anything up to LINK_MTU_BYTES (payload plus header room).
SPLIT_MTU_BYTES = 1200
LINK_MTU_BYTES = 1500

QUEUE_LIMIT_PACKETS = 60


class TraceError(ValueError):
    """Raised for malformed bandwidth traces."""


@dataclass(frozen=True)
class BandwidthTrace:
    """Piecewise-constant uplink capacity over time.

    ``samples`` is an ordered list of ``(time_ms, capacity_kbps)``; sample i
    covers the interval from its time up to (excluding) the next sample's
    time.  With ``loop`` set, time wraps modulo :attr:`duration_ms`.
    """

    samples: tuple[tuple[float, float], ...]
    loop: bool = False

    def __init__(self, samples, loop: bool = False):
        samples = tuple((float(t), float(c)) for t, c in samples)
        if not samples:
            raise TraceError("trace has no samples")
        times = [t for t, _ in samples]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise TraceError("trace times must be strictly increasing")
        if any(c < 0 for _, c in samples):
            raise TraceError("trace capacities must be >= 0")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "loop", bool(loop))

    @property
    def duration_ms(self) -> float:
        """Trace length used for looping.

        The last sample's interval is given the same width as the interval
        preceding it (traces are usually evenly sampled), so a two-sample
        trace at 0 and 10000 ms spans 20000 ms.
        """
        if len(self.samples) == 1:
            return self.samples[0][0] + 1000.0
        last = self.samples[-1][0]
        prev = self.samples[-2][0]
        return last + (last - prev)

    @classmethod
    def from_csv(cls, path, loop: bool = False) -> "BandwidthTrace":
        """Load a ``time_ms,bandwidth_kbps`` CSV trace."""
        samples = []
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or "time_ms" not in reader.fieldnames:
                raise TraceError(f"{path}: expected header time_ms,bandwidth_kbps")
            for row in reader:
                samples.append((float(row["time_ms"]), float(row["bandwidth_kbps"])))
        return cls(samples, loop=loop)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["time_ms", "bandwidth_kbps"])
            for t, c in self.samples:
                writer.writerow([f"{t:g}", f"{c:g}"])


def capacity_at(trace: BandwidthTrace, t_ms: float) -> float:
    """Capacity (kbps) in effect at time ``t_ms``.

    A boundary instant belongs to the sample starting there.  Looping traces
    take ``t_ms`` modulo the trace duration.
    """
    if t_ms < 0:
        raise ValueError("time must be >= 0")
    samples = trace.samples
    if len(samples) == 1:
        return samples[0][1]
    if trace.loop:
        t_ms = t_ms % trace.duration_ms
    times = [s[0] for s in samples]
    idx = bisect.bisect_right(times, t_ms) - 1
    if idx < 0:
        idx = 0
    return samples[idx][1]


def _segments_from(trace: BandwidthTrace, t_ms: float):
    """Yield ``(start, end, capacity_kbps)`` pieces from ``t_ms`` onward."""
    samples = trace.samples
    if len(samples) == 1:
        yield t_ms, math.inf, samples[0][1]
        return
    times = [s[0] for s in samples]
    if not trace.loop:
        idx = max(bisect.bisect_right(times, t_ms) - 1, 0)
        cursor = t_ms
        while idx < len(samples) - 1:
            end = times[idx + 1]
            if end > cursor:
                yield cursor, end, samples[idx][1]
                cursor = end
            idx += 1
        yield cursor, math.inf, samples[-1][1]
        return
    duration = trace.duration_ms
    base = t_ms % duration
    offset = t_ms - base
    idx = max(bisect.bisect_right(times, base) - 1, 0)
    cursor = t_ms
    while True:
        end_rel = times[idx + 1] if idx + 1 < len(samples) else duration
        end = offset + end_rel
        if end > cursor:
            yield cursor, end, samples[idx][1]
            cursor = end
        idx += 1
        if idx >= len(samples):
            idx = 0
            offset += duration


def transmit_finish_ms(trace: BandwidthTrace, start_ms: float, size_bytes: float) -> float:
    """Time at which a transmission starting at ``start_ms`` finishes.

    Integrates the piecewise-constant capacity; zero-capacity intervals pass
    time without serving bits.  Returns ``inf`` when the remaining trace can
    never serve the packet (e.g. a non-looping trace ending at capacity 0).
    """
    bits = size_bytes * 8.0
    if bits <= 0:
        return start_ms
    cycle_guard = 0
    for seg_start, seg_end, cap in _segments_from(trace, start_ms):
        if cap <= 0:
            cycle_guard += 1
            if trace.loop and cycle_guard > 2 * len(trace.samples):
                return math.inf
            if seg_end == math.inf:
                return math.inf
            continue
        cycle_guard = 0
        if seg_end == math.inf:
            return seg_start + bits / cap
        served = cap * (seg_end - seg_start)
        if served >= bits:
            return seg_start + bits / cap
        bits -= served
    return math.inf


@dataclass
class Packet:
    """One transmission unit; ``chunk`` identifies the frame fragment so a
    retransmission can be matched to the piece it replaces."""

    id: int
    frame_id: int
    size_bytes: int
    enqueue_time_ms: float
    chunk: int = 0

    def __post_init__(self):
        if not 0 < self.size_bytes <= LINK_MTU_BYTES:
            raise ValueError(f"packet size {self.size_bytes} outside (0, {LINK_MTU_BYTES}]")


@dataclass(frozen=True)
class DeliveryRecord:
    packet_id: int
    frame_id: int
    size_bytes: int
    enqueue_ms: float
    depart_ms: float
    arrive_ms: float


@dataclass
class LinkState:
    """Drop-tail FIFO queue served at trace capacity."""

    prop_delay_ms: float = 20.0
    max_queue: int = QUEUE_LIMIT_PACKETS
    queue: deque = field(default_factory=deque)
    drops: int = 0
    offered: int = 0
    accepted: int = 0
    delivered: int = 0
    busy_until_ms: float = 0.0

    def queue_len(self) -> int:
        return len(self.queue)


def enqueue(link: LinkState, pkt: Packet, now_ms: float) -> bool:
    """Append ``pkt`` if there is room; otherwise drop it (drop-tail)."""
    if not 0 < pkt.size_bytes <= LINK_MTU_BYTES:
        raise ValueError("malformed packet size")
    link.offered += 1
    if len(link.queue) >= link.max_queue:
        link.drops += 1
        return False
    pkt.enqueue_time_ms = now_ms
    link.queue.append(pkt)
    link.accepted += 1
    assert len(link.queue) <= link.max_queue
    return True


def advance(link: LinkState, trace: BandwidthTrace, until_ms: float) -> list[DeliveryRecord]:
    """Serve the queue up to ``until_ms`` and return completed deliveries.

    Packets depart when their last bit is serialized and arrive one
    propagation delay later.  The head packet's finish time is recomputed
    from the fixed capacity schedule, so stopping and resuming at any chain
    of ``until`` instants yields identical results.
    """
    records = []
    while link.queue:
        head = link.queue[0]
        start = max(link.busy_until_ms, head.enqueue_time_ms)
        finish = transmit_finish_ms(trace, start, head.size_bytes)
        if finish > until_ms:
            break
        link.queue.popleft()
        link.busy_until_ms = finish
        link.delivered += 1
        records.append(
            DeliveryRecord(
                packet_id=head.id,
                frame_id=head.frame_id,
                size_bytes=head.size_bytes,
                enqueue_ms=head.enqueue_time_ms,
                depart_ms=finish,
                arrive_ms=finish + link.prop_delay_ms,
            )
        )
        assert len(link.queue) <= link.max_queue
    return records


def frame_latency(records: list[DeliveryRecord], encode_time_ms: float) -> float:
    """Latency of a fully delivered frame: last arrival minus encode time."""
    if not records:
        raise ValueError("frame has no delivered packets")
    return max(r.arrive_ms for r in records) - encode_time_ms


def packetize(frame_id: int, total_bytes: int, now_ms: float, next_packet_id: int) -> list[Packet]:
    """Split a frame into ceil(size / SPLIT_MTU) packets.

    Full-MTU packets plus one tail packet carrying the remainder.
    """
    if total_bytes <= 0:
        raise ValueError("frame must carry at least one byte")
    packets = []
    chunk = 0
    remaining = total_bytes
    pid = next_packet_id
    while remaining > 0:
        size = min(remaining, SPLIT_MTU_BYTES)
        packets.append(Packet(id=pid, frame_id=frame_id, size_bytes=size,
                              enqueue_time_ms=now_ms, chunk=chunk))
        remaining -= size
        chunk += 1
        pid += 1
    return packets


def write_delivery_log(path, records: list[DeliveryRecord], dropped_ids=()) -> None:
    """CSV log ``packet_id,frame_id,enqueue_ms,depart_ms,arrive_ms,dropped``.

    ``dropped_ids`` rows (id, frame_id, enqueue_ms) are appended with empty
    depart/arrive fields and dropped=1.
    """
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["packet_id", "frame_id", "enqueue_ms", "depart_ms", "arrive_ms", "dropped"])
        for r in records:
            writer.writerow([r.packet_id, r.frame_id, f"{r.enqueue_ms:.3f}",
                             f"{r.depart_ms:.3f}", f"{r.arrive_ms:.3f}", 0])
        for pid, fid, enq in dropped_ids:
            writer.writerow([pid, fid, f"{enq:.3f}", "", "", 1])
