"""Experiment runner binding the transport, control and oracle pieces.

One run is one single-threaded continuous-time event loop: frames are
encoded at the controller's target bitrate, packetized and offered to the
drop-tail link; deliveries feed the bandwidth estimator; the oracle watches
delivered frames and sends delayed confidence/region feedback; scripted
questions are graded against the frame on screen at ask time.  Everything
random draws from generators seeded by the scenario, so identical scenarios
produce byte-identical logs.

Controller stacks:

* ``webrtc``        - follow the congestion controller's estimate.
* ``webrtc+recap``  - confidence-capped bitrate on top of the estimate.
* ``webrtc+zeco``   - follow the estimate, region-weighted QP when triggered.
* ``artic``         - both of the above, nothing else.
"""

from __future__ import annotations

import configparser
import csv
import heapq
import io
import math
import zlib
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import abr, cc as cc_mod, codec, network, oracle as oracle_mod, roi

STACKS = ("webrtc", "webrtc+recap", "webrtc+zeco", "artic")

QA_FRESHNESS_MS = 2000.0   # a frame older than this cannot answer a question
DRAIN_GRACE_MS = 5000.0    # tail time for in-flight packets after the run
CONTROL_PERIOD_MS = 100.0  # CC-following cadence
CAP_PERIOD_MS = 1000.0     # between-feedback safety cap cadence


class ScenarioError(ValueError):
    """Malformed scenario configuration."""


@dataclass
class ScenarioConfig:
    trace: network.BandwidthTrace
    duration_ms: float
    seed: int = 0
    stack: str = "webrtc"
    cc: str = "gcc"
    frame: codec.FrameSpec = field(default_factory=codec.FrameSpec)
    controller: abr.ControllerConfig = field(default_factory=abr.ControllerConfig)
    zeco: roi.ZecoConfig = field(default_factory=roi.ZecoConfig)
    oracle: oracle_mod.OracleConfig = field(default_factory=oracle_mod.OracleConfig)
    script: oracle_mod.ScenarioScript = field(default_factory=oracle_mod.ScenarioScript)
    prop_delay_ms: float = 20.0
    initial_rate_kbps: float = 300.0
    fixed_bitrate_kbps: Optional[float] = None
    keep_delivery: bool = False
    name: str = ""

    def __post_init__(self):
        if self.stack not in STACKS:
            raise ScenarioError(f"unknown stack {self.stack!r}; expected one of {STACKS}")
        if self.cc not in ("gcc", "bbr"):
            raise ScenarioError(f"unknown cc {self.cc!r}; expected gcc or bbr")
        if self.duration_ms <= 0:
            raise ScenarioError("duration must be positive")

    @property
    def recap_enabled(self) -> bool:
        return self.stack in ("webrtc+recap", "artic")

    @property
    def zeco_enabled(self) -> bool:
        return self.stack in ("webrtc+zeco", "artic")


def derive_seed(base: int, *parts) -> int:
    """Stable per-point seed derivation for sweeps."""
    text = f"{base}|" + "|".join(str(p) for p in parts)
    return zlib.crc32(text.encode("utf-8"))


@dataclass
class FrameRow:
    frame_id: int
    encode_ms: float
    latency_ms: Optional[float]   # None while undelivered / lost
    lost: bool
    bitrate_kbps: float
    cc_estimate_kbps: float
    queue_len: int
    mean_qp: float
    crit_qp: Optional[float]


@dataclass(frozen=True)
class QaOutcome:
    sample_id: str
    ask_at_ms: float
    correct: bool
    frame_id: Optional[int]


@dataclass
class Summary:
    mean_latency_ms: Optional[float]
    p95_latency_ms: Optional[float]
    accuracy: Optional[float]
    mean_bitrate_kbps: float
    frames_total: int
    frames_lost: int
    qa_total: int
    qa_correct: int


@dataclass
class RunResult:
    scenario: ScenarioConfig
    rows: list
    qa_outcomes: list
    feedback: list
    summary: Summary
    effective_config: dict
    offered_packets: int
    dropped_packets: int
    retransmissions: int
    delivery: Optional[list] = None
    dropped_log: Optional[list] = None
    axis: Optional[str] = None
    axis_value: Optional[float] = None


class _FrameState:
    __slots__ = ("encode_ms", "pending", "max_arrive", "row", "encoded")

    def __init__(self, encode_ms, pending, row, encoded):
        self.encode_ms = encode_ms
        self.pending = pending
        self.max_arrive = -math.inf
        self.row = row
        self.encoded = encoded


def summarize(rows, qa_outcomes, duration_ms: float, sent_bytes: float) -> Summary:
    """Aggregate a run: latency over delivered frames, QA accuracy, mean
    bitrate actually offered to the wire."""
    lats = [r.latency_ms for r in rows if r.latency_ms is not None]
    lost = sum(1 for r in rows if r.lost)
    mean_lat = float(np.mean(lats)) if lats else None
    p95 = float(np.percentile(lats, 95)) if lats else None
    accuracy = None
    if qa_outcomes:
        accuracy = sum(1 for q in qa_outcomes if q.correct) / len(qa_outcomes)
    return Summary(
        mean_latency_ms=mean_lat,
        p95_latency_ms=p95,
        accuracy=accuracy,
        mean_bitrate_kbps=sent_bytes * 8.0 / duration_ms,
        frames_total=len(rows),
        frames_lost=lost,
        qa_total=len(qa_outcomes),
        qa_correct=sum(1 for q in qa_outcomes if q.correct),
    )


def effective_config(sc: ScenarioConfig) -> dict:
    """Every knob after defaults are resolved; embedded in output headers."""
    cfg = {
        "stack": sc.stack,
        "recap_enabled": sc.recap_enabled,
        "zeco_enabled": sc.zeco_enabled,
        "cc": sc.cc,
        "seed": sc.seed,
        "duration_ms": sc.duration_ms,
        "prop_delay_ms": sc.prop_delay_ms,
        "initial_rate_kbps": sc.initial_rate_kbps,
        "fixed_bitrate_kbps": sc.fixed_bitrate_kbps,
        "queue_limit_packets": network.QUEUE_LIMIT_PACKETS,
        "split_mtu_bytes": network.SPLIT_MTU_BYTES,
        "frame.width": sc.frame.width,
        "frame.height": sc.frame.height,
        "frame.fps": sc.frame.fps,
        "frame.patch_px": sc.frame.patch_px,
        "controller.tau": sc.controller.tau,
        "controller.gamma": sc.controller.gamma,
        "controller.floor_kbps": sc.controller.floor_kbps,
        "controller.ceiling_kbps": sc.controller.ceiling_kbps,
        "controller.stale_after_ms": sc.controller.stale_after_ms,
        "zeco.mu": sc.zeco.mu,
        "zeco.q_min": sc.zeco.q_min,
        "zeco.q_max": sc.zeco.q_max,
        "zeco.patch_px": sc.zeco.patch_px,
        "zeco.trigger_rate_kbps": sc.zeco.trigger_rate_kbps,
        "zeco.exit_factor": sc.zeco.exit_factor,
        "zeco.exit_hold_ms": sc.zeco.exit_hold_ms,
        "zeco.confidence_threshold": sc.zeco.confidence_threshold,
        "oracle.sigmoid_scale": sc.oracle.sigmoid_scale,
        "oracle.emit_period_ms": sc.oracle.emit_period_ms,
        "oracle.prediction_noise_px": sc.oracle.prediction_noise_px,
        "oracle.default_legibility_qp": sc.oracle.default_legibility_qp,
        "qa_samples": len(sc.script.samples),
    }
    return cfg


# Event priorities at equal timestamps: rate updates and feedback land
# before the frame encodes; questions are graded after everything else.
_P_CONTROL = 0
_P_EMIT = 1
_P_FRAME = 2
_P_QA = 3


def run(sc: ScenarioConfig) -> RunResult:
    """Execute one scenario; deterministic given the scenario and seed."""
    frame_interval = 1000.0 / sc.frame.fps
    rtt_ms = 2.0 * sc.prop_delay_ms
    drain_end = sc.duration_ms + DRAIN_GRACE_MS

    link = network.LinkState(prop_delay_ms=sc.prop_delay_ms)
    estimator = cc_mod.make_estimator(sc.cc)
    controller = abr.ReCapController(sc.controller)
    orac = oracle_mod.SimulatedOracle(sc.oracle, sc.frame, sc.script)

    rate = min(max(sc.initial_rate_kbps, sc.controller.floor_kbps), sc.controller.ceiling_kbps)
    if sc.fixed_bitrate_kbps is not None:
        rate = sc.fixed_bitrate_kbps
    last_decision_est = estimator.estimate(0.0).bandwidth_kbps
    latest_prediction: Optional[roi.TrajectoryPrediction] = None
    latest_confidence: Optional[float] = None
    trig = roi.TriggerState()

    rows: list[FrameRow] = []
    qa_outcomes: list[QaOutcome] = []
    feedback_log: list[oracle_mod.FeedbackMessage] = []
    delivery_log: Optional[list] = [] if sc.keep_delivery else None
    dropped_log: Optional[list] = [] if sc.keep_delivery else None

    frame_states: dict[int, _FrameState] = {}
    chunk_of: dict[int, int] = {}
    latest_done = None  # (encode_ms, frame_id, EncodedFrame)
    sent_bytes = 0.0
    retransmissions = 0
    next_packet_id = 0

    events: list = []
    seq = 0

    def push(t, prio, kind, payload=None):
        nonlocal seq
        heapq.heappush(events, (t, prio, seq, kind, payload))
        seq += 1

    pending_arrivals: list = []

    def drain_link(now):
        nonlocal seq
        for rec in network.advance(link, sc.trace, now):
            heapq.heappush(pending_arrivals, (rec.arrive_ms, seq, rec))
            seq += 1
        while pending_arrivals and pending_arrivals[0][0] <= now:
            _, _, rec = heapq.heappop(pending_arrivals)
            process_arrival(rec)

    def process_arrival(rec: network.DeliveryRecord):
        nonlocal latest_done
        estimator.on_ack(rec)
        if delivery_log is not None:
            delivery_log.append(rec)
        chunk = chunk_of.pop(rec.packet_id, None)
        fs = frame_states.get(rec.frame_id)
        if fs is None or chunk is None:
            return
        fs.max_arrive = max(fs.max_arrive, rec.arrive_ms)
        fs.pending.discard(chunk)
        if not fs.pending:
            fs.row.latency_ms = fs.max_arrive - fs.encode_ms
            fs.row.lost = False
            if latest_done is None or fs.encode_ms >= latest_done[0]:
                latest_done = (fs.encode_ms, rec.frame_id, fs.encoded)
            del frame_states[rec.frame_id]

    def current_boxes(now):
        if latest_prediction is None:
            return []
        return roi.boxes_for_now(latest_prediction, now)

    def apply_follow(now):
        """webrtc stacks: track the CC estimate directly."""
        nonlocal rate, last_decision_est
        est = estimator.estimate(now).bandwidth_kbps
        last_decision_est = est
        rate = min(max(est, sc.controller.floor_kbps), sc.controller.ceiling_kbps)

    def update_trigger(now):
        nonlocal trig
        trig = roi.trigger(sc.zeco, rate, latest_confidence, trig, now)

    def handle_frame(now, frame_id):
        nonlocal sent_bytes, next_packet_id
        encoded = None
        if sc.zeco_enabled and trig.enabled:
            boxes = current_boxes(now)
            if boxes:
                imp = roi.importance_map(sc.zeco, sc.frame.width, sc.frame.height, boxes)
                qpm = roi.qp_map(sc.zeco, imp)
                encoded = codec.encode_with_map(sc.frame, rate, qpm, frame_id=frame_id)
        if encoded is None:
            encoded = codec.encode_uniform(sc.frame, rate, frame_id=frame_id)
        crit_qp = None
        sample = sc.script.active_sample(now)
        if sample is not None and sample.object_id is not None:
            region = sc.script.region_at(sample.object_id, now)
            region = region.clamped(sc.frame.width, sc.frame.height)
            crit_qp = codec.region_mean_qp(sc.frame, encoded, region)
        row = FrameRow(
            frame_id=frame_id, encode_ms=now, latency_ms=None, lost=True,
            bitrate_kbps=rate, cc_estimate_kbps=last_decision_est,
            queue_len=0, mean_qp=encoded.mean_qp, crit_qp=crit_qp,
        )
        packets = network.packetize(frame_id, encoded.total_bytes, now, next_packet_id)
        next_packet_id += len(packets)
        for pkt in packets:
            chunk_of[pkt.id] = pkt.chunk
            if network.enqueue(link, pkt, now):
                sent_bytes += pkt.size_bytes
            else:
                if dropped_log is not None:
                    dropped_log.append((pkt.id, pkt.frame_id, now))
                push(now + rtt_ms, _P_CONTROL, "retx", (frame_id, pkt.chunk, pkt.size_bytes))
        row.queue_len = link.queue_len()
        rows.append(row)
        frame_states[frame_id] = _FrameState(now, {p.chunk for p in packets}, row, encoded)

    def handle_retx(now, payload):
        nonlocal sent_bytes, next_packet_id, retransmissions
        frame_id, chunk, size = payload
        if frame_id not in frame_states or now > drain_end:
            return
        pkt = network.Packet(id=next_packet_id, frame_id=frame_id, size_bytes=size,
                             enqueue_time_ms=now, chunk=chunk)
        next_packet_id += 1
        chunk_of[pkt.id] = pkt.chunk
        retransmissions += 1
        if network.enqueue(link, pkt, now):
            sent_bytes += size
        else:
            if dropped_log is not None:
                dropped_log.append((pkt.id, frame_id, now))
            if now + rtt_ms <= drain_end:
                push(now + rtt_ms, _P_CONTROL, "retx", (frame_id, chunk, size))

    # Recurring event bootstrap.
    push(0.0, _P_CONTROL, "control", 0)
    if sc.recap_enabled and sc.fixed_bitrate_kbps is None:
        push(CAP_PERIOD_MS, _P_CONTROL, "cap", 1)
    push(sc.oracle.emit_period_ms, _P_EMIT, "emit", 1)
    push(0.0, _P_FRAME, "frame", 0)
    for sample in sc.script.samples:
        if sample.ask_at_ms <= sc.duration_ms:
            push(sample.ask_at_ms, _P_QA, "qa", sample)

    while events:
        now, _prio, _s, kind, payload = heapq.heappop(events)
        if now > drain_end:
            break
        drain_link(now)
        if kind == "frame":
            handle_frame(now, payload)
            nxt = (payload + 1) * frame_interval
            if nxt <= sc.duration_ms:
                push(nxt, _P_FRAME, "frame", payload + 1)
        elif kind == "control":
            if sc.fixed_bitrate_kbps is None:
                if not sc.recap_enabled:
                    apply_follow(now)
                else:
                    latest = controller.latest
                    if (latest is None
                            or now - latest.delivered_at_ms > sc.controller.stale_after_ms):
                        # No usable confidence: treat as non-saturated and
                        # track the CC target.
                        apply_follow(now)
            update_trigger(now)
            nxt = (payload + 1) * CONTROL_PERIOD_MS
            if nxt <= sc.duration_ms:
                push(nxt, _P_CONTROL, "control", payload + 1)
        elif kind == "cap":
            est = estimator.estimate(now).bandwidth_kbps
            last_decision_est = est
            rate = controller.cap_only(rate, est)
            update_trigger(now)
            nxt = (payload + 1) * CAP_PERIOD_MS
            if nxt <= sc.duration_ms:
                push(nxt, _P_CONTROL, "cap", payload + 1)
        elif kind == "emit":
            frame_for_oracle = latest_done[2] if latest_done else None
            msg = orac.emit_feedback(now, frame_for_oracle)
            feedback_log.append(msg)
            push(msg.deliver_at_ms, _P_CONTROL, "deliver", msg)
            nxt = (payload + 1) * sc.oracle.emit_period_ms
            if nxt <= sc.duration_ms:
                push(nxt, _P_EMIT, "emit", payload + 1)
        elif kind == "deliver":
            msg = payload
            latest_confidence = msg.confidence
            controller.on_feedback(abr.ConfidenceSample(
                c=msg.confidence, observed_at_ms=msg.emitted_at_ms, delivered_at_ms=now))
            latest_prediction = msg.predictions
            if sc.recap_enabled and sc.fixed_bitrate_kbps is None:
                est = estimator.estimate(now).bandwidth_kbps
                last_decision_est = est
                rate = controller.decide(rate, est, now).rate_kbps
            update_trigger(now)
        elif kind == "retx":
            handle_retx(now, payload)
        elif kind == "qa":
            sample = payload
            frame_used = None
            frame_id_used = None
            if latest_done is not None and now - latest_done[0] <= QA_FRESHNESS_MS:
                frame_used = latest_done[2]
                frame_id_used = latest_done[1]
            qa_outcomes.append(QaOutcome(
                sample_id=sample.id, ask_at_ms=now,
                correct=orac.grade(sample, frame_used), frame_id=frame_id_used))

    drain_link(drain_end)
    while pending_arrivals:
        _, _, rec = heapq.heappop(pending_arrivals)
        process_arrival(rec)

    assert link.accepted + link.drops == link.offered
    assert link.delivered + link.queue_len() == link.accepted

    summary = summarize(rows, qa_outcomes, sc.duration_ms, sent_bytes)
    return RunResult(
        scenario=sc,
        rows=rows,
        qa_outcomes=qa_outcomes,
        feedback=feedback_log,
        summary=summary,
        effective_config=effective_config(sc),
        offered_packets=link.offered,
        dropped_packets=link.drops,
        retransmissions=retransmissions,
        delivery=delivery_log,
        dropped_log=dropped_log,
    )


def sweep(base: ScenarioConfig, axis: str, values, trace_levels=None) -> list[RunResult]:
    """One run per axis value with seeds derived from the base seed.

    ``fluctuation_per_min`` rebuilds the trace per value; ``bitrate`` pins
    the sending rate per value (equal-budget comparisons).  Runs are fully
    isolated; executing them in any order gives identical results.
    """
    from .scenarios import INDUSTRY_LEVELS_KBPS, fluctuation_trace

    results = []
    for value in values:
        if axis == "fluctuation_per_min":
            trace = fluctuation_trace(value, base.duration_ms,
                                      derive_seed(base.seed, "trace", value),
                                      levels=trace_levels or INDUSTRY_LEVELS_KBPS)
            point = replace(base, trace=trace, seed=derive_seed(base.seed, "run", value))
        elif axis == "bitrate":
            point = replace(base, fixed_bitrate_kbps=float(value),
                            seed=derive_seed(base.seed, "run", value))
        else:
            raise ScenarioError(f"unknown sweep axis {axis!r}")
        result = run(point)
        result.axis = axis
        result.axis_value = float(value)
        results.append(result)
    return results


# ---------------------------------------------------------------------------
# Scenario files (key-value text) and CSV output


def load_scenario(path) -> ScenarioConfig:
    """Read a scenario file; see ``ScenarioConfig`` for the knobs."""
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    read = parser.read(path)
    if not read:
        raise ScenarioError(f"cannot read scenario file {path}")
    if "scenario" not in parser:
        raise ScenarioError(f"{path}: missing [scenario] section")
    import os
    base_dir = os.path.dirname(os.path.abspath(path))

    def resolve(p):
        return p if os.path.isabs(p) else os.path.join(base_dir, p)

    s = parser["scenario"]
    trace_path = s.get("trace")
    if trace_path is None:
        raise ScenarioError(f"{path}: scenario.trace is required")
    trace_file = resolve(trace_path)
    if not os.path.exists(trace_file):
        raise ScenarioError(f"{path}: trace file {trace_file} does not exist")
    trace = network.BandwidthTrace.from_csv(trace_file, loop=s.getboolean("trace_loop", False))
    script = oracle_mod.ScenarioScript()
    if s.get("script"):
        script_file = resolve(s.get("script"))
        if not os.path.exists(script_file):
            raise ScenarioError(f"{path}: script file {script_file} does not exist")
        script = oracle_mod.load_script(script_file)

    def section(name):
        return parser[name] if name in parser else {}

    f = section("frame")
    frame = codec.FrameSpec(
        width=int(f.get("width", 1280)), height=int(f.get("height", 720)),
        fps=float(f.get("fps", 30)), patch_px=int(f.get("patch_px", 64)))
    c = section("controller")
    controller = abr.ControllerConfig(
        tau=float(c.get("tau", 0.8)), gamma=float(c.get("gamma", 2)),
        floor_kbps=float(c.get("floor_kbps", 100)),
        ceiling_kbps=float(c.get("ceiling_kbps", 4000)),
        stale_after_ms=float(c.get("stale_after_ms", 3000)))
    z = section("zeco")
    zeco = roi.ZecoConfig(
        mu=float(z.get("mu", 0.5)), q_min=int(z.get("q_min", 20)),
        q_max=int(z.get("q_max", 51)), patch_px=int(z.get("patch_px", frame.patch_px)),
        trigger_rate_kbps=float(z.get("trigger_rate_kbps", 500)),
        exit_factor=float(z.get("exit_factor", 1.2)),
        exit_hold_ms=float(z.get("exit_hold_ms", 2000)),
        confidence_threshold=float(z.get("confidence_threshold", 0.8)))
    o = section("oracle")
    ocfg = oracle_mod.OracleConfig(
        sigmoid_scale=float(o.get("sigmoid_scale", 2.0)),
        emit_period_ms=float(o.get("emit_period_ms", 1000)),
        seed=int(o.get("seed", s.getint("seed", 0))),
        prediction_noise_px=float(o.get("prediction_noise_px", 0)),
        default_legibility_qp=float(o.get("default_legibility_qp", 35)))
    fixed = s.get("fixed_bitrate_kbps", "").strip()
    try:
        return ScenarioConfig(
            trace=trace, duration_ms=s.getfloat("duration_ms"),
            seed=s.getint("seed", 0), stack=s.get("stack", "webrtc"),
            cc=s.get("cc", "gcc"), frame=frame, controller=controller,
            zeco=zeco, oracle=ocfg, script=script,
            prop_delay_ms=s.getfloat("prop_delay_ms", 20.0),
            initial_rate_kbps=s.getfloat("initial_rate_kbps", 300.0),
            fixed_bitrate_kbps=float(fixed) if fixed else None,
            keep_delivery=s.getboolean("keep_delivery", False),
            name=s.get("name", ""))
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"{path}: {exc}") from exc


def _config_header(result: RunResult) -> list[str]:
    return [f"# {key} = {value}" for key, value in result.effective_config.items()]


def _fmt(value, nd=3) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, float):
        return f"{value:.{nd}f}"
    return str(value)


def write_frame_rows(path, result: RunResult) -> None:
    """Per-frame log with the resolved config as a comment header."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        for line in _config_header(result):
            fh.write(line + "\n")
        writer = csv.writer(fh)
        writer.writerow(["frame_id", "encode_ms", "latency_ms", "lost", "bitrate_kbps",
                         "cc_estimate_kbps", "queue_len", "mean_qp", "crit_qp"])
        for r in result.rows:
            writer.writerow([r.frame_id, _fmt(r.encode_ms), _fmt(r.latency_ms),
                             int(r.lost), _fmt(r.bitrate_kbps), _fmt(r.cc_estimate_kbps),
                             r.queue_len, _fmt(r.mean_qp), _fmt(r.crit_qp)])


def write_qa_log(path, result: RunResult) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sample_id", "ask_ms", "correct", "frame_id"])
        for q in result.qa_outcomes:
            writer.writerow([q.sample_id, _fmt(q.ask_at_ms), int(q.correct),
                             "" if q.frame_id is None else q.frame_id])


def write_summary(path, results: list[RunResult], with_axis: bool = False) -> None:
    """Summary CSV: ``stack,cc,mean_latency_ms,p95_latency_ms,accuracy,
    mean_bitrate_kbps`` (sweeps prepend axis,value)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        head = ["stack", "cc", "mean_latency_ms", "p95_latency_ms", "accuracy",
                "mean_bitrate_kbps"]
        if with_axis:
            head = ["axis", "value"] + head
        writer.writerow(head)
        for res in results:
            s = res.summary
            row = [res.scenario.stack, res.scenario.cc, _fmt(s.mean_latency_ms),
                   _fmt(s.p95_latency_ms), _fmt(s.accuracy, 4), _fmt(s.mean_bitrate_kbps)]
            if with_axis:
                row = [res.axis or "", _fmt(res.axis_value)] + row
            writer.writerow(row)


def write_run_outputs(out_dir, result: RunResult) -> None:
    """frames.csv, qa.csv, summary.csv and (when kept) delivery.csv."""
    import os
    os.makedirs(out_dir, exist_ok=True)
    write_frame_rows(os.path.join(out_dir, "frames.csv"), result)
    write_qa_log(os.path.join(out_dir, "qa.csv"), result)
    write_summary(os.path.join(out_dir, "summary.csv"), [result])
    if result.delivery is not None:
        network.write_delivery_log(os.path.join(out_dir, "delivery.csv"),
                                   result.delivery, result.dropped_log or ())


def frame_rows_bytes(result: RunResult) -> bytes:
    """The frames.csv content in memory (reproducibility checks)."""
    buf = io.StringIO()
    for line in _config_header(result):
        buf.write(line + "\n")
    writer = csv.writer(buf)
    writer.writerow(["frame_id", "encode_ms", "latency_ms", "lost", "bitrate_kbps",
                     "cc_estimate_kbps", "queue_len", "mean_qp", "crit_qp"])
    for r in result.rows:
        writer.writerow([r.frame_id, _fmt(r.encode_ms), _fmt(r.latency_ms),
                         int(r.lost), _fmt(r.bitrate_kbps), _fmt(r.cc_estimate_kbps),
                         r.queue_len, _fmt(r.mean_qp), _fmt(r.crit_qp)])
    return buf.getvalue().encode("utf-8")
