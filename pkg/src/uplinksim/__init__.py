"""Trace-driven simulator and control library for uplink video streaming
to a cloud multimodal assistant.

Building blocks:

* :mod:`uplinksim.network`     - drop-tail bottleneck replaying a bandwidth trace
* :mod:`uplinksim.cc`          - delay-gradient and delivery-rate bandwidth estimators
* :mod:`uplinksim.abr`         - confidence-capped bitrate controller
* :mod:`uplinksim.roi`         - region-weighted QP allocation with trigger hysteresis
* :mod:`uplinksim.codec`       - parametric rate/QP encoder model
* :mod:`uplinksim.oracle`      - simulated server-side model (grading, feedback)
* :mod:`uplinksim.qa_pipeline` - degradation-sensitive QA construction pipeline
* :mod:`uplinksim.harness`     - scenario runner, sweeps, CSV logs
* :mod:`uplinksim.scenarios`   - synthetic traces and QA scenes
"""

__version__ = "0.1.0"

from .abr import BitrateDecision, ConfidenceSample, ControllerConfig, ReCapController
from .cc import BbrEstimator, CcEstimate, GccEstimator, make_estimator
from .codec import EncodedFrame, FrameSpec, bits_for_qp, encode_uniform, encode_with_map
from .harness import RunResult, ScenarioConfig, run, summarize, sweep
from .network import (
    BandwidthTrace,
    DeliveryRecord,
    LinkState,
    Packet,
    advance,
    capacity_at,
    enqueue,
    frame_latency,
)
from .oracle import FeedbackMessage, OracleConfig, QaSample, ScenarioScript, SimulatedOracle
from .qa_pipeline import CandidateQa, PipelineStats, QaPipeline, stub_judges
from .roi import (
    BoundingBox,
    ImportanceMap,
    QpMap,
    TrajectoryPrediction,
    ZecoConfig,
    boxes_for_now,
    distance_to_boxes,
    importance_map,
    qp_map,
    trigger,
)

__all__ = [name for name in dir() if not name.startswith("_")]
