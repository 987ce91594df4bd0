import numpy as np
import pytest

from uplinksim.codec import FrameSpec, encode_uniform
from uplinksim.oracle import (
    FEEDBACK_DELAY_MAX_MS,
    FEEDBACK_DELAY_MIN_MS,
    FeedbackMessage,
    OracleConfig,
    QaSample,
    ScenarioScript,
    SimulatedOracle,
    Trajectory,
    confidence,
    dump_script,
    grade,
    parse_script,
)
from uplinksim.roi import BoundingBox

SPEC = FrameSpec()


def frame_with_qp(qp_value, kbps=500.0):
    frame = encode_uniform(SPEC, kbps)
    frame.qp[:, :] = qp_value
    return frame


def sample(q_leg=30.0, box=None):
    box = box or BoundingBox(x=100, y=100, w=200, h=150)
    return QaSample(id="s1", ask_at_ms=1000.0, critical_region=box, legibility_qp=q_leg)


class TestGrade:
    def test_clearly_legible(self):
        assert grade(SPEC, sample(30.0), frame_with_qp(20)) is True

    def test_boundary_inclusive(self):
        assert grade(SPEC, sample(30.0), frame_with_qp(30)) is True

    def test_above_threshold_wrong(self):
        assert grade(SPEC, sample(30.0), frame_with_qp(40)) is False

    def test_lost_frame_wrong(self):
        assert grade(SPEC, sample(30.0), None) is False

    def test_grades_only_the_region(self):
        frame = frame_with_qp(45)
        # make exactly the critical region legible
        frame.qp[1:4, 1:5] = 22
        box = BoundingBox(x=64, y=64, w=4 * 64 - 1, h=3 * 64 - 1)
        assert grade(SPEC, sample(30.0, box), frame) is True


class TestConfidence:
    CFG = OracleConfig()

    def test_half_at_threshold(self):
        c = confidence(self.CFG, SPEC, 30.0, None, frame_with_qp(30))
        assert c == pytest.approx(0.5)

    def test_inverted_sigmoid_point(self):
        # margin of -2.77 QP at scale 2 sits at confidence 0.80
        c = confidence(self.CFG, SPEC, 30.0 + 2.77, None, frame_with_qp(30))
        assert c == pytest.approx(0.80, abs=0.01)

    def test_deep_degradation_near_zero(self):
        c = confidence(self.CFG, SPEC, 20.0, None, frame_with_qp(51))
        assert c < 0.01

    def test_monotone_nonincreasing_in_qp(self):
        vals = [confidence(self.CFG, SPEC, 30.0, None, frame_with_qp(q))
                for q in range(0, 52)]
        assert all(a >= b for a, b in zip(vals, vals[1:]))

    def test_missing_frame_is_zero(self):
        assert confidence(self.CFG, SPEC, 30.0, None, None) == 0.0

    def test_agrees_with_grading_at_half(self):
        rng = np.random.default_rng(2)
        for _ in range(200):
            q_bar = float(rng.uniform(0, 51))
            q_leg = float(rng.uniform(0, 51))
            frame = frame_with_qp(q_bar)
            s = sample(q_leg, BoundingBox(x=0, y=0, w=SPEC.width, h=SPEC.height))
            c = confidence(self.CFG, SPEC, q_leg, s.critical_region, frame)
            assert grade(SPEC, s, frame) == (c >= 0.5)


class TestTrajectory:
    def test_linear_interpolation(self):
        traj = Trajectory("o", [(0, 100, 100, 200, 150), (2000, 300, 100, 200, 150)])
        assert traj.box_at(1000.0).x == pytest.approx(200.0)
        assert traj.box_at(500.0).x == pytest.approx(150.0)

    def test_clamped_outside_keyframes(self):
        traj = Trajectory("o", [(1000, 50, 60, 70, 80), (2000, 150, 60, 70, 80)])
        assert traj.box_at(0.0).x == 50.0
        assert traj.box_at(9999.0).x == 150.0

    def test_validation(self):
        with pytest.raises(ValueError):
            Trajectory("o", [])
        with pytest.raises(ValueError):
            Trajectory("o", [(0, 1, 1, 5, 5), (0, 2, 2, 5, 5)])


SCRIPT_TEXT = """
# demo scene
traj obj1 0 100 100 200 150
traj obj1 2000 300 100 200 150
qa q1 1000 obj1 30 text_rich
qa q2 1500 obj1 38
"""


class TestScript:
    def test_parse(self):
        script = parse_script(SCRIPT_TEXT)
        assert set(script.trajectories) == {"obj1"}
        assert [s.id for s in script.samples] == ["q1", "q2"]
        q1 = script.samples[0]
        assert q1.critical_region.x == pytest.approx(200.0)  # interpolated at ask
        assert q1.tags == ("text_rich",)

    def test_roundtrip(self):
        script = parse_script(SCRIPT_TEXT)
        again = parse_script(dump_script(script))
        assert [s.id for s in again.samples] == [s.id for s in script.samples]
        assert again.samples[0].critical_region == script.samples[0].critical_region

    def test_unknown_object_rejected(self):
        with pytest.raises(ValueError):
            parse_script("qa q1 100 ghost 30\n")

    def test_bad_line_rejected(self):
        with pytest.raises(ValueError):
            parse_script("nonsense 1 2 3\n")

    def test_active_sample(self):
        script = parse_script(SCRIPT_TEXT)
        assert script.active_sample(0.0).id == "q1"
        assert script.active_sample(1200.0).id == "q2"
        assert script.active_sample(9000.0).id == "q2"  # last one sticks
        assert ScenarioScript().active_sample(0.0) is None


class TestEmission:
    def make_oracle(self, seed=0, noise=0.0):
        script = parse_script(SCRIPT_TEXT)
        cfg = OracleConfig(seed=seed, prediction_noise_px=noise)
        return SimulatedOracle(cfg, SPEC, script)

    def test_noiseless_predictions_match_script(self):
        orac = self.make_oracle()
        msg = orac.emit_feedback(0.0, frame_with_qp(30))
        traj = orac.script.trajectories["obj1"]
        for (t, boxes) in msg.predictions.steps:
            assert boxes[0].x == pytest.approx(
                traj.box_at(t).clamped(SPEC.width, SPEC.height).x)
        assert [t for t, _ in msg.predictions.steps] == [0.0, 500.0, 1000.0, 1500.0]

    def test_delay_envelope(self):
        orac = self.make_oracle(seed=3)
        for k in range(200):
            msg = orac.emit_feedback(k * 1000.0, frame_with_qp(30))
            lag = msg.deliver_at_ms - msg.emitted_at_ms
            assert FEEDBACK_DELAY_MIN_MS <= lag <= FEEDBACK_DELAY_MAX_MS

    def test_seeded_determinism(self):
        a = self.make_oracle(seed=7, noise=4.0)
        b = self.make_oracle(seed=7, noise=4.0)
        for k in range(20):
            ma = a.emit_feedback(k * 1000.0, frame_with_qp(30))
            mb = b.emit_feedback(k * 1000.0, frame_with_qp(30))
            assert ma.deliver_at_ms == mb.deliver_at_ms
            assert ma.confidence == mb.confidence
            assert ma.predictions.steps[2][1][0].x == mb.predictions.steps[2][1][0].x

    def test_period_enforced(self):
        orac = self.make_oracle()
        orac.emit_feedback(1000.0, None)
        with pytest.raises(ValueError):
            orac.emit_feedback(1500.0, None)

    def test_message_envelope_validated(self):
        with pytest.raises(ValueError):
            FeedbackMessage(confidence=0.5, predictions=None,
                            emitted_at_ms=0.0, deliver_at_ms=800.0)
        with pytest.raises(ValueError):
            FeedbackMessage(confidence=0.5, predictions=None,
                            emitted_at_ms=0.0, deliver_at_ms=1600.0)


class TestSaturationShape:
    def test_accuracy_nondecreasing_in_uniform_bitrate(self):
        rng = np.random.default_rng(17)
        samples = [
            QaSample(id=f"q{i}", ask_at_ms=1000.0 * i,
                     critical_region=BoundingBox(x=float(rng.uniform(0, 1000)),
                                                 y=float(rng.uniform(0, 500)),
                                                 w=150.0, h=120.0),
                     legibility_qp=float(rng.integers(24, 46)))
            for i in range(120)
        ]
        accs = []
        for kbps in (150.0, 290.0, 500.0, 900.0, 1800.0, 3600.0):
            frame = encode_uniform(SPEC, kbps)
            correct = sum(grade(SPEC, s, frame) for s in samples)
            accs.append(correct / len(samples))
        assert all(a <= b for a, b in zip(accs, accs[1:]))
        assert accs[-1] > accs[0]
