import math

import numpy as np
import pytest

from uplinksim.codec import FrameSpec, encode_uniform, encode_with_map
from uplinksim.roi import (
    BoundingBox,
    NoContextError,
    TrajectoryPrediction,
    TriggerState,
    ZecoConfig,
    boxes_for_now,
    distance_to_boxes,
    grid_shape,
    importance_map,
    qp_map,
    read_region_feedback_csv,
    trigger,
    write_region_feedback_csv,
)

CFG = ZecoConfig()
BOX = BoundingBox(x=100, y=100, w=200, h=150)
W, H = 1280, 720
DIAG = math.hypot(W, H)


class TestDistance:
    def test_inside_is_zero(self):
        assert distance_to_boxes((150, 150), [BOX]) == 0.0

    def test_axis_aligned_gap(self):
        assert distance_to_boxes((400, 175), [BOX]) == pytest.approx(100.0)

    def test_corner_distance(self):
        assert distance_to_boxes((400, 350), [BOX]) == pytest.approx(141.42, abs=0.01)

    def test_nearest_of_many(self):
        near = BoundingBox(x=390, y=340, w=20, h=20)
        assert distance_to_boxes((400, 350), [BOX, near]) == 0.0

    def test_empty_signals_no_context(self):
        with pytest.raises(NoContextError):
            distance_to_boxes((0, 0), [])


class TestImportance:
    def test_grid_dimensions(self):
        assert grid_shape(W, H, 64) == (12, 20)  # ceil(H/64) rows, ceil(W/64) cols
        assert grid_shape(1281, 721, 64) == (12, 21)

    def test_formula_endpoints(self):
        reach = CFG.mu * DIAG
        for d, expected in [(0.0, 1.0), (reach / 2, 0.5), (reach, 0.0), (reach * 2, 0.0)]:
            rho = max(0.0, 1.0 - d / reach)
            assert rho == pytest.approx(expected, abs=1e-9)

    def test_map_matches_scalar_distance(self):
        # Vectorized map must equal the scalar formula at every patch center.
        boxes = [BOX, BoundingBox(x=900, y=500, w=120, h=90)]
        imp = importance_map(CFG, W, H, boxes)
        reach = CFG.mu * DIAG
        rows, cols = imp.rho.shape
        for j in range(0, rows, 3):
            for i in range(0, cols, 3):
                cx = min(i * 64 + 32.0, W - 1.0)
                cy = min(j * 64 + 32.0, H - 1.0)
                d = distance_to_boxes((cx, cy), boxes)
                assert imp.rho[j, i] == pytest.approx(max(0.0, 1.0 - d / reach), abs=1e-12)

    def test_inside_box_is_one(self):
        imp = importance_map(CFG, W, H, [BoundingBox(x=0, y=0, w=W, h=H)])
        assert np.all(imp.rho == 1.0)

    def test_no_boxes_raises(self):
        with pytest.raises(NoContextError):
            importance_map(CFG, W, H, [])

    def test_values_bounded(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            b = BoundingBox(x=rng.uniform(0, W - 10), y=rng.uniform(0, H - 10),
                            w=rng.uniform(5, 300), h=rng.uniform(5, 300))
            imp = importance_map(CFG, W, H, [b])
            assert np.all(imp.rho >= 0.0) and np.all(imp.rho <= 1.0)


class TestQpMap:
    def test_endpoints_and_rounding(self):
        from uplinksim.roi import ImportanceMap
        rho = np.array([[1.0, 0.5, 0.0]])
        imp = ImportanceMap(rho=rho, width=192, height=64, patch_px=64)
        qpm = qp_map(CFG, imp)
        # q_min + 31*(1-rho)^2: {20, 27.75 -> 28, 51}
        assert qpm.qp.tolist() == [[20, 28, 51]]

    def test_half_up_rounding(self):
        from uplinksim.roi import ImportanceMap
        # (1-rho)^2 = 0.25 exactly at rho=0.5 -> 27.75 rounds up
        imp = ImportanceMap(rho=np.array([[0.5]]), width=64, height=64, patch_px=64)
        assert qp_map(CFG, imp).qp[0, 0] == 28

    def test_patch_inside_box_gets_qmin_far_gets_qmax(self):
        box = BoundingBox(x=0, y=0, w=200, h=200)
        imp = importance_map(CFG, 4096, 4096, [box])
        qpm = qp_map(CFG, imp)
        assert qpm.qp[0, 0] == CFG.q_min       # patch center (32,32) inside
        assert qpm.qp[-1, -1] == CFG.q_max     # farther than mu * diag

    def test_monotone_in_distance(self):
        rng = np.random.default_rng(11)
        b = BoundingBox(x=500, y=300, w=150, h=100)
        imp = importance_map(CFG, W, H, [b])
        qpm = qp_map(CFG, imp)
        cx = np.minimum(np.arange(imp.rho.shape[1]) * 64 + 32.0, W - 1.0)
        cy = np.minimum(np.arange(imp.rho.shape[0]) * 64 + 32.0, H - 1.0)
        dists = np.array([[distance_to_boxes((x, y), [b]) for x in cx] for y in cy])
        order = np.argsort(dists.ravel(), kind="stable")
        rho_sorted = imp.rho.ravel()[order]
        qp_sorted = qpm.qp.ravel()[order]
        assert np.all(np.diff(rho_sorted) <= 1e-12)
        assert np.all(np.diff(qp_sorted) >= 0)

    def test_adding_a_box_never_raises_qp(self):
        rng = np.random.default_rng(23)
        for _ in range(30):
            base = [BoundingBox(x=rng.uniform(0, 1000), y=rng.uniform(0, 600),
                                w=rng.uniform(10, 250), h=rng.uniform(10, 200))]
            extra = base + [BoundingBox(x=rng.uniform(0, 1000), y=rng.uniform(0, 600),
                                        w=rng.uniform(10, 250), h=rng.uniform(10, 200))]
            q_base = qp_map(CFG, importance_map(CFG, W, H, base)).qp
            q_more = qp_map(CFG, importance_map(CFG, W, H, extra)).qp
            assert np.all(q_more <= q_base)


class TestPrediction:
    def make_pred(self):
        steps = tuple(
            (t, (BoundingBox(x=10 + t / 10, y=20, w=50, h=40, valid_at_ms=t),))
            for t in (0.0, 500.0, 1000.0, 1500.0)
        )
        return TrajectoryPrediction(emitted_at_ms=0.0, steps=steps)

    def test_nearest_step(self):
        pred = self.make_pred()
        assert boxes_for_now(pred, 520.0)[0].valid_at_ms == 500.0

    def test_at_emission_picks_first_step(self):
        pred = self.make_pred()
        assert boxes_for_now(pred, 0.0)[0].valid_at_ms == 0.0

    def test_expiry_after_grace(self):
        pred = self.make_pred()
        assert boxes_for_now(pred, 2100.0) == []
        assert boxes_for_now(pred, 1999.0)[0].valid_at_ms == 1500.0

    def test_horizon_validated(self):
        with pytest.raises(ValueError):
            TrajectoryPrediction(emitted_at_ms=0.0, steps=((1600.0, ()),))

    def test_step_order_validated(self):
        with pytest.raises(ValueError):
            TrajectoryPrediction(emitted_at_ms=0.0, steps=((500.0, ()), (500.0, ())))


class TestTrigger:
    def test_enables_on_low_rate_and_low_confidence(self):
        st = trigger(CFG, 300.0, 0.5, TriggerState(), 0.0)
        assert st.enabled

    def test_confidence_gate(self):
        st = trigger(CFG, 300.0, 0.95, TriggerState(), 0.0)
        assert not st.enabled

    def test_no_confidence_means_off(self):
        st = trigger(CFG, 300.0, None, TriggerState(), 0.0)
        assert not st.enabled

    def test_rate_gate(self):
        st = trigger(CFG, 600.0, 0.5, TriggerState(), 0.0)
        assert not st.enabled

    def test_hysteresis_exit_after_hold(self):
        st = TriggerState(enabled=True)
        st = trigger(CFG, 700.0, 0.5, st, 0.0)
        assert st.enabled
        st = trigger(CFG, 700.0, 0.5, st, 1000.0)
        assert st.enabled
        st = trigger(CFG, 700.0, 0.5, st, 2000.0)
        assert not st.enabled

    def test_rate_dip_resets_hold(self):
        st = TriggerState(enabled=True)
        st = trigger(CFG, 700.0, 0.5, st, 0.0)
        st = trigger(CFG, 550.0, 0.5, st, 1500.0)   # below exit rate: reset
        st = trigger(CFG, 700.0, 0.5, st, 2500.0)
        assert st.enabled
        st = trigger(CFG, 700.0, 0.5, st, 4500.0)
        assert not st.enabled

    def test_stays_on_below_exit_rate(self):
        st = TriggerState(enabled=True)
        for t in range(0, 10_000, 500):
            st = trigger(CFG, 590.0, 0.9, st, float(t))
        assert st.enabled


class TestEqualBudgetAllocation:
    def test_boxes_get_lower_qp_than_uniform_at_same_bits(self):
        # Region-weighted allocation must spend its (equal) budget where the
        # boxes are: mean achieved QP inside boxes strictly below uniform's.
        rng = np.random.default_rng(31)
        spec = FrameSpec()
        for _ in range(25):
            n_boxes = int(rng.integers(1, 4))
            boxes = [
                BoundingBox(x=float(rng.uniform(0, spec.width - 200)),
                            y=float(rng.uniform(0, spec.height - 160)),
                            w=float(rng.uniform(64, 200)), h=float(rng.uniform(64, 160)))
                for _ in range(n_boxes)
            ]
            target = float(rng.uniform(250, 1500))
            imp = importance_map(CFG, spec.width, spec.height, boxes)
            qpm = qp_map(CFG, imp)
            weighted = encode_with_map(spec, target, qpm)
            uniform = encode_uniform(spec, target)
            assert abs(weighted.total_bytes - uniform.total_bytes) <= 1
            inside = imp.rho >= 1.0
            assert inside.any()
            assert weighted.qp[inside].mean() < uniform.qp[inside].mean()


class TestRegionFeedbackCsv:
    def test_roundtrip(self, tmp_path):
        steps = tuple(
            (t, (BoundingBox(x=10.0, y=20.0, w=50.0, h=40.0, valid_at_ms=t),))
            for t in (100.0, 600.0, 1100.0)
        )
        preds = [TrajectoryPrediction(emitted_at_ms=100.0, steps=steps)]
        path = tmp_path / "regions.csv"
        write_region_feedback_csv(path, preds)
        back = read_region_feedback_csv(path)
        assert len(back) == 1
        assert [t for t, _ in back[0].steps] == [100.0, 600.0, 1100.0]
        assert back[0].steps[0][1][0].w == 50.0
