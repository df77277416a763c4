import numpy as np
import pytest

from dyconfid.confidence import (
    ConfidenceAccumulator,
    class_confidence,
    class_thresholds,
    comprehensive_threshold,
    initial_state,
    map_confidence,
    partition_by_argmax,
    update_state,
)
from dyconfid.core import RunConfig, UnlabeledPrediction


def pred(pid, probs):
    return UnlabeledPrediction.from_probs(pid, probs)


def preds_from(argmax_conf, C):
    """Build predictions with given (argmax, confidence) pairs; remaining mass
    spread over the other classes."""
    out = []
    for i, (c, p) in enumerate(argmax_conf):
        probs = np.full(C, (1.0 - p) / (C - 1))
        probs[c] = p
        out.append(pred(i, probs))
    return out


def test_partition_basic():
    ps = preds_from([(0, 0.9), (1, 0.8), (0, 0.7)], C=3)
    part = partition_by_argmax(ps, 3)
    assert part == [[0, 2], [1], []]


def test_partition_empty_and_errors():
    assert partition_by_argmax([], 4) == [[], [], [], []]
    ps = preds_from([(3, 0.9)], C=4)
    with pytest.raises(ValueError, match="out of range"):
        partition_by_argmax(ps, 3)


def test_partition_tie_instance_goes_to_class_zero():
    part = partition_by_argmax([pred(0, [0.5, 0.5])], 2)
    assert part == [[0], []]


def test_class_confidence_means():
    ps = preds_from([(0, 0.6), (0, 0.8), (1, 0.7)], C=4)
    P = class_confidence(partition_by_argmax(ps, 4), ps)
    assert P[0] == pytest.approx(0.7, abs=1e-12)
    assert P[1] == pytest.approx(0.7, abs=1e-12)
    assert P[2] == 0.0  # empty class rule
    assert P[3] == 0.0


def test_map_confidence_endpoints():
    assert map_confidence(0.0, "linear") == 0.0
    assert map_confidence(1.0, "linear") == 1.0
    assert map_confidence(0.0, "concave", 2.0) == 0.0
    assert map_confidence(1.0, "concave", 2.0) == 1.0
    assert map_confidence(1.0, "exponential") == 1.0


def test_map_confidence_rejects_out_of_range():
    with pytest.raises(ValueError):
        map_confidence(1.2, "linear")
    with pytest.raises(ValueError):
        map_confidence(-0.1, "concave")
    with pytest.raises(ValueError):
        map_confidence(0.5, "sigmoid")


def test_map_confidence_monotone_all_mappings():
    xs = np.sort(np.random.default_rng(1).uniform(0, 1, 4000))
    for mapping, k in [("linear", 2.0), ("concave", 1.0), ("concave", 2.0),
                       ("concave", 3.0), ("exponential", 2.0)]:
        ys = map_confidence(xs, mapping, k)
        assert (np.diff(ys) >= 0).all(), mapping


def test_concave_mapping_below_identity():
    # with k=2 the mapped value never exceeds the raw confidence
    xs = np.random.default_rng(2).uniform(0, 1, 4000)
    assert (map_confidence(xs, "concave", 2.0) <= xs + 1e-15).all()


def test_comprehensive_threshold_modes():
    assert comprehensive_threshold(0.0) == 1.0
    assert comprehensive_threshold(0.5) == pytest.approx(0.6065306597126334, rel=1e-12)
    assert comprehensive_threshold(0.3, mode="fixed", fixed_tau=0.8) == 0.8
    with pytest.raises(ValueError):
        comprehensive_threshold(1.5)


def test_comprehensive_threshold_decreasing():
    ps = np.linspace(0, 1, 200)
    taus = [comprehensive_threshold(p) for p in ps]
    assert (np.diff(taus) < 0).all()
    assert taus[0] == 1.0


def test_class_thresholds_cases():
    # the three regimes of the per-class rule at tau=0.8
    thr = class_thresholds(np.array([0.3, 0.95, 0.8]), 0.8)
    assert thr[0] == pytest.approx(0.2)                  # floored at 1-tau
    assert thr[1] == pytest.approx(0.8)                  # capped at tau
    assert thr[2] == pytest.approx(0.8 / 1.2, rel=1e-12)  # mapped value kept


def test_class_thresholds_clamp_bounds_randomized():
    rng = np.random.default_rng(3)
    for _ in range(200):
        P = rng.uniform(0, 1, 8)
        tau = rng.uniform(0.05, 1.0)
        thr = class_thresholds(P, tau, "concave", 2.0)
        lo, hi = min(tau, 1 - tau), max(tau, 1 - tau)
        assert (thr >= lo - 1e-15).all() and (thr <= hi + 1e-15).all()


def test_update_state_all_confident():
    # every prediction fully confident, comprehensive mode: tau = exp(-2),
    # every class threshold capped at 1 - tau
    cfg = RunConfig(C=4, threshold_mode="comprehensive")
    ps = preds_from([(c, 1.0) for c in range(4)], C=4)
    st = update_state(ps, cfg, epoch=9)
    assert st.epoch == 9
    assert st.average_confidence == pytest.approx(1.0)
    assert st.threshold == pytest.approx(0.1353352832366127, rel=1e-12)
    hi = max(st.threshold, 1 - st.threshold)
    assert np.allclose(st.class_thresholds, hi)


def test_update_state_uniform_probs():
    # uniform probability vectors all tie-break to class 0
    cfg = RunConfig(C=8)
    ps = [pred(i, np.full(8, 1 / 8)) for i in range(5)]
    st = update_state(ps, cfg, epoch=0)
    assert st.per_class_confidence[0] == pytest.approx(1 / 8)
    assert (st.per_class_count == [5, 0, 0, 0, 0, 0, 0, 0]).all()
    assert st.average_confidence == pytest.approx(1 / 8)  # empty classes excluded
    expected = max(map_confidence(1 / 8, "concave", 2.0), 0.2)
    assert np.allclose(st.class_thresholds, [expected] + [0.2] * 7)


def test_update_state_matches_per_operation_outputs():
    cfg = RunConfig(C=4)
    ps = preds_from([(0, 0.6), (0, 0.8), (1, 0.7), (3, 0.95)], C=4)
    st = update_state(ps, cfg, epoch=2)
    P = class_confidence(partition_by_argmax(ps, 4), ps)
    assert np.array_equal(st.per_class_confidence, P)
    tau = comprehensive_threshold(0.0, mode="fixed", fixed_tau=cfg.fixed_tau)
    assert st.threshold == tau
    assert np.array_equal(st.class_thresholds,
                          class_thresholds(P, tau, cfg.mapping, cfg.mapping_constant))


def test_update_state_rejects_empty():
    with pytest.raises(ValueError):
        update_state([], RunConfig(), 0)


def test_update_state_is_pure():
    cfg = RunConfig(C=4, threshold_mode="comprehensive")
    ps = preds_from([(0, 0.61), (2, 0.83), (1, 0.74)], C=4)
    a = update_state(ps, cfg, 5)
    b = update_state(ps, cfg, 5)
    assert np.array_equal(a.per_class_confidence, b.per_class_confidence)
    assert np.array_equal(a.class_thresholds, b.class_thresholds)
    assert a.threshold == b.threshold and a.average_confidence == b.average_confidence


def test_accumulator_matches_update_state():
    cfg = RunConfig(C=5)
    rng = np.random.default_rng(4)
    pairs = [(int(rng.integers(0, 5)), float(rng.uniform(0.2, 1.0))) for _ in range(97)]
    ps = preds_from(pairs, C=5)
    acc = ConfidenceAccumulator(5)
    # feed in two chunks, as the loop would across steps
    for chunk in (ps[:40], ps[40:]):
        acc.add(np.array([p.argmax_class for p in chunk]),
                np.array([p.confidence for p in chunk]))
    st_acc = acc.finalize(cfg, 3)
    st_ref = update_state(ps, cfg, 3)
    assert np.array_equal(st_acc.per_class_confidence, st_ref.per_class_confidence)
    assert np.array_equal(st_acc.per_class_count, st_ref.per_class_count)
    assert st_acc.threshold == st_ref.threshold
    assert np.array_equal(st_acc.class_thresholds, st_ref.class_thresholds)


def test_initial_state_floor():
    st = initial_state(RunConfig(C=4))
    assert np.allclose(st.class_thresholds, 0.2)  # min(tau, 1-tau) at tau=0.8
    st = initial_state(RunConfig(C=4, threshold_mode="comprehensive"))
    assert st.threshold == 1.0
    assert np.allclose(st.class_thresholds, 0.0)
