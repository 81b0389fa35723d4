import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fstrm.errors import ValidationError
from fstrm.rooting import FrequencyEstimate
from fstrm.tracking import (CONFIRMED, DEAD, TENTATIVE, TrackState, Tracker, TrackingConfig,
                            associate, brute_force_assignment, continuity, measurement_noise,
                            predict, update, wrap_innovation)

CFG = TrackingConfig()


def track(x=(1197.0, 0.28, 0.0), P=None):
    return TrackState(np.array(x, dtype=float), np.zeros((3, 3)) if P is None else P, 0)


def est(f, a=0.28, ph=0.0, frame=0):
    return FrequencyEstimate(f, a, ph, 1.0, frame)


def test_predict_identity_and_additive_covariance():
    t = predict(track())
    np.testing.assert_array_equal(t.x, [1197.0, 0.28, 0.0])
    np.testing.assert_allclose(t.P, CFG.Q)
    np.testing.assert_allclose(predict(t).P, 2 * CFG.Q)


@settings(max_examples=30, deadline=None)
@given(st.floats(1, 25000), st.integers(1, 50))
def test_predict_never_moves_frequency(f, n):
    t = track((f, 0.1, 1.0))
    for _ in range(n):
        t = predict(t)
    assert t.x[0] == f


def test_predict_wraps_phase():
    assert 0 <= predict(track((100.0, 1.0, 7.0))).x[2] < 2 * math.pi


def test_update_limits():
    t = predict(track())
    m = est(1198.0, 0.3, 0.2)
    np.testing.assert_allclose(update(t, m, np.eye(3) * 1e-12).x, [1198.0, 0.3, 0.2], atol=1e-6)
    np.testing.assert_allclose(update(t, m, np.eye(3) * 1e12).x, t.x, atol=1e-6)
    assert update(t, m, np.eye(3)).hits == t.hits + 1


def test_update_wraps_phase_innovation():
    t = predict(track((100.0, 1.0, 6.2)))
    out = update(t, est(100.0, 1.0, 0.05), np.eye(3) * 1e-12)
    assert abs(out.x[2] - 0.05) < 1e-6
    assert wrap_innovation(-math.pi) == math.pi


def test_update_rejects_bad_R():
    with pytest.raises(ValidationError):
        update(predict(track()), est(1197.0), -np.eye(3))
    with pytest.raises(ValidationError):
        update(predict(track()), est(1197.0), np.array([[1, 2, 0], [0, 1, 0], [0, 0, 1.0]]))


def test_constant_measurements_converge():
    t = track((1190.0, 0.28, 0.0), P=np.diag([25.0, 1.0, 1.0]))
    R = np.diag([1.0, 1e-4, 1e-2])
    for _ in range(10):
        t = update(predict(t), est(1197.0), R)
    assert abs(t.x[0] - 1197.0) <= 0.1


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(st.floats(1000, 1010), st.floats(0, 1), st.floats(0, 6.28),
                          st.floats(1e-3, 10)), min_size=1, max_size=15))
def test_covariance_stays_psd(seq):
    t = track(P=np.eye(3))
    for f, a, ph, s in seq:
        t = update(predict(t), est(f, a, ph), measurement_noise(est(f, a), s))
        assert np.allclose(t.P, t.P.T)
        assert np.linalg.eigvalsh(t.P).min() >= -1e-10
        assert t.x[1] >= 0


def test_measurement_noise_formula():
    np.testing.assert_allclose(measurement_noise(est(1197, 1.0), 1.0), np.diag([1, 0.01, 0.01]))
    np.testing.assert_allclose(measurement_noise(est(1197, 1.0), 10.0), np.diag([1, 0.01, 0.01]) / 10)
    with pytest.raises(ValidationError):
        measurement_noise(est(1197), 0.0)


def test_associate_examples():
    a = associate([1197.0], [1197.4])
    assert a.pairs == [(0, 0)]
    a = associate([1197.0], [1210.0])
    assert a.pairs == [] and a.unmatched_tracks == [0] and a.unmatched_estimates == [0]
    a = associate([], [1.0, 2.0])
    assert a.unmatched_estimates == [0, 1]


def test_associate_four_by_four_against_permutations():
    r = np.random.default_rng(0)
    for _ in range(20):
        tf = r.uniform(1000, 1004, 4)
        ef = r.uniform(1000, 1004, 4)
        best = min(sum(abs(tf[i] - ef[p[i]]) for i in range(4)) for p in itertools.permutations(range(4)))
        a = associate(tf, ef)
        assert len(a.pairs) == 4 and math.isclose(a.cost(tf, ef), best, rel_tol=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 6), st.integers(0, 6), st.integers(0, 10 ** 6))
def test_hungarian_equals_brute_force_and_respects_gate(nt, ne, seed):
    r = np.random.default_rng(seed)
    tf, ef = r.uniform(1000, 1020, nt), r.uniform(1000, 1020, ne)
    a = associate(tf, ef, 5.0)
    count, cost = brute_force_assignment(tf, ef, 5.0)
    assert len(a.pairs) == count
    assert math.isclose(a.cost(tf, ef), cost, rel_tol=1e-9, abs_tol=1e-9)
    assert all(abs(tf[i] - ef[j]) <= 5.0 for i, j in a.pairs)


def test_tracker_lifecycle():
    tr = Tracker()
    snap = tr.step(0, [est(1197.0), est(2394.0)])
    assert len(snap) == 2 and all(s["status"] == TENTATIVE for s in snap)
    tr = Tracker()
    for k in range(20):
        tr.step(k, [est(1197.0 + 0.1 * math.sin(k), frame=k)])
    assert len(tr.all_tracks()) == 1 and tr.all_tracks()[0].status == CONFIRMED
    assert not tr.archive
    for k in range(20, 25):
        tr.step(k, [])
    assert tr.archive and tr.archive[0].status == DEAD and not tr.tracks
    assert len(tr.confirmed_tracks()) == 1


def test_continuity_with_dropouts():
    r = np.random.default_rng(11)
    drop = set(r.choice(200, 20, replace=False).tolist())
    tr = Tracker()
    for k in range(200):
        tr.step(k, [] if k in drop else [est(1197.0 + r.normal(0, 0.3), frame=k)])
    c = continuity(tr.all_tracks(), 1197.0, range(200))
    assert c >= 0.90
    assert continuity([], 1197.0, range(10)) == 0.0
