import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.polynomial import polynomial as npoly

from conftest import FS, tone_frame
from fstrm.errors import NoSignalEnergy
from fstrm.rooting import (FrequencyEstimate, MusicPolynomial, aperture_basis, companion_roots,
                           estimate_amplitudes, music_polynomial, null_spectrum_coefficients,
                           orthonormalize, polish_frequencies, roots_to_frequencies)
from fstrm.signals import Frame


def steering(L_r, omega):
    return np.exp(1j * omega * np.arange(L_r))


def test_identity_complement_coefficients():
    c = null_spectrum_coefficients(np.zeros((4, 0)), 4)
    np.testing.assert_allclose(c, [0, 0, 0, 4, 0, 0, 0])
    with pytest.raises(NoSignalEnergy, match="empty signal subspace"):
        music_polynomial(np.zeros((4, 0)), 4)


def test_null_at_own_steering_vector():
    w = 0.7
    q = steering(16, w)[:, None] / 4.0
    poly = music_polynomial(q, 16)
    assert abs(poly.on_circle([w])[0]) <= 1e-10
    c = poly.coefficients
    np.testing.assert_allclose(c[::-1], np.conj(c), atol=1e-12)
    assert c[15].real > 0


def test_random_basis_matches_projector_oracle():
    r = np.random.default_rng(0)
    Q = orthonormalize(r.normal(size=(32, 3)) + 1j * r.normal(size=(32, 3)))
    poly = music_polynomial(Q, 32)
    om = np.linspace(0, 2 * np.pi, 512, endpoint=False)
    A = np.exp(1j * np.outer(np.arange(32), om))
    direct = np.sum(np.abs(A - Q @ (Q.conj().T @ A)) ** 2, axis=0)
    np.testing.assert_allclose(poly.on_circle(om), direct, atol=1e-9)


@settings(max_examples=30, deadline=None)
@given(st.integers(4, 48), st.integers(1, 3), st.integers(0, 10 ** 6))
def test_null_spectrum_nonnegative_and_symmetric_roots(L_r, p, seed):
    r = np.random.default_rng(seed)
    Q = orthonormalize(r.normal(size=(L_r, p)))
    poly = music_polynomial(Q, L_r)
    om = np.linspace(0, 2 * np.pi, 257)
    assert poly.on_circle(om).min() >= -1e-9
    roots = companion_roots(poly)
    assert roots.size == 2 * (L_r - 1)
    # each root z has a partner 1/conj(z)
    for z in roots[np.abs(roots) > 1e-3]:
        partner = 1 / np.conj(z)
        assert np.min(np.abs(roots - partner)) <= 1e-6 * max(1, abs(partner)) or abs(abs(z) - 1) < 1e-4


def test_companion_simple():
    np.testing.assert_allclose(np.sort(companion_roots([-1, 0, 1]).real), [-1, 1], atol=1e-12)
    z = companion_roots([0, 0, -1, 0, 1])  # trailing zeros -> roots at origin
    assert np.sum(np.abs(z) < 1e-12) == 2
    z = companion_roots([-1, 0, 1, 0, 1e-30])  # negligible leading term is deflated
    assert z.size == 2
    with pytest.raises(NoSignalEnergy):
        companion_roots([0, 0, 0])


def test_companion_reconstructs_random_polynomial():
    r = np.random.default_rng(1)
    c = r.normal(size=11) + 1j * r.normal(size=11)
    z = companion_roots(c)
    rebuilt = npoly.polyfromroots(z) * c[-1]
    assert np.max(np.abs(rebuilt - c)) <= 1e-8 * np.max(np.abs(c))


def test_single_tone_roots_on_circle():
    w = 2 * np.pi * 1197 / FS
    n = np.arange(64)
    Q = orthonormalize(np.column_stack([np.cos(w * n), np.sin(w * n)]))
    z = companion_roots(music_polynomial(Q, 64))
    for target in (np.exp(1j * w), np.exp(-1j * w)):
        best = z[np.argmin(np.abs(z - target))]
        assert abs(abs(best) - 1) <= 1e-6 and abs(np.angle(best / target)) < 1e-6


def test_roots_to_frequencies_examples():
    z = np.exp(2j * np.pi * 1000 / FS)
    out = roots_to_frequencies([z, np.conj(z)], FS, 2)
    assert len(out) == 1 and math.isclose(out[0][0], 1000.0, rel_tol=1e-12)
    assert roots_to_frequencies([0.85 * z], FS, 2) == []
    # outside member of a reciprocal pair, DC and Nyquist are dropped
    assert roots_to_frequencies([1.05 * z, 1.0 + 0j, -1.0 + 0j], FS, 6) == []
    # at most ceil(p/2), closest to the circle first
    zs = [0.99 * np.exp(1j * 0.3), 0.95 * np.exp(1j * 0.5), np.exp(1j * 0.7)]
    out = roots_to_frequencies(zs, FS, 4)
    assert [round(r, 2) for _, r in out] == [1.0, 0.99]


def test_merge_of_split_roots():
    a = np.exp(2j * np.pi * 1000.00 / FS)
    b = np.exp(2j * np.pi * 1000.02 / FS)
    out = roots_to_frequencies([a, b], FS, 4)
    assert len(out) == 1 and abs(out[0][0] - 1000.01) < 1e-6


def test_strided_aperture_unfolds_to_anchor():
    fr = tone_frame([1197, 1202], 4096)
    from fstrm.hankel import make_hankel
    from fstrm.subspace import decompose, signal_basis
    dec = decompose(make_hankel(fr), order_rule="detect")
    V = signal_basis(dec, 4)
    Q = aperture_basis(V, 64, stride=20)
    assert np.abs(Q.T @ Q - np.eye(4)).max() < 1e-10
    z = companion_roots(music_polynomial(Q, 64))
    out = roots_to_frequencies(z, FS, 4, stride=20, anchors_hz=[1199.5])
    np.testing.assert_allclose(sorted(f for f, _ in out), [1197, 1202], atol=0.05)
    assert roots_to_frequencies(z, FS, 4, stride=20, anchors_hz=[]) == []


def test_noise_free_two_tones_16ms():
    fr = tone_frame([1197, 1202], 819)
    from fstrm.hankel import make_hankel
    from fstrm.subspace import decompose, signal_basis
    dec = decompose(make_hankel(fr), order_rule="detect")
    V = signal_basis(dec, 4)
    z = companion_roots(music_polynomial(aperture_basis(V, 256), 256))
    f = sorted(x for x, _ in roots_to_frequencies(z, FS, 4))
    np.testing.assert_allclose(f, [1197, 1202], atol=0.1)


def test_amplitudes_pure_tone_and_zero():
    fr = Frame(0.28 * np.cos(2 * np.pi * 1197 * np.arange(819) / FS + 1.1), FS)
    [(amp, ph)], ridge = estimate_amplitudes(fr, [1197.0])
    assert abs(amp - 0.28) <= 1e-6 and abs(ph - 1.1) <= 1e-6 and not ridge
    [(amp, _)], _ = estimate_amplitudes(Frame(np.zeros(819), FS), [1197.0])
    assert amp == 0


def test_amplitudes_ridge_flag_for_collinear():
    fr = tone_frame([1197, 1202], 819, snr_db=30)
    _, ridge = estimate_amplitudes(fr, [1197.0, 1197.05])
    assert ridge


def test_amplitudes_unbiased_two_tones():
    r = np.random.default_rng(3)
    n = np.arange(819)
    est = []
    for _ in range(200):
        x = np.cos(2 * np.pi * 1197 * n / FS + 0.3) + 0.5 * np.cos(2 * np.pi * 2394 * n / FS)
        x += r.normal(0, 0.05, 819)
        est.append([a for a, _ in estimate_amplitudes(Frame(x, FS), [1197, 2394])[0]])
    np.testing.assert_allclose(np.mean(est, axis=0), [1.0, 0.5], rtol=0.02)


def test_polish_moves_toward_truth_within_bound():
    fr = tone_frame([1197.3], 819, snr_db=20, seed=5)
    f = polish_frequencies(fr, [1198.5])
    assert abs(f[0] - 1197.3) < 0.5
    assert abs(f[0] - 1198.5) <= FS / (2 * 819) + 1e-9
    assert polish_frequencies(fr, []).size == 0


def test_estimate_record():
    e = FrequencyEstimate(1197.0, 0.28, 0.1, 0.99, frame_id=3)
    assert e.to_dict()["frame_id"] == 3
    assert isinstance(MusicPolynomial(np.ones(3), 2).evaluate(1.0), np.ndarray)
