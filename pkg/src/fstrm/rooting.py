"""Root-MUSIC: null-spectrum polynomial, companion rooting, unit-circle gating.

The rooting aperture is ``L_r`` rows of the signal basis. With ``stride > 1``
the basis rows are interleaved (row ``s*stride + o`` goes to aperture element
``s``, offset ``o``), so an aperture of ``L_r`` spans ``L_r*stride`` samples.
Roots then sit at ``exp(j*stride*omega)`` and are unfolded against coarse
anchors from a contiguous pass.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import fft as sfft
from scipy.optimize import least_squares

from .errors import NoSignalEnergy, ValidationError
from .signals import Frame

MERGE_HZ = 0.05


@dataclass(frozen=True)
class MusicPolynomial:
    """Coefficients c_m for lags m = -(L_r-1) .. L_r-1 (ascending)."""

    coefficients: np.ndarray
    aperture: int

    def evaluate(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        lags = np.arange(-(self.aperture - 1), self.aperture)
        return np.sum(self.coefficients[:, None] * z.ravel()[None, :] ** lags[:, None], axis=0).reshape(z.shape)

    def on_circle(self, omega) -> np.ndarray:
        """Real null-spectrum value at angular frequencies ``omega``."""
        return self.evaluate(np.exp(1j * np.asarray(omega, dtype=float))).real


@dataclass(frozen=True)
class FrequencyEstimate:
    frequency_hz: float
    amplitude: float
    phase_rad: float
    root_radius: float
    frame_id: int = 0
    confidence: float = 1.0
    snr_linear: float = math.nan

    def to_dict(self):
        return {
            "frequency_hz": self.frequency_hz, "amplitude": self.amplitude,
            "phase_rad": self.phase_rad, "root_radius": self.root_radius,
            "frame_id": self.frame_id, "confidence": self.confidence,
        }


def refine_root_angles(poly: MusicPolynomial, omegas, max_step: float | None = None,
                       iterations: int = 8) -> np.ndarray:
    """Newton steps on d/dw of the null spectrum, starting at root angles.

    A tone is a double root of the null-spectrum polynomial, so its computed
    angle carries about sqrt(machine eps) relative error; the derivative has a
    simple zero there and Newton recovers full precision. Steps that would
    move further than ``max_step`` (default 0.1 * 2 pi / L_r) are rejected.
    """
    c = np.asarray(poly.coefficients)
    m = np.arange(-(poly.aperture - 1), poly.aperture)
    if max_step is None:
        max_step = 0.1 * 2 * np.pi / poly.aperture
    out = []
    for w0 in np.atleast_1d(np.asarray(omegas, dtype=float)):
        w = w0
        for _ in range(iterations):
            e = np.exp(1j * m * w)
            d1 = np.real(np.sum(1j * m * c * e))
            d2 = np.real(np.sum(-(m ** 2) * c * e))
            if d2 <= 0:
                break
            step = d1 / d2
            w -= step
            if abs(step) < 1e-15 * max(1.0, abs(w)):
                break
        out.append(w if abs(w - w0) <= max_step else w0)
    return np.array(out)


def orthonormalize(basis) -> np.ndarray:
    B = np.asarray(basis)
    if B.shape[1] == 0:
        return B
    Q, _ = np.linalg.qr(B)
    return Q


def aperture_basis(signal_basis, L_r: int, stride: int = 1) -> np.ndarray:
    """Orthonormal L_r x p basis for the (possibly strided) rooting aperture.

    For ``stride == 1`` this is the first ``L_r`` rows, re-orthonormalized.
    Otherwise all ``stride`` interleaved row sets are stacked side by side and
    the dominant p-dimensional column space is kept.
    """
    V = np.asarray(signal_basis)
    rows, p = V.shape
    if L_r < 2 or L_r * stride > rows:
        raise ValidationError(f"aperture {L_r} x stride {stride} exceeds {rows} basis rows")
    if p == 0:
        return V[:L_r]
    if stride == 1:
        return orthonormalize(V[:L_r])
    W = V[:L_r * stride].reshape(L_r, stride, p).reshape(L_r, stride * p)
    Uw, _, _ = np.linalg.svd(W, full_matrices=False)
    return Uw[:, :p]


def null_spectrum_coefficients(basis, L_r: int | None = None) -> np.ndarray:
    """c_m = L_r * delta_m - sum_i sum_n q_i[n] conj(q_i[n+m]); p = 0 allowed.

    Evaluated on z = exp(j w), sum_m c_m z^m is ||(I - Q Q^H) s(w)||^2 with
    s(w)[n] = exp(j w n).
    """
    Q = np.asarray(basis)
    if L_r is None:
        L_r = Q.shape[0]
    Q = Q[:L_r]
    n_lags = 2 * L_r - 1
    c = np.zeros(n_lags, dtype=complex)
    c[L_r - 1] = L_r
    if Q.shape[1]:
        nfft = sfft.next_fast_len(n_lags)
        power = np.sum(np.abs(sfft.fft(Q, nfft, axis=0)) ** 2, axis=1)
        # ifft(|F q|^2)[l] = sum_n conj(q[n]) q[n+l] = conj(r[l]) = r[-l]
        acf = sfft.ifft(power)
        lags = np.arange(-(L_r - 1), L_r)
        c -= acf[(-lags) % nfft]
    if np.isrealobj(Q):
        c = c.real.astype(complex)
    return c


def music_polynomial(signal_basis, L_r: int) -> MusicPolynomial:
    Q = np.asarray(signal_basis)
    if Q.ndim != 2 or Q.shape[1] == 0:
        raise NoSignalEnergy("empty signal subspace")
    if L_r > Q.shape[0]:
        raise ValidationError(f"aperture {L_r} exceeds basis rows {Q.shape[0]}")
    return MusicPolynomial(null_spectrum_coefficients(Q, L_r), L_r)


def companion_matrix(coeffs_ascending) -> np.ndarray:
    """Companion matrix whose last column is -c_i / c_n (monic normalization)."""
    c = np.asarray(coeffs_ascending, dtype=complex)
    n = c.size - 1
    C = np.zeros((n, n), dtype=complex)
    C[np.arange(1, n), np.arange(n - 1)] = 1.0
    C[:, -1] = -c[:-1] / c[-1]
    return C


def companion_roots(poly) -> np.ndarray:
    """All roots of the polynomial via eigenvalues of its companion matrix.

    Accepts a MusicPolynomial or ascending coefficients. Negligible leading
    coefficients are deflated; trailing zeros become roots at the origin.
    """
    c = np.asarray(poly.coefficients if isinstance(poly, MusicPolynomial) else poly, dtype=complex)
    scale = np.max(np.abs(c)) if c.size else 0.0
    if scale == 0:
        raise NoSignalEnergy("polynomial is identically zero")
    nz = np.flatnonzero(np.abs(c) > 1e-12 * scale)
    hi, lo = nz[-1], nz[0]
    c = c[lo:hi + 1]
    roots = [np.zeros(lo, dtype=complex)]
    if c.size > 1:
        C = companion_matrix(c)
        if np.all(np.isreal(c)):
            C = C.real
        roots.append(np.linalg.eigvals(C).astype(complex))
    return np.concatenate(roots)


def _gate(roots, radius_tol):
    r = np.abs(roots)
    keep = (np.abs(1 - r) < radius_tol) & (r <= 1 + 1e-12)
    return roots[keep]


def _rank(roots):
    return roots[np.argsort(np.abs(1 - np.abs(roots)), kind="stable")]


def roots_to_frequencies(roots, fs: float, p: int, radius_tol: float = 0.1,
                         stride: int = 1, anchors_hz=None) -> list[tuple[float, float]]:
    """Gate roots to the unit circle and convert angles to Hz.

    Keeps inside-circle members with ``|1 - |z|| < radius_tol`` and returns at
    most ``ceil(p/2)`` ``(frequency_hz, radius)`` pairs ranked by closeness to
    the circle. DC and Nyquist roots are dropped. With ``stride > 1`` each
    conjugate pair is unfolded to the alias nearest one of ``anchors_hz``.
    """
    if fs <= 0:
        raise ValidationError("fs must be > 0")
    roots = _rank(_gate(np.asarray(roots, dtype=complex), radius_tol))
    limit = math.ceil(p / 2)
    nyq = fs / 2
    out = []
    if stride == 1:
        for z in roots:
            f = fs / (2 * np.pi) * np.angle(z)
            if 0 < f < nyq and not math.isclose(f, nyq) and f > 1e-9 * fs:
                out.append((float(f), float(abs(z))))
    else:
        anchors = np.asarray(anchors_hz if anchors_hz is not None else [], dtype=float)
        if anchors.size == 0:
            return []
        for z in roots:
            th = float(np.angle(z))
            if th < 0:
                continue  # its conjugate twin carries the same information
            best = None
            for angle in (th, -th):
                f, dist = _unfold(angle, stride, fs, anchors)
                if f is not None and (best is None or dist < best[1]):
                    best = (f, dist)
            if best is None:
                continue
            f = best[0]
            if 0 < f < nyq and f > 1e-9 * fs:
                out.append((float(f), float(abs(z))))
    return _merge(out)[:limit]


def _unfold(angle, stride, fs, anchors):
    # aliases of angle/stride spaced 2*pi/stride apart; pick nearest to an anchor
    step = fs / stride
    base = fs / (2 * np.pi) * angle / stride
    k = np.round((anchors - base) / step)
    cands = base + k * step
    dist = np.abs(cands - anchors)
    i = int(np.argmin(dist))
    if dist[i] > step / 2:
        return None, math.inf
    return float(cands[i]), float(dist[i])


def _merge(pairs):
    """Collapse estimates closer than MERGE_HZ; keeps ranking order of the first member."""
    merged = []
    for f, r in pairs:
        for i, (g, rg, n) in enumerate(merged):
            if abs(f - g) < MERGE_HZ:
                merged[i] = ((g * n + f) / (n + 1), rg, n + 1)
                break
        else:
            merged.append((f, r, 1))
    return [(f, r) for f, r, _ in merged]


def design_matrix(n_samples: int, freqs, fs: float) -> np.ndarray:
    n = np.arange(n_samples, dtype=float)[:, None]
    w = 2 * np.pi * np.asarray(freqs, dtype=float)[None, :] / fs
    return np.hstack([np.cos(w * n), np.sin(w * n)])


def estimate_amplitudes(frame: Frame, freqs) -> tuple[list[tuple[float, float]], bool]:
    """Least-squares cosine/sine fit at fixed frequencies.

    Returns ``([(amplitude, phase), ...], ridge_used)``. ``phase`` follows
    ``A cos(w n + phase)``. Frequencies closer than ``0.1 / duration`` Hz make
    the design near-collinear, so a small ridge term is added.
    """
    freqs = np.asarray(freqs, dtype=float)
    if freqs.size == 0:
        return [], False
    x = frame.samples
    fs = frame.fs_hz
    if np.any(freqs <= 0) or np.any(freqs >= fs / 2):
        raise ValidationError("frequencies must lie in (0, fs/2)")
    if np.unique(freqs).size != freqs.size:
        raise ValidationError("frequencies must be distinct")
    A = design_matrix(x.size, freqs, fs)
    sorted_f = np.sort(freqs)
    ridge = freqs.size > 1 and np.min(np.diff(sorted_f)) < 0.1 / frame.duration_s
    if ridge:
        lam = 1e-6 * np.trace(A.T @ A) / A.shape[1]
        coef = np.linalg.solve(A.T @ A + lam * np.eye(A.shape[1]), A.T @ x)
    else:
        coef = np.linalg.lstsq(A, x, rcond=None)[0]
    K = freqs.size
    a, b = coef[:K], coef[K:]
    return [(float(math.hypot(ai, bi)), float(math.atan2(-bi, ai))) for ai, bi in zip(a, b)], bool(ridge)


def polish_frequencies(frame: Frame, freqs, max_shift_hz: float | None = None) -> np.ndarray:
    """Local least-squares refinement of tone frequencies on the frame samples.

    Minimizes the residual of the best cosine/sine fit over the frequencies
    only (amplitudes are projected out), starting from ``freqs`` and bounded to
    ``+-max_shift_hz`` (default: half a Rayleigh bin, fs / (2 N)).
    """
    f0 = np.asarray(freqs, dtype=float)
    if f0.size == 0:
        return f0
    x = frame.samples
    fs = frame.fs_hz
    if max_shift_hz is None:
        max_shift_hz = fs / (2 * x.size)
    lo = np.maximum(f0 - max_shift_hz, 1e-6 * fs)
    hi = np.minimum(f0 + max_shift_hz, fs / 2 * (1 - 1e-6))

    def resid(f):
        A = design_matrix(x.size, f, fs)
        return A @ np.linalg.lstsq(A, x, rcond=None)[0] - x

    try:
        sol = least_squares(resid, np.clip(f0, lo, hi), bounds=(lo, hi), method="trf",
                            x_scale=max_shift_hz, xtol=1e-10, ftol=1e-12, max_nfev=50)
    except (ValueError, np.linalg.LinAlgError):
        return f0
    f = sol.x
    if not np.all(np.isfinite(f)) or 0.5 * np.dot(sol.fun, sol.fun) > 0.5 * np.dot(resid(f0), resid(f0)):
        return f0
    return f
