"""Brute-force references: dense SVD, covariance Root-MUSIC, grid MUSIC, periodogram."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import fft as sfft

from .errors import ValidationError
from .hankel import HankelOperator
from .rooting import (aperture_basis, companion_roots, music_polynomial, refine_root_angles,
                      roots_to_frequencies)
from .signals import Frame, window_weights
from .subspace import select_order


@dataclass
class OracleResult:
    frequencies: list[float]
    singular_or_eigen_values: list[float]
    method_tag: str
    order: int = 0
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        self.frequencies = sorted(float(f) for f in self.frequencies)


def dense_svd(op: HankelOperator):
    """Full SVD of the materialized Hankel matrix: (U, s, Vt)."""
    return np.linalg.svd(op.dense(), full_matrices=False)


def fb_covariance(x, size: int) -> np.ndarray:
    """Forward-backward averaged covariance of length-``size`` sliding snapshots."""
    x = np.asarray(x, dtype=float)
    Y = np.lib.stride_tricks.sliding_window_view(x, size)
    C = Y.T @ Y / Y.shape[0]
    return 0.5 * (C + C[::-1, ::-1])


def classical_root_music(frame: Frame, p="auto", L_cov: int = 64, *, rooting_aperture: int | None = None,
                         order_threshold: float = 0.9, k_max: int = 15, radius_tol: float = 0.1,
                         detect_ratio: float | None = 4.0, refine: bool = True) -> OracleResult:
    """Root-MUSIC from a full eigendecomposition of the sample covariance.

    With ``p="auto"`` the order comes from the cumulative-energy rule over
    the top ``k_max`` eigenvalues, rounded up to whole real-tone pairs, and
    capped by the number of eigenvalues exceeding ``detect_ratio`` times the
    mean of the remaining ones. ``refine`` applies Newton steps to each
    gated root angle (see ``refine_root_angles``).
    """
    x = frame.samples
    if L_cov > x.size // 2 or L_cov < 2:
        raise ValidationError(f"L_cov must lie in [2, N/2], got {L_cov}")
    C = fb_covariance(x, L_cov)
    lam, E = np.linalg.eigh(C)
    lam = np.clip(lam[::-1], 0.0, None)
    E = E[:, ::-1]
    if p == "auto":
        top = lam[:min(k_max, L_cov)]
        if top.sum() <= 0:
            return OracleResult([], lam.tolist(), "classical-root-music", 0)
        order = select_order(np.sqrt(top), order_threshold)
        order += order % 2
        if detect_ratio is not None:
            rest = lam[min(k_max, L_cov - 1):]
            floor = rest.mean() if rest.size else lam[-1]
            det = int(np.sum(lam > detect_ratio * floor)) if floor > 0 else L_cov
            order = min(order, det + det % 2)
    else:
        order = int(p)
    if order >= L_cov:
        raise ValidationError("signal order leaves no noise subspace (singular covariance)")
    if order == 0:
        return OracleResult([], lam.tolist(), "classical-root-music", 0)
    L_r = rooting_aperture or L_cov
    Q = aperture_basis(E[:, :order], L_r)
    poly = music_polynomial(Q, L_r)
    fr = sorted(roots_to_frequencies(companion_roots(poly), frame.fs_hz, order, radius_tol))
    freqs = [f for f, _ in fr]
    if refine and freqs:
        w = refine_root_angles(poly, 2 * np.pi * np.array(freqs) / frame.fs_hz)
        freqs = (w * frame.fs_hz / (2 * np.pi)).tolist()
    return OracleResult(freqs, lam.tolist(), "classical-root-music", order,
                        {"radii": [r for _, r in fr]})


def periodogram(frame: Frame, window: str = "rectangular"):
    """One-sided |FFT|^2 / N on the frame's natural grid (spacing fs/N)."""
    x = frame.samples * window_weights(window, len(frame))
    spec = np.abs(sfft.rfft(x)) ** 2 / x.size
    freqs = sfft.rfftfreq(x.size, 1.0 / frame.fs_hz)
    return freqs, spec


def periodogram_peaks(frame: Frame, count: int, window: str = "rectangular") -> list[float]:
    """Frequencies of the ``count`` largest local maxima of the periodogram."""
    f, P = periodogram(frame, window)
    inner = np.flatnonzero((P[1:-1] > P[:-2]) & (P[1:-1] >= P[2:])) + 1
    top = inner[np.argsort(P[inner])[::-1][:count]]
    return sorted(float(v) for v in f[top])


def periodogram_estimate(frame: Frame, count: int) -> OracleResult:
    return OracleResult(periodogram_peaks(frame, count), [], "periodogram", count)


def spectral_music_grid(signal_basis, grid_size: int) -> np.ndarray:
    """Null spectrum ||(I - Q Q^H) s(w)||^2 at w_k = 2 pi k / grid_size."""
    Q = np.asarray(signal_basis)
    L_r = Q.shape[0]
    if grid_size < 2 * L_r:
        raise ValidationError("grid_size must be at least twice the aperture")
    if Q.shape[1] == 0:
        return np.full(grid_size, float(L_r))
    return L_r - np.sum(np.abs(sfft.fft(Q, grid_size, axis=0)) ** 2, axis=1)


def grid_minima(values, count: int) -> np.ndarray:
    """Indices of the ``count`` deepest circular local minima."""
    v = np.asarray(values)
    left, right = np.roll(v, 1), np.roll(v, -1)
    idx = np.flatnonzero((v <= left) & (v < right))
    return idx[np.argsort(v[idx])][:count]
