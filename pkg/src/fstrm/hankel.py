"""Implicit Hankel operator with FFT-based matrix-vector products."""
from __future__ import annotations

import numpy as np
from scipy import fft as sfft

from .errors import DensifyRefused, ValidationError
from .signals import Frame

DENSE_CAP = 4_000_000
MIN_FRAME = 12


class HankelOperator:
    """The L x M matrix with entry ``(i, j) = source[i + j]``, never stored densely.

    Both products are correlations of the source with the operand, evaluated as
    a single zero-padded circular convolution. Any transform length
    ``>= L + M - 1`` keeps the valid lags free of wrap-around.
    """

    def __init__(self, source, rows: int, cols: int | None = None):
        x = np.asarray(source, dtype=float)
        if x.ndim != 1:
            raise ValidationError("source must be one-dimensional")
        if cols is None:
            cols = x.size - rows + 1
        if rows < 1 or cols < 1 or rows + cols - 1 > x.size:
            raise ValidationError(f"bad Hankel shape {rows}x{cols} for {x.size} samples")
        self.source = x[:rows + cols - 1].copy()
        self.source.setflags(write=False)
        self.L = int(rows)
        self.M = int(cols)
        self.fft_len = sfft.next_fast_len(self.L + self.M - 1, real=True)
        self._spectrum = sfft.rfft(self.source, self.fft_len)
        self._spectrum.setflags(write=False)

    @property
    def shape(self):
        return (self.L, self.M)

    def _correlate(self, w, offset, count):
        # conv(source, reversed(w))[offset:offset+count]
        wf = sfft.rfft(w[::-1], self.fft_len)
        return sfft.irfft(self._spectrum * wf, self.fft_len)[offset:offset + count]

    def hv(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        if v.shape != (self.M,):
            raise ValidationError(f"expected vector of length {self.M}, got {v.shape}")
        return self._correlate(v, self.M - 1, self.L)

    def htu(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        if u.shape != (self.L,):
            raise ValidationError(f"expected vector of length {self.L}, got {u.shape}")
        return self._correlate(u, self.L - 1, self.M)

    def frobenius_sq(self) -> float:
        """Squared Frobenius norm; sample n appears on min(n+1, L, M, L+M-1-n) entries."""
        n = np.arange(self.source.size)
        counts = np.minimum.reduce([n + 1, np.full_like(n, self.L), np.full_like(n, self.M),
                                    self.L + self.M - 1 - n])
        return float(np.dot(counts, self.source ** 2))

    def dense(self, cap: int = DENSE_CAP) -> np.ndarray:
        if self.L * self.M > cap:
            raise DensifyRefused(f"{self.L}x{self.M} exceeds dense cap of {cap} entries")
        idx = np.arange(self.L)[:, None] + np.arange(self.M)[None, :]
        return self.source[idx]

    def __repr__(self):
        return f"HankelOperator(L={self.L}, M={self.M}, fft_len={self.fft_len})"


def hankel_dims(n: int) -> tuple[int, int]:
    """Row/column counts for an n-sample frame: L = floor(n/3), M = n - L + 1."""
    if n < MIN_FRAME:
        raise ValidationError(f"frame needs at least {MIN_FRAME} samples, got {n}")
    L = n // 3
    return L, n - L + 1


def make_hankel(frame: Frame | np.ndarray) -> HankelOperator:
    x = frame.samples if isinstance(frame, Frame) else np.asarray(frame, dtype=float)
    L, M = hankel_dims(x.size)
    return HankelOperator(x, L, M)


def hv(op: HankelOperator, v) -> np.ndarray:
    return op.hv(v)


def htu(op: HankelOperator, u) -> np.ndarray:
    return op.htu(u)


def dense(op: HankelOperator, cap: int = DENSE_CAP) -> np.ndarray:
    return op.dense(cap)
