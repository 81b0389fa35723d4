import math

import numpy as np
import pytest

from fstrm.signals import Frame, SignalSpec, SinusoidSpec, generate

FS = 51200.0


def tone_frame(freqs, n, snr_db=None, seed=0, amps=None, fs=FS, frame_id=0):
    """Real tones with seeded random phases; ``snr_db`` is per tone (A^2 / 2 sigma^2)."""
    freqs = list(freqs)
    amps = list(amps) if amps is not None else [1.0] * len(freqs)
    rng = np.random.default_rng([seed, 7])
    phases = rng.uniform(0, 2 * math.pi, len(freqs))
    sigma = 0.0 if snr_db is None else math.sqrt(amps[0] ** 2 / 2 / 10 ** (snr_db / 10))
    spec = SignalSpec(tuple(SinusoidSpec(f, a, p) for f, a, p in zip(freqs, amps, phases)),
                      noise_std=sigma, fs_hz=fs, duration_s=n / fs, rng_seed=seed)
    x = generate(spec)
    assert x.size == n
    return Frame(x, fs, frame_id=frame_id)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
