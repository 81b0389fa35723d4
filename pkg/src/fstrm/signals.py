"""Synthetic vibration signals, framing and CSV sample I/O."""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import AliasingError, CsvFormatError, ValidationError

MAX_COMPONENTS = 50


@dataclass(frozen=True)
class SinusoidSpec:
    frequency_hz: float
    amplitude: float
    phase_rad: float = 0.0

    def __post_init__(self):
        for name in ("frequency_hz", "amplitude", "phase_rad"):
            if not math.isfinite(getattr(self, name)):
                raise ValidationError(f"{name} must be finite")
        if self.frequency_hz <= 0:
            raise ValidationError("frequency_hz must be > 0")
        if self.amplitude < 0:
            raise ValidationError("amplitude must be >= 0")
        if not 0.0 <= self.phase_rad < 2 * math.pi:
            raise ValidationError("phase_rad must lie in [0, 2*pi)")


@dataclass(frozen=True)
class SignalSpec:
    components: tuple[SinusoidSpec, ...]
    noise_std: float
    fs_hz: float
    duration_s: float
    rng_seed: int = 0
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))
        for name in ("noise_std", "fs_hz", "duration_s"):
            if not math.isfinite(getattr(self, name)):
                raise ValidationError(f"{name} must be finite")
        if self.noise_std < 0:
            raise ValidationError("noise_std must be >= 0")
        if self.fs_hz <= 0 or self.duration_s <= 0:
            raise ValidationError("fs_hz and duration_s must be > 0")
        if len(self.components) >= MAX_COMPONENTS:
            raise ValidationError(f"at most {MAX_COMPONENTS - 1} components supported")
        freqs = [c.frequency_hz for c in self.components]
        if len(set(freqs)) != len(freqs):
            raise ValidationError("component frequencies must be distinct")

    @property
    def n_samples(self) -> int:
        return int(round(self.duration_s * self.fs_hz))


@dataclass(frozen=True)
class Frame:
    """One analysis segment. ``samples`` is already windowed."""

    samples: np.ndarray
    fs_hz: float
    start_index: int = 0
    frame_id: int = 0

    def __post_init__(self):
        x = np.asarray(self.samples, dtype=float)
        if x.ndim != 1:
            raise ValidationError("frame samples must be one-dimensional")
        if not np.all(np.isfinite(x)):
            raise ValidationError("frame samples must be finite")
        if self.start_index < 0 or self.frame_id < 0:
            raise ValidationError("start_index and frame_id must be >= 0")
        x.setflags(write=False)
        object.__setattr__(self, "samples", x)

    def __len__(self):
        return self.samples.size

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.fs_hz

    @property
    def timestamp_s(self) -> float:
        return self.start_index / self.fs_hz


@dataclass(frozen=True)
class FaultKinematics:
    shaft_hz: float
    bpfi_hz: float
    bsf_hz: float
    ftf_hz: float

    def __post_init__(self):
        vals = (self.shaft_hz, self.bpfi_hz, self.bsf_hz, self.ftf_hz)
        if not all(math.isfinite(v) and v > 0 for v in vals):
            raise ValidationError("kinematic frequencies must be finite and > 0")
        if not self.ftf_hz < self.shaft_hz < self.bpfi_hz:
            raise ValidationError("expected ftf < shaft < bpfi")

    def fault_frequencies(self) -> dict[str, float]:
        return {"inner_race": self.bpfi_hz, "rolling_element": self.bsf_hz, "cage": self.ftf_hz}


def fault_kinematics_preset() -> FaultKinematics:
    """Test-rig kinematics: 12,000 RPM shaft with its bearing defect frequencies."""
    return FaultKinematics(shaft_hz=200.0, bpfi_hz=1197.0, bsf_hz=972.8, ftf_hz=80.25)


def generate(spec: SignalSpec) -> np.ndarray:
    """Sum of real cosines plus seeded white Gaussian noise.

    Sample ``n`` is ``sum_p A_p cos(2 pi f_p n / fs + phi_p) + w(n)`` with
    ``w ~ N(0, noise_std**2)`` drawn from a PCG64 generator seeded with
    ``spec.rng_seed``.
    """
    nyq = spec.fs_hz / 2
    for c in spec.components:
        if c.frequency_hz >= nyq:
            raise AliasingError(f"{c.frequency_hz} Hz is at or above Nyquist ({nyq} Hz)")
    n = np.arange(spec.n_samples, dtype=float)
    x = np.zeros(spec.n_samples)
    for c in spec.components:
        x += c.amplitude * np.cos(2 * np.pi * c.frequency_hz * n / spec.fs_hz + c.phase_rad)
    rng = np.random.default_rng(spec.rng_seed)
    if spec.noise_std > 0:
        x += rng.normal(0.0, spec.noise_std, spec.n_samples)
    return x


def window_weights(kind: str, n: int) -> np.ndarray:
    if kind == "rectangular":
        return np.ones(n)
    if kind == "hann":
        # periodic=False: symmetric taper, endpoints zero
        return np.hanning(n)
    raise ValidationError(f"unknown window {kind!r}")


def frames(samples, fs: float, frame_len: int, hop: int, window: str = "rectangular") -> list[Frame]:
    """Cut ``samples`` into frames ``[k*hop, k*hop + frame_len)``; a trailing partial frame is dropped."""
    x = np.asarray(samples, dtype=float)
    if hop < 1 or frame_len < 1:
        raise ValidationError("hop and frame_len must be >= 1")
    if frame_len > x.size:
        return []
    w = window_weights(window, frame_len)
    count = (x.size - frame_len) // hop + 1
    return [
        Frame(x[k * hop:k * hop + frame_len] * w, fs, start_index=k * hop, frame_id=k)
        for k in range(count)
    ]


_FS_HEADER = re.compile(r"^#\s*fs\s*=\s*(\S+)\s*$")


def load_csv(path, column: int = 0) -> tuple[np.ndarray, float | None]:
    """Read samples from a one-value-per-line file.

    An optional first line ``# fs=<value>`` carries the sampling rate. Rows may
    hold several comma-separated columns; ``column`` selects one.
    """
    text = Path(path).read_text()
    lines = text.splitlines()
    fs = None
    values = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            m = _FS_HEADER.match(line)
            if lineno == 1 and m:
                try:
                    fs = float(m.group(1))
                except ValueError:
                    raise CsvFormatError(f"bad fs header {line!r}", lineno) from None
            continue
        fields = line.split(",")
        if column >= len(fields):
            raise CsvFormatError(f"no column {column}", lineno)
        try:
            v = float(fields[column])
        except ValueError:
            raise CsvFormatError(f"not a number: {fields[column]!r}", lineno) from None
        values.append(v)
    if not values:
        raise CsvFormatError(f"{path}: no samples")
    return np.asarray(values), fs


def write_csv(path, samples, fs: float | None = None) -> None:
    with open(path, "w", newline="\n") as fh:
        if fs is not None:
            fh.write(f"# fs={fs:.17g}\n")
        for v in np.asarray(samples, dtype=float):
            fh.write(f"{v:.17g}\n")


# Harmonic-content rows (fundamental g, 2nd ratio, 3rd ratio) for the rig's
# fault conditions. Tone amplitudes are taken directly from these rows.
PROFILES: dict[str, dict] = {
    "c0a": {"fault": "none", "size_um": None, "fundamental": 0.0, "ratios": ()},
    "c1a": {"fault": "inner_race", "size_um": 450, "fundamental": 0.28, "ratios": (0.61, 0.42)},
    "c2a": {"fault": "inner_race", "size_um": 250, "fundamental": 0.15, "ratios": (0.52, 0.35)},
    "c3a": {"fault": "inner_race", "size_um": 150, "fundamental": 0.08, "ratios": (0.45, 0.28)},
    "c4a": {"fault": "rolling_element", "size_um": 450, "fundamental": 0.22, "ratios": (0.58, 0.39)},
    "c5a": {"fault": "rolling_element", "size_um": 250, "fundamental": 0.12, "ratios": (0.48, 0.31)},
    "c6a": {"fault": "rolling_element", "size_um": 150, "fundamental": 0.06, "ratios": (0.38, 0.22)},
}

PRESET_NOISE_STD = 0.01


def profile_spec(name: str, seed: int = 0, duration_s: float = 1.0, fs_hz: float = 51200.0,
                 noise_std: float = PRESET_NOISE_STD,
                 kin: FaultKinematics | None = None) -> SignalSpec:
    """Synthetic stand-in for one rig condition (not a dataset replay).

    Harmonic k of the fault frequency gets amplitude ``fundamental * ratio_k``;
    phases are drawn from the seed.
    """
    try:
        prof = PROFILES[name.lower()]
    except KeyError:
        raise ValidationError(f"unknown preset {name!r}; choose from {sorted(PROFILES)}") from None
    kin = kin or fault_kinematics_preset()
    rng = np.random.default_rng([seed, 0x5EED])
    comps = []
    if prof["fault"] != "none":
        f0 = kin.fault_frequencies()[prof["fault"]]
        amps = (prof["fundamental"],) + tuple(prof["fundamental"] * r for r in prof["ratios"])
        for k, a in enumerate(amps, start=1):
            comps.append(SinusoidSpec(k * f0, a, float(rng.uniform(0, 2 * np.pi))))
    return SignalSpec(tuple(comps), noise_std, fs_hz, duration_s, rng_seed=seed,
                      label=f"synthetic:{name.lower()}")
