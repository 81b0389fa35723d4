"""Match confirmed tracks to bearing defect frequencies and grade harmonic content."""
from __future__ import annotations

from dataclasses import dataclass, field

from .errors import ValidationError
from .signals import FaultKinematics

MAX_ORDER = 5
CONFIDENCE_NOTE = "confidence = matched harmonic orders / 5 (heuristic)"


@dataclass(frozen=True)
class Harmonic:
    order: int
    frequency_hz: float
    amplitude: float


@dataclass
class FaultSignature:
    fault_type: str
    fundamental_hz: float
    harmonics: list[Harmonic] = field(default_factory=list)
    harmonic_ratios: list[float] = field(default_factory=list)
    confidence: float = 0.0

    def __post_init__(self):
        orders = [h.order for h in self.harmonics]
        if orders and (orders[0] != 1 or any(b <= a for a, b in zip(orders, orders[1:]))):
            raise ValidationError("harmonic orders must start at 1 and increase")

    @property
    def orders(self) -> list[int]:
        return [h.order for h in self.harmonics]

    def to_dict(self):
        return {
            "fault_type": self.fault_type,
            "fundamental_hz": self.fundamental_hz,
            "harmonics": [{"order": h.order, "frequency_hz": h.frequency_hz, "amplitude": h.amplitude}
                          for h in self.harmonics],
            "harmonic_ratios": self.harmonic_ratios,
            "confidence": self.confidence,
            "severity": severity_indicator(self),
            "confidence_note": CONFIDENCE_NOTE,
        }


def _track_fa(t):
    # accepts TrackState-like objects or (frequency, amplitude) tuples
    if isinstance(t, tuple):
        return float(t[0]), float(t[1])
    return t.confirmed_frequency(), t.confirmed_amplitude()


def match_fault(tracks, kin: FaultKinematics, freq_tol_hz: float = 2.5) -> list[FaultSignature]:
    """Collect harmonic families k*f0 (k = 1..5) of each defect frequency.

    ``tracks`` are track states (unconfirmed ones are skipped) or
    ``(frequency_hz, amplitude)`` tuples.
    A signature is emitted only when the fundamental is matched; for each
    order the closest track within ``freq_tol_hz`` is used.
    """
    fa = [_track_fa(t) for t in tracks if getattr(t, "ever_confirmed", True)]
    out = []
    for fault, f0 in kin.fault_frequencies().items():
        harmonics = []
        for k in range(1, MAX_ORDER + 1):
            target = k * f0
            near = [(abs(f - target), f, a) for f, a in fa if abs(f - target) <= freq_tol_hz]
            if near:
                _, f, a = min(near)
                harmonics.append(Harmonic(k, f, a))
        if not harmonics or harmonics[0].order != 1:
            continue
        sig = FaultSignature(fault, f0, harmonics, confidence=len(harmonics) / MAX_ORDER)
        if harmonics[0].amplitude > 0:
            sig.harmonic_ratios = harmonic_ratios(sig)
        out.append(sig)
    return out


def harmonic_ratios(sig: FaultSignature) -> list[float]:
    """Amplitude of each present order k >= 2 divided by the fundamental's."""
    if not sig.harmonics or sig.harmonics[0].order != 1:
        raise ValidationError("fundamental missing")
    a1 = sig.harmonics[0].amplitude
    if a1 <= 0:
        raise ValidationError("fundamental amplitude is zero")
    return [h.amplitude / a1 for h in sig.harmonics[1:]]


def severity_indicator(sig: FaultSignature) -> dict | None:
    """Second-to-fundamental ratio plus the fundamental amplitude, or None."""
    if sig.fault_type == "none" or not sig.harmonics:
        return None
    by_order = {h.order: h for h in sig.harmonics}
    if 1 not in by_order or 2 not in by_order or by_order[1].amplitude <= 0:
        return None
    return {"ratio2": by_order[2].amplitude / by_order[1].amplitude,
            "fundamental_amplitude": by_order[1].amplitude}
