"""Frequency tracks: random-walk Kalman filter plus gated Hungarian association."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import ValidationError
from .rooting import FrequencyEstimate

TWO_PI = 2 * math.pi
TENTATIVE, CONFIRMED, DEAD = "tentative", "confirmed", "dead"


@dataclass(frozen=True)
class TrackingConfig:
    """Process noise is diag(1 Hz^2, 0.01^2 g^2, 0.1^2 rad^2) per frame."""

    process_noise: tuple[float, float, float] = (1.0, 1e-4, 1e-2)
    gate_hz: float = 5.0
    confirm_hits: int = 3
    max_misses: int = 5
    measurement_noise_scale: float = 1.0

    def __post_init__(self):
        if len(self.process_noise) != 3 or min(self.process_noise) <= 0:
            raise ValidationError("process_noise needs three positive variances")
        if self.gate_hz <= 0 or self.confirm_hits < 1 or self.max_misses < 1:
            raise ValidationError("gate_hz, confirm_hits and max_misses must be positive")
        if self.measurement_noise_scale <= 0:
            raise ValidationError("measurement_noise_scale must be > 0")

    @property
    def Q(self) -> np.ndarray:
        return np.diag(self.process_noise)


@dataclass
class TrackPoint:
    frame_id: int
    f_hz: float
    amplitude: float
    phase: float
    measured: bool
    confirmed: bool = False


@dataclass
class TrackState:
    """State ``[f_hz, amplitude, phase_rad]`` with a 3x3 covariance."""

    x: np.ndarray
    P: np.ndarray
    track_id: int
    hits: int = 1
    misses: int = 0
    streak: int = 1
    status: str = TENTATIVE
    points: list[TrackPoint] = field(default_factory=list)
    ever_confirmed: bool = False

    @property
    def frequency_hz(self) -> float:
        return float(self.x[0])

    @property
    def amplitude(self) -> float:
        return float(self.x[1])

    def confirmed_amplitude(self) -> float:
        """Mean filtered amplitude over measured points."""
        amps = [pt.amplitude for pt in self.points if pt.measured]
        return float(np.mean(amps)) if amps else self.amplitude

    def confirmed_frequency(self) -> float:
        fs = [pt.f_hz for pt in self.points if pt.measured]
        return float(np.mean(fs)) if fs else self.frequency_hz


def wrap_phase(phi):
    return np.mod(phi, TWO_PI)


def wrap_innovation(d):
    """Map to (-pi, pi]."""
    d = np.mod(d + math.pi, TWO_PI) - math.pi
    return np.where(d == -math.pi, math.pi, d)


def predict(track: TrackState, cfg: TrackingConfig = TrackingConfig()) -> TrackState:
    x = track.x.copy()
    x[2] = wrap_phase(x[2])
    P = track.P + cfg.Q
    return replace(track, x=x, P=0.5 * (P + P.T))


def _check_psd(R):
    R = np.asarray(R, dtype=float)
    if R.shape != (3, 3) or not np.allclose(R, R.T, atol=1e-12 * max(1.0, np.abs(R).max())):
        raise ValidationError("R must be a symmetric 3x3 matrix")
    if np.min(np.linalg.eigvalsh(R)) < -1e-12 * max(1.0, np.abs(R).max()):
        raise ValidationError("R must be positive semidefinite")
    return R


def update(track: TrackState, meas: FrequencyEstimate, R) -> TrackState:
    """Kalman update with H = I; phase innovation wrapped to (-pi, pi]."""
    R = _check_psd(R)
    z = np.array([meas.frequency_hz, meas.amplitude, meas.phase_rad])
    innov = z - track.x
    innov[2] = wrap_innovation(innov[2])
    S = track.P + R
    K = np.linalg.solve(S.T, track.P.T).T
    x = track.x + K @ innov
    x[1] = max(x[1], 0.0)
    x[2] = wrap_phase(x[2])
    IK = np.eye(3) - K
    # Joseph form keeps P symmetric PSD
    P = IK @ track.P @ IK.T + K @ R @ K.T
    return replace(track, x=x, P=0.5 * (P + P.T), hits=track.hits + 1, misses=0,
                   streak=track.streak + 1)


def measurement_noise(est: FrequencyEstimate, snr_linear: float,
                      cfg: TrackingConfig = TrackingConfig()) -> np.ndarray:
    """R = c_R * diag(1, 0.01 A^2, 0.01) / snr."""
    if not snr_linear > 0:
        raise ValidationError("snr_linear must be > 0")
    return cfg.measurement_noise_scale * np.diag([1.0, 0.01 * est.amplitude ** 2, 0.01]) / snr_linear


@dataclass
class Assignment:
    pairs: list[tuple[int, int]]
    unmatched_tracks: list[int]
    unmatched_estimates: list[int]

    def cost(self, track_freqs, est_freqs) -> float:
        return float(sum(abs(track_freqs[i] - est_freqs[j]) for i, j in self.pairs))


def associate(track_freqs, est_freqs, gate_hz: float = 5.0) -> Assignment:
    """Minimum-total-|df| assignment; pairs beyond ``gate_hz`` are forbidden.

    Among assignments the one maximizing the number of gated pairs is chosen,
    then minimal cost among those.
    """
    tf = np.asarray(track_freqs, dtype=float)
    ef = np.asarray(est_freqs, dtype=float)
    nt, ne = tf.size, ef.size
    if nt == 0 or ne == 0:
        return Assignment([], list(range(nt)), list(range(ne)))
    cost = np.abs(tf[:, None] - ef[None, :])
    feasible = cost <= gate_hz
    # forbidden pairs get a penalty larger than any feasible total, so the
    # solver first maximizes the matched count
    big = gate_hz * (min(nt, ne) + 1) + 1.0
    c = np.where(feasible, cost, big)
    rows, cols = linear_sum_assignment(c)
    pairs = [(int(i), int(j)) for i, j in zip(rows, cols) if feasible[i, j]]
    mt = {i for i, _ in pairs}
    me = {j for _, j in pairs}
    return Assignment(pairs, [i for i in range(nt) if i not in mt], [j for j in range(ne) if j not in me])


def brute_force_assignment(track_freqs, est_freqs, gate_hz: float = 5.0) -> tuple[int, float]:
    """(max matched count, min cost) by enumerating all partial matchings. Small inputs only."""
    tf = list(track_freqs)
    ef = list(est_freqs)
    best = (0, 0.0)
    n = len(tf)
    for r in range(min(n, len(ef)), 0, -1):
        found = None
        for ti in itertools.combinations(range(n), r):
            for ej in itertools.permutations(range(len(ef)), r):
                cs = [abs(tf[a] - ef[b]) for a, b in zip(ti, ej)]
                if max(cs) <= gate_hz:
                    tot = sum(cs)
                    if found is None or tot < found:
                        found = tot
        if found is not None:
            return r, found
    return best


class Tracker:
    """Sequential per-channel track manager. Feed frames in time order."""

    def __init__(self, cfg: TrackingConfig = TrackingConfig()):
        self.cfg = cfg
        self.tracks: list[TrackState] = []
        self.archive: list[TrackState] = []
        self._next_id = 0

    def _spawn(self, est: FrequencyEstimate, R) -> TrackState:
        tr = TrackState(
            x=np.array([est.frequency_hz, est.amplitude, wrap_phase(est.phase_rad)]),
            P=np.array(R, dtype=float), track_id=self._next_id,
            points=[TrackPoint(est.frame_id, est.frequency_hz, est.amplitude, est.phase_rad, True)],
        )
        self._next_id += 1
        if self.cfg.confirm_hits <= 1:
            tr.status = CONFIRMED
            tr.ever_confirmed = True
            tr.points[0].confirmed = True
        return tr

    def step(self, frame_id: int, estimates, noise=None) -> list[dict]:
        """Predict, associate, update, age. ``noise[i]`` is R for estimate i.

        Returns a snapshot of live tracks after the step, with each estimate's
        track id stored in ``self.last_assignment`` (estimate index -> id).
        """
        cfg = self.cfg
        estimates = list(estimates)
        if noise is None:
            noise = [measurement_noise(e, 1.0, cfg) for e in estimates]
        self.tracks = [predict(t, cfg) for t in self.tracks]
        asg = associate([t.frequency_hz for t in self.tracks],
                        [e.frequency_hz for e in estimates], cfg.gate_hz)
        self.last_assignment = {}
        for i, j in asg.pairs:
            t = update(self.tracks[i], estimates[j], noise[j])
            if t.status == TENTATIVE and t.streak >= cfg.confirm_hits:
                t.status = CONFIRMED
                t.ever_confirmed = True
            t.points.append(TrackPoint(frame_id, t.frequency_hz, t.amplitude, float(t.x[2]), True,
                                       t.status == CONFIRMED))
            self.tracks[i] = t
            self.last_assignment[j] = t.track_id
        for i in asg.unmatched_tracks:
            t = self.tracks[i]
            t.misses += 1
            t.streak = 0
            if t.misses >= cfg.max_misses:
                t.status = DEAD
            t.points.append(TrackPoint(frame_id, t.frequency_hz, t.amplitude, float(t.x[2]), False,
                                       t.status == CONFIRMED))
        alive = []
        for t in self.tracks:
            (self.archive if t.status == DEAD else alive).append(t)
        for j in asg.unmatched_estimates:
            t = self._spawn(estimates[j], noise[j])
            t.points[0].frame_id = frame_id
            alive.append(t)
            self.last_assignment[j] = t.track_id
        self.tracks = alive
        return [
            {"id": t.track_id, "status": t.status, "f_hz": t.frequency_hz, "amplitude": t.amplitude}
            for t in self.tracks
        ]

    def all_tracks(self) -> list[TrackState]:
        return sorted(self.archive + self.tracks, key=lambda t: t.track_id)

    def confirmed_tracks(self) -> list[TrackState]:
        return [t for t in self.all_tracks() if t.ever_confirmed]


def step(tracker: Tracker, frame_id: int, frame_estimates, noise=None):
    snap = tracker.step(frame_id, frame_estimates, noise)
    return tracker, snap


def continuity(tracks, truth_hz: float, frame_ids, gate_hz: float = 5.0) -> float:
    """Fraction of ``frame_ids`` where exactly one confirmed track sits within
    ``gate_hz`` of the true frequency, and it is the same track throughout.

    Coasted (unmeasured) points count as covered. The track with the most
    covered frames is taken as the one that should carry the component.
    """
    frame_ids = list(frame_ids)
    if not frame_ids:
        return 0.0
    cover: dict[int, list[int]] = {}
    for t in tracks:
        for pt in t.points:
            if pt.confirmed and abs(pt.f_hz - truth_hz) <= gate_hz:
                cover.setdefault(pt.frame_id, []).append(t.track_id)
    counts: dict[int, int] = {}
    for ids in cover.values():
        if len(ids) == 1:
            counts[ids[0]] = counts.get(ids[0], 0) + 1
    if not counts:
        return 0.0
    best = max(counts, key=lambda k: (counts[k], -k))
    hit = sum(1 for f in frame_ids if cover.get(f) == [best])
    return hit / len(frame_ids)
