"""Per-frame estimation, the ordered frame-to-tracker hand-off, reports and the bench."""
from __future__ import annotations

import json
import math
import os
import resource
import statistics
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from importlib import resources
from typing import Iterable, Iterator

import numpy as np

from .config import PipelineConfig
from .diagnosis import match_fault
from .errors import NoSignalEnergy, ValidationError
from .hankel import make_hankel
from .oracle import classical_root_music, periodogram
from .rooting import (FrequencyEstimate, MERGE_HZ, aperture_basis, companion_roots,
                      estimate_amplitudes, music_polynomial,
                      polish_frequencies, roots_to_frequencies)
from .signals import (PROFILES, Frame, SignalSpec, SinusoidSpec, frames, generate, load_csv,
                      profile_spec)
from .subspace import decompose, signal_basis
from .tracking import Tracker, measurement_noise

STAGES = ("hankel", "lanczos", "rooting", "tracking")
STRIDE_MARGIN = 1.5  # folded-root separation, in units of 2 pi / L_r


@dataclass
class FrameReport:
    frame_id: int
    timestamp_s: float
    estimates: list[FrequencyEstimate]
    selected_order: int
    lanczos_iterations: int
    timings_us: dict[str, int] = field(default_factory=lambda: dict.fromkeys(STAGES, 0))
    stride: int = 1
    energy_order: int = 0
    noise_var: float = math.nan
    track_ids: list[int] = field(default_factory=list)

    def to_dict(self, timing: bool = True) -> dict:
        return {
            "frame_id": self.frame_id,
            "timestamp_s": self.timestamp_s,
            "selected_order": self.selected_order,
            "lanczos_iterations": self.lanczos_iterations,
            "stride": self.stride,
            "energy_order": self.energy_order,
            "estimates": [
                dict(e.to_dict(), track_id=(self.track_ids[i] if i < len(self.track_ids) else None))
                for i, e in enumerate(self.estimates)
            ],
            "timings_us": dict(self.timings_us) if timing else dict.fromkeys(STAGES, 0),
        }


def _us(t0: int) -> int:
    return max(0, (time.perf_counter_ns() - t0) // 1000)


def choose_stride(anchors_hz, fs: float, max_stride: int, L_r: int,
                  margin: float = STRIDE_MARGIN) -> int:
    """Largest stride whose folded roots (+-d*w for each anchor) stay apart.

    Searches ``max_stride`` down to ``max_stride // 2``; if no stride meets
    the margin the one with the widest folded separation wins.
    """
    if max_stride < 2:
        return 1
    w = 2 * np.pi * np.asarray(anchors_hz, dtype=float) / fs
    need = margin * 2 * np.pi / L_r
    best = (-1.0, max_stride)
    for d in range(max_stride, max(2, max_stride // 2) - 1, -1):
        a = np.concatenate([d * w, -d * w])
        if a.size < 2:
            return d
        gap = np.abs(np.angle(np.exp(1j * (a[:, None] - a[None, :]))))
        np.fill_diagonal(gap, np.inf)
        sep = float(gap.min())
        if sep >= need:
            return d
        if sep > best[0]:
            best = (sep, d)
    return best[1]


def _fit(frame: Frame, freqs, radii, order, cfg: PipelineConfig):
    """Amplitudes, phases, residual noise variance and FrequencyEstimates."""
    freqs = [f for f in freqs if 0 < f < frame.fs_hz / 2]
    radii = radii[:len(freqs)]
    if not freqs:
        return [], float(np.var(frame.samples))
    amps, _ = estimate_amplitudes(frame, freqs)
    x = frame.samples
    n = np.arange(x.size)
    model = np.zeros(x.size)
    for f, (a, ph) in zip(freqs, amps):
        model += a * np.cos(2 * np.pi * f * n / frame.fs_hz + ph)
    dof = max(x.size - 2 * len(freqs), 1)
    noise_var = float(np.sum((x - model) ** 2) / dof)
    ests = []
    for f, r, (a, ph) in zip(freqs, radii, amps):
        snr = a * a / (2 * noise_var) if noise_var > 0 else 1e12
        conf = float(np.clip(1 - abs(1 - r) / cfg.radius_tol, 0.0, 1.0))
        ests.append(FrequencyEstimate(float(f), a, ph, float(r), frame.frame_id, conf, float(snr)))
    ests.sort(key=lambda e: e.frequency_hz)
    return ests, noise_var


def _fstrm(frame: Frame, cfg: PipelineConfig, rep: FrameReport):
    fs = frame.fs_hz
    t0 = time.perf_counter_ns()
    op = make_hankel(frame)
    rep.timings_us["hankel"] = _us(t0)

    t0 = time.perf_counter_ns()
    try:
        dec = decompose(op, cfg.lanczos, cfg.order_threshold, cfg.detect_ratio,
                        order_rule=cfg.order_rule)
    except NoSignalEnergy:
        rep.timings_us["lanczos"] = _us(t0)
        return [], []
    rep.lanczos_iterations = dec.k_used
    p = dec.signal_order
    rep.selected_order = p
    rep.energy_order = dec.p
    rep.timings_us["lanczos"] = _us(t0)

    t0 = time.perf_counter_ns()
    found: list[tuple[float, float]] = []
    L_r = min(cfg.rooting_aperture, op.M)
    if p > 0 and L_r > p:
        V = signal_basis(dec, p)
        roots = companion_roots(music_polynomial(aperture_basis(V, L_r), L_r))
        coarse = roots_to_frequencies(roots, fs, p, cfg.radius_tol)
        found = coarse
        d = choose_stride([f for f, _ in coarse], fs, op.M // L_r, L_r) if cfg.interleave else 1
        if coarse and d >= 2:
            rep.stride = d
            roots = companion_roots(music_polynomial(aperture_basis(V, L_r, d), L_r))
            fine = roots_to_frequencies(roots, fs, p, cfg.radius_tol, stride=d,
                                        anchors_hz=[f for f, _ in coarse])
            # keep coarse anchors the fine pass missed entirely
            near = 2 * fs / len(frame)
            extra = [(f, r) for f, r in coarse if all(abs(f - g) > near for g, _ in fine)]
            found = (fine + extra)[:math.ceil(p / 2)] if fine else coarse
    freqs = [f for f, _ in found]
    radii = [r for _, r in found]
    if cfg.polish and freqs:
        freqs = list(polish_frequencies(frame, freqs))
        uniq = []  # two seeds may polish onto the same tone
        for i, f in enumerate(freqs):
            if all(abs(f - freqs[j]) >= MERGE_HZ for j in uniq):
                uniq.append(i)
        freqs = [freqs[i] for i in uniq]
        radii = [radii[i] for i in uniq]
    rep.timings_us["rooting"] = _us(t0)
    return freqs, radii


def _classical(frame: Frame, cfg: PipelineConfig, rep: FrameReport):
    t0 = time.perf_counter_ns()
    L_cov = min(cfg.rooting_aperture, len(frame) // 2)
    res = classical_root_music(frame, "auto", L_cov, order_threshold=cfg.order_threshold,
                               k_max=cfg.lanczos.k_max, radius_tol=cfg.radius_tol)
    rep.selected_order = res.order
    rep.timings_us["rooting"] = _us(t0)
    return res.frequencies, res.extra.get("radii", [1.0] * len(res.frequencies))


def _periodogram(frame: Frame, cfg: PipelineConfig, rep: FrameReport):
    t0 = time.perf_counter_ns()
    f, P = periodogram(frame, cfg.window if cfg.window == "hann" else "rectangular")
    inner = np.flatnonzero((P[1:-1] > P[:-2]) & (P[1:-1] >= P[2:])) + 1
    floor = float(np.median(P))
    inner = inner[P[inner] > max(cfg.detect_ratio, 1.0) * 10 * floor]
    top = inner[np.argsort(P[inner])[::-1][:cfg.lanczos.expected_components]]
    freqs = sorted(float(v) for v in f[top])
    rep.selected_order = 2 * len(freqs)
    rep.timings_us["rooting"] = _us(t0)
    return freqs, [1.0] * len(freqs)


_METHODS = {"fstrm": _fstrm, "classical": _classical, "periodogram": _periodogram}


def analyze_frame(frame: Frame, cfg: PipelineConfig = PipelineConfig()) -> FrameReport:
    """Estimate tone frequencies, amplitudes and phases in one frame."""
    rep = FrameReport(frame.frame_id, frame.timestamp_s, [], 0, 0)
    freqs, radii = _METHODS[cfg.method](frame, cfg, rep)
    rep.estimates, rep.noise_var = _fit(frame, list(freqs), list(radii), rep.selected_order, cfg)
    return rep


def _workers() -> int:
    raw = os.environ.get("FSTRM_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            raise ValidationError(f"FSTRM_THREADS must be an integer, got {raw!r}") from None
    return min(4, os.cpu_count() or 1)


def _feed(tracker: Tracker, rep: FrameReport, cfg: PipelineConfig) -> None:
    t0 = time.perf_counter_ns()
    noise = [measurement_noise(e, max(e.snr_linear, 1e-6), cfg.tracking) for e in rep.estimates]
    tracker.step(rep.frame_id, rep.estimates, noise)
    rep.track_ids = [tracker.last_assignment.get(i) for i in range(len(rep.estimates))]
    rep.timings_us["tracking"] = _us(t0)


def stream(frame_list: Iterable[Frame], cfg: PipelineConfig, tracker: Tracker | None = None,
           workers: int | None = None) -> Iterator[FrameReport]:
    """Analyze frames (possibly in parallel) and feed the tracker strictly in frame order."""
    tracker = tracker if tracker is not None else Tracker(cfg.tracking)
    workers = workers or _workers()
    if workers == 1:
        results = (analyze_frame(f, cfg) for f in frame_list)
        for rep in results:
            _feed(tracker, rep, cfg)
            yield rep
        return
    with ThreadPoolExecutor(max_workers=workers) as pool:
        # map() preserves submission order, which is the hand-off contract
        for rep in pool.map(lambda fr: analyze_frame(fr, cfg), frame_list):
            _feed(tracker, rep, cfg)
            yield rep


@dataclass
class PipelineReport:
    config_echo: dict
    method: str
    input_label: str
    frames: list[FrameReport]
    tracks: list
    signatures: list
    timing_summary: dict
    peak_rss_kb: int = 0

    def to_dict(self, timing: bool = True) -> dict:
        tracks = []
        for t in self.tracks:
            tracks.append({
                "id": t.track_id,
                "status": t.status,
                "ever_confirmed": bool(t.ever_confirmed),
                "points": [
                    {"frame_id": pt.frame_id, "f_hz": pt.f_hz, "amplitude": pt.amplitude,
                     "phase": pt.phase, "measured": pt.measured, "confirmed": pt.confirmed}
                    for pt in t.points
                ],
            })
        detections = [
            {"track_id": t.track_id, "f_hz": t.confirmed_frequency(),
             "count": sum(pt.measured for pt in t.points)}
            for t in self.tracks if t.ever_confirmed
        ]
        summary = dict(self.timing_summary) if timing else {}
        if timing:
            summary["peak_rss_kb"] = self.peak_rss_kb
        return {
            "method": self.method,
            "input": self.input_label,
            "config_echo": self.config_echo,
            "frames": [f.to_dict(timing) for f in self.frames],
            "tracks": tracks,
            "signatures": [
                s.to_dict() for s in self.signatures
            ],
            "detections": detections,
            "timing_summary": summary,
        }


def timing_summary(reports: list[FrameReport]) -> dict:
    out = {}
    for st in STAGES + ("total",):
        vals = [sum(r.timings_us.values()) if st == "total" else r.timings_us[st] for r in reports]
        out[st] = {
            "mean_us": statistics.fmean(vals) if vals else 0.0,
            "std_us": statistics.pstdev(vals) if len(vals) > 1 else 0.0,
        }
    return out


def resolve_input(source, cfg: PipelineConfig, seed: int = 0):
    """Turn a preset name, CSV path, SignalSpec or array into ``(samples, fs, label)``."""
    if isinstance(source, SignalSpec):
        return generate(source), source.fs_hz, source.label or "signal-spec"
    if isinstance(source, np.ndarray):
        return source, cfg.fs_hz, "array"
    text = str(source)
    if text.lower() in PROFILES:
        spec = profile_spec(text.lower(), seed=seed, fs_hz=cfg.fs_hz)
        return generate(spec), spec.fs_hz, spec.label
    samples, fs = load_csv(text)
    return samples, (fs if fs is not None else cfg.fs_hz), f"csv:{os.path.basename(text)}"


def run_pipeline(cfg: PipelineConfig, source, seed: int = 0,
                 workers: int | None = None) -> PipelineReport:
    samples, fs, label = resolve_input(source, cfg, seed)
    if fs != cfg.fs_hz:
        cfg = replace(cfg, fs_hz=float(fs))
    tracker = Tracker(cfg.tracking)
    reports = list(stream(frames(samples, fs, cfg.frame_len, cfg.hop, cfg.window), cfg,
                          tracker, workers))
    sigs = match_fault(tracker.confirmed_tracks(), cfg.kinematics, cfg.freq_tol_hz) \
        if cfg.kinematics is not None else []
    peak = resource.getrusage(resource.RUSAGE_SELF).ru_maxrss
    return PipelineReport(
        config_echo=json.loads(json.dumps(cfg.to_dict())),
        method=cfg.method, input_label=label, frames=reports,
        tracks=tracker.all_tracks(), signatures=sigs,
        timing_summary=timing_summary(reports), peak_rss_kb=int(peak),
    )


def report_schema() -> dict:
    return json.loads(resources.files("fstrm").joinpath("report_schema.json").read_text())


def emit_report(report: PipelineReport, path, fmt: str = "json", timing: bool = True) -> None:
    """Write the report as JSON or as one CSV row per (frame, estimate)."""
    if fmt == "json":
        text = json.dumps(report.to_dict(timing), indent=2, sort_keys=True) + "\n"
    elif fmt == "csv":
        lines = ["frame_id,t_s,f_hz,amp,phase,root_radius,track_id"]
        for fr in report.frames:
            for i, e in enumerate(fr.estimates):
                tid = fr.track_ids[i] if i < len(fr.track_ids) else None
                lines.append(",".join([
                    str(fr.frame_id), repr(fr.timestamp_s), repr(e.frequency_hz),
                    repr(e.amplitude), repr(e.phase_rad), repr(e.root_radius),
                    "" if tid is None else str(tid),
                ]))
        text = "\n".join(lines) + "\n"
    else:
        raise ValidationError(f"unknown report format {fmt!r}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


# ---------------------------------------------------------------- bench

@dataclass
class BenchRow:
    n: int
    fstrm_median_us: float
    classical_median_us: float | None
    fit_us: float | None = None
    residual: float | None = None

    @property
    def speedup(self) -> float | None:
        if self.classical_median_us is None:
            return None
        return self.classical_median_us / self.fstrm_median_us


def bench_frame(n: int, fs: float, seed: int) -> Frame:
    """Two close tones plus a third, 10 dB per tone."""
    spec = SignalSpec(
        (SinusoidSpec(1197.0, 1.0, (0.3 * seed) % (2 * math.pi)),
         SinusoidSpec(1202.0, 1.0, (1.1 + seed) % (2 * math.pi)),
         SinusoidSpec(2394.0, 0.5, 2.0)),
        noise_std=math.sqrt(0.05), fs_hz=fs, duration_s=n / fs, rng_seed=seed, label="bench")
    return Frame(generate(spec)[:n], fs, frame_id=seed)


def bench(cfg: PipelineConfig, sizes, frames_per_size: int = 50, classical_frames: int = 5,
          classical: bool = True, dense_cap: int = 4096) -> list[BenchRow]:
    """Median per-frame fSTrM time per size, the dense-covariance baseline, and an N log N fit.

    The baseline eigendecomposes an (N/3) x (N/3) forward-backward covariance;
    it runs on ``classical_frames`` frames and only for ``N <= dense_cap``.
    The fit is ``t = c0 + c1 N log2 N`` (least squares) and each row carries
    ``|t - fit| / t``; with fewer than three sizes no fit is reported.
    """
    sizes = sorted(int(s) for s in sizes)
    if any(s < 48 for s in sizes):
        raise ValidationError("bench sizes must be >= 48")
    rows = []
    fcfg = replace(cfg, method="fstrm")
    for n in sizes:
        fr = [bench_frame(n, cfg.fs_hz, s) for s in range(frames_per_size)]
        analyze_frame(fr[0], fcfg)  # warm caches / FFT plans
        times = []
        for f in fr:
            t0 = time.perf_counter_ns()
            analyze_frame(f, fcfg)
            times.append((time.perf_counter_ns() - t0) / 1000)
        ctime = None
        if classical and n <= dense_cap and classical_frames > 0:
            ct = []
            for f in fr[:classical_frames]:
                t0 = time.perf_counter_ns()
                classical_root_music(f, "auto", n // 3, rooting_aperture=cfg.rooting_aperture,
                                     k_max=cfg.lanczos.k_max)
                ct.append((time.perf_counter_ns() - t0) / 1000)
            ctime = float(np.median(ct))
        rows.append(BenchRow(n, float(np.median(times)), ctime))
    if len(rows) >= 3:
        x = np.array([r.n * math.log2(r.n) for r in rows])
        y = np.array([r.fstrm_median_us for r in rows])
        A = np.vstack([np.ones_like(x), x]).T
        coef = np.linalg.lstsq(A, y, rcond=None)[0]
        for r, xi in zip(rows, x):
            r.fit_us = float(coef[0] + coef[1] * xi)
            r.residual = abs(r.fstrm_median_us - r.fit_us) / r.fstrm_median_us
    return rows


def format_bench(rows: list[BenchRow]) -> str:
    out = ["N      fstrm_us   classical_us  speedup  fit_us     residual"]
    for r in rows:
        out.append(
            f"{r.n:<6d} {r.fstrm_median_us:>9.0f}  "
            f"{'-' if r.classical_median_us is None else f'{r.classical_median_us:.0f}':>12}  "
            f"{'-' if r.speedup is None else f'{r.speedup:.1f}':>7}  "
            f"{'-' if r.fit_us is None else f'{r.fit_us:.0f}':>9}  "
            f"{'-' if r.residual is None else f'{r.residual:.3f}':>8}")
    return "\n".join(out)
