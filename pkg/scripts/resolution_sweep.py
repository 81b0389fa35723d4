"""Resolution rate of two close tones versus SNR and frame length.

Run: python3 scripts/resolution_sweep.py --trials 50
"""
import argparse
from dataclasses import dataclass, field

import numpy as np

from fstrm.config import PipelineConfig
from fstrm.pipeline import analyze_frame
from fstrm.signals import Frame


@dataclass
class SweepConfig:
    tones_hz: tuple = (1197.0, 1202.0)
    tol_hz: float = 1.2
    fs_hz: float = 51200.0
    snrs_db: tuple = (0.0, 5.0, 10.0, 20.0)
    frame_lens: tuple = (1024, 2048, 4096)
    trials: int = 50
    order_rules: tuple = ("detect", "energy")
    seed: int = 0
    extra: dict = field(default_factory=dict)


def make_frame(cfg: SweepConfig, n: int, snr_db: float, seed: int) -> Frame:
    rng = np.random.default_rng([cfg.seed, seed])
    t = np.arange(n) / cfg.fs_hz
    x = sum(np.cos(2 * np.pi * f * t + rng.uniform(0, 2 * np.pi)) for f in cfg.tones_hz)
    sigma = np.sqrt(0.5 / 10 ** (snr_db / 10))
    return Frame(x + rng.normal(0, sigma, n), cfg.fs_hz, 0, 0.0)


def resolved(report, cfg: SweepConfig) -> bool:
    f = np.array([e.frequency_hz for e in report.estimates])
    return f.size >= 2 and all(np.min(np.abs(f - t)) <= cfg.tol_hz for t in cfg.tones_hz)


def run(cfg: SweepConfig) -> list[tuple]:
    rows = []
    for rule in cfg.order_rules:
        for n in cfg.frame_lens:
            pc = PipelineConfig(frame_len=n, order_rule=rule, **cfg.extra)
            for snr in cfg.snrs_db:
                hits = sum(resolved(analyze_frame(make_frame(cfg, n, snr, s), pc), cfg)
                           for s in range(cfg.trials))
                rows.append((rule, n, snr, hits / cfg.trials))
    return rows


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trials", type=int, default=SweepConfig.trials)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    cfg = SweepConfig(trials=args.trials, seed=args.seed)
    print(f"{'rule':<8}{'N':>6}{'SNR dB':>8}{'resolved':>10}")
    for rule, n, snr, rate in run(cfg):
        print(f"{rule:<8}{n:>6}{snr:>8.1f}{rate:>10.2f}")


if __name__ == "__main__":
    main()
