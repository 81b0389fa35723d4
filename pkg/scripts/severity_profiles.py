"""Harmonic ratios and severity for every built-in bearing profile.

Run: python3 scripts/severity_profiles.py --seeds 5
"""
import argparse
from dataclasses import dataclass

import numpy as np

from fstrm.config import PipelineConfig
from fstrm.pipeline import run_pipeline
from fstrm.signals import PROFILES


@dataclass
class SeverityConfig:
    profiles: tuple = tuple(PROFILES)
    seeds: int = 3


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=SeverityConfig.seeds)
    ap.add_argument("--profiles", nargs="+", default=list(SeverityConfig.profiles))
    args = ap.parse_args()
    sc = SeverityConfig(tuple(args.profiles), args.seeds)
    cfg = PipelineConfig()
    print(f"{'profile':<8}{'fault':<17}{'hits':>5}{'ratio2 mean':>13}{'ratio3 mean':>13}")
    for name in sc.profiles:
        found = {}
        for seed in range(sc.seeds):
            for sig in run_pipeline(cfg, name, seed=seed, workers=1).signatures:
                ratios = list(sig.harmonic_ratios) + [np.nan, np.nan]
                found.setdefault(sig.fault_type, []).append(ratios[:2])
        if not found:
            print(f"{name:<8}{'-':<17}{0:>5}")
        for fault, vals in sorted(found.items()):
            r = np.array(vals, dtype=float)
            print(f"{name:<8}{fault:<17}{len(vals):>5}{np.mean(r[:, 0]):>13.3f}{np.mean(r[:, 1]):>13.3f}")


if __name__ == "__main__":
    main()
