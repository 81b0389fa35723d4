"""Per-frame cost of the fast pipeline against the dense classical baseline.

Run: python3 scripts/bench_scaling.py --sizes 512 1024 2048 4096 8192
"""
import argparse
import json
from dataclasses import asdict, dataclass

from fstrm.config import PipelineConfig
from fstrm.pipeline import bench, format_bench


@dataclass
class BenchConfig:
    sizes: tuple = (512, 1024, 2048, 4096, 8192)
    frames_per_size: int = 30
    classical_frames: int = 3
    classical: bool = True


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=list(BenchConfig.sizes))
    ap.add_argument("--frames", type=int, default=BenchConfig.frames_per_size)
    ap.add_argument("--classical-frames", type=int, default=BenchConfig.classical_frames)
    ap.add_argument("--no-classical", action="store_true")
    ap.add_argument("--json", action="store_true", help="print rows as JSON")
    args = ap.parse_args()
    bc = BenchConfig(tuple(args.sizes), args.frames, args.classical_frames, not args.no_classical)
    rows = bench(PipelineConfig(), list(bc.sizes), frames_per_size=bc.frames_per_size,
                 classical_frames=bc.classical_frames, classical=bc.classical)
    if args.json:
        print(json.dumps({"config": asdict(bc), "rows": [asdict(r) for r in rows]}, indent=2))
    else:
        print(format_bench(rows))


if __name__ == "__main__":
    main()
