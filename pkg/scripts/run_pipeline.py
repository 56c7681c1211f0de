"""Simulate -> calibrate -> replay -> report through the CLI, into one output directory.

    python3 scripts/run_pipeline.py --out runs/default --seed 7
"""

import argparse
import json
import sys
import time
from pathlib import Path

from drbs.cli import main as drbs


def run(argv):
    code = drbs(argv)
    if code != 0:
        sys.exit(code)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="runs/default")
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--lines", type=int, default=50)
    ap.add_argument("--requests-per-line", type=int, default=2000)
    ap.add_argument("--mode", choices=("universal", "per_line"), default="universal")
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    data, radii, replay = out / "data.csv", out / "radii.json", out / "replay"
    seed, threads = str(args.seed), str(args.threads)

    t0 = time.perf_counter()
    run(["simulate", "--output", str(data), "--seed", seed,
         "--lines", str(args.lines), "--requests-per-line", str(args.requests_per_line)])
    run(["calibrate", "--input", str(data), "--output", str(radii), "--seed", seed,
         "--mode", args.mode, "--threads", threads])
    run(["replay", "--input", str(data), "--radii", str(radii), "--output", str(replay),
         "--seed", seed, "--threads", threads])
    run(["report", "--input", str(replay)])
    summary = json.loads((replay / "summary.json").read_text())
    print(f"\nspend gap {summary['spend_gap']:.2e}, dR {summary['delta_r_weighted_pct']:+.3f}%, "
          f"{time.perf_counter() - t0:.1f}s")


if __name__ == "__main__":
    main()
