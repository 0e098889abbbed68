#!/usr/bin/env python3
"""Tabulate fertility/mortality for shipped presets.

Runs the two-window escape/extinction measurement for every preset (or a
chosen subset) at full scale and writes one CSV plus one JSON per rule.

    python3 scripts/preset_metrics.py --out runs/metrics
    python3 scripts/preset_metrics.py --rules s7 s613 --n-grids 32
"""
import argparse
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from cellevo.config import MetricsConfig
from cellevo.io import save_metrics, save_metrics_csv
from cellevo.metrics import CSV_HEADER, compute_metrics
from cellevo.rules import load_preset, preset_names

parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
parser.add_argument("--rules", nargs="*", default=None,
                    help="preset names (default: all ten)")
parser.add_argument("--n-grids", type=int, default=128)
parser.add_argument("--grid-side", type=int, default=128)
parser.add_argument("--patch-side", type=int, default=32)
parser.add_argument("--box-side", type=int, default=64)
parser.add_argument("--window", type=int, default=512)
parser.add_argument("--seed", type=int, default=0)
parser.add_argument("--out", default="runs/metrics")
args = parser.parse_args()

cfg = MetricsConfig(n_grids=args.n_grids, grid_side=args.grid_side,
                    patch_side=args.patch_side, box_side=args.box_side,
                    window=args.window, backend="fft")
out = Path(args.out)
out.mkdir(parents=True, exist_ok=True)

names = args.rules if args.rules else list(preset_names())
reports = []
print(CSV_HEADER)
for name in names:
    t0 = time.perf_counter()
    report = compute_metrics(load_preset(name), cfg, seed=args.seed)
    reports.append(report)
    save_metrics(report, out / f"{name}.json")
    print(f"{report.csv_row()}  # {time.perf_counter() - t0:.0f}s")

save_metrics_csv(reports, out / "metrics.csv")
print(f"wrote {out / 'metrics.csv'}")
