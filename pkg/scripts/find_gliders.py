#!/usr/bin/env python3
"""Search for traveling patterns under a fixed rule, across several seeds.

Each seed runs an independent pattern-evolution sweep; the best tile of each
run is saved as a pattern file that `cellevo render` can animate.

    python3 scripts/find_gliders.py --rule Orbium --seeds 5
    python3 scripts/find_gliders.py --rule s613 --generations 200 --workers 4
"""
import argparse
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from cellevo.config import PatternEvoConfig
from cellevo.io import save_history, save_pattern
from cellevo.patterns import evolve_patterns
from cellevo.rules import load_preset

parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
parser.add_argument("--rule", default="Orbium")
parser.add_argument("--seeds", type=int, default=5,
                    help="number of independent runs (seeds 0..n-1)")
parser.add_argument("--generations", type=int, default=100)
parser.add_argument("--population", type=int, default=32)
parser.add_argument("--steps", type=int, default=256)
parser.add_argument("--grid-side", type=int, default=128)
parser.add_argument("--workers", type=int, default=1)
parser.add_argument("--out", default=None, help="default: runs/gliders-<rule>")
args = parser.parse_args()

rule = load_preset(args.rule)
out = Path(args.out or f"runs/gliders-{args.rule}")
out.mkdir(parents=True, exist_ok=True)

cfg = PatternEvoConfig(generations=args.generations,
                       population=args.population, steps=args.steps,
                       grid_side=args.grid_side)
for seed in range(args.seeds):
    t0 = time.perf_counter()
    result = evolve_patterns(rule, cfg, seed=seed, workers=args.workers)
    best = result.best_fitness
    save_history(result.history, out / f"history-s{seed}.jsonl")
    save_pattern(out / f"best-s{seed}.json",
                 name=f"{args.rule}-glider-s{seed}",
                 tile=result.best_tile, rule=args.rule)
    print(f"seed {seed}: total {best.total:.2f} motility {best.motility:.2f} "
          f"survived {best.survived} [{time.perf_counter() - t0:.0f}s]")
print(f"wrote pattern and history files to {out}/")
