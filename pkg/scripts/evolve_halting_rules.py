#!/usr/bin/env python3
"""Evolve update-rule parameters toward hard-to-predict halting.

Wraps the rule-evolution loop with experiment-sized settings. The simple
mode targets half-active halting datasets; the predictor mode maximizes the
error of freshly trained halting classifiers; random is the baseline.

    python3 scripts/evolve_halting_rules.py --mode simple --generations 30
    python3 scripts/evolve_halting_rules.py --mode predictor --seed 3 --workers 4
"""
import argparse
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from cellevo.config import EvolveCaConfig, HaltingFitnessConfig
from cellevo.halting import evolve_rules
from cellevo.io import save_history, save_rule

parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
parser.add_argument("--mode", choices=["simple", "predictor", "random"],
                    default="simple")
parser.add_argument("--generations", type=int, default=30)
parser.add_argument("--n-grids", type=int, default=128)
parser.add_argument("--grid-side", type=int, default=64)
parser.add_argument("--horizon", type=int, default=256)
parser.add_argument("--epochs", type=int, default=20)
parser.add_argument("--sigma0", type=float, default=0.5)
parser.add_argument("--seed", type=int, default=0)
parser.add_argument("--workers", type=int, default=1)
parser.add_argument("--out", default=None,
                    help="default: runs/halting-<mode>-s<seed>")
args = parser.parse_args()

out = Path(args.out or f"runs/halting-{args.mode}-s{args.seed}")
out.mkdir(parents=True, exist_ok=True)

cfg = EvolveCaConfig(
    generations=args.generations,
    sigma0=args.sigma0,
    fitness=HaltingFitnessConfig(
        n_grids=args.n_grids, grid_side=args.grid_side,
        horizon=args.horizon, epochs=args.epochs, backend="fft",
    ),
)
t0 = time.perf_counter()
result = evolve_rules(args.mode, cfg, args.seed, workers=args.workers)
elapsed = time.perf_counter() - t0

save_history(result.history, out / "history.jsonl")
save_rule(result.best_rule, out / "best_rule.json")
print(f"{args.mode} seed {args.seed}: best fitness {result.best_fitness:.6g} "
      f"after {result.evaluations} evaluations in {elapsed:.0f}s")
print(f"wrote {out}/history.jsonl and {out}/best_rule.json")
