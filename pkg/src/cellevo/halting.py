"""Evolving update rules for halting balance and halting unpredictability.

A candidate rule is scored by simulating a batch of random initial
grids to a horizon and asking either

* simple:    how close is the fraction of still-active grids to 1/2?
* predictor: how badly do freshly trained classifiers predict, from the
  initial grid alone, whether it will still be active? (negated mean
  validation accuracy — harder to predict scores higher)

Candidates are 4-vectors in unbounded space, squashed to (genesis mu,
genesis sigma, persistence mu, persistence sigma) bounds, and optimized
with CMA-ES; a uniform random search serves as the baseline mode.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import predictor as pred
from .cmaes import CmaEs
from .config import EvolveCaConfig, HaltingFitnessConfig
from .grid import centered_patch_state, seed_path, substream
from .parallel import parallel_map
from .rules import GLABERISH, GrowthBump, KernelSpec, RuleParams, evolve_batch

HALT_THRESHOLD = 1e-6
SIGMA_LO = 0.001
SIGMA_HI = 0.3
GENOME_DIM = 4
MODES = ("simple", "predictor", "random")


@dataclass(frozen=True)
class HaltingDataset:
    """Initial grids plus the ground truth "still active at horizon?" labels."""

    grids: np.ndarray  # (M, side, side) initial states
    labels: np.ndarray  # (M,) bool, True = active at horizon
    horizon: int
    rule: RuleParams

    def __post_init__(self):
        for arr in (self.grids, self.labels):
            arr.setflags(write=False)


def generate_dataset(
    rule: RuleParams,
    count: int,
    grid_side: int,
    horizon: int,
    seed,
    patch_side: int = 0,
    backend: str = "auto",
) -> HaltingDataset:
    """Simulate `count` seeded initial grids to `horizon` and label them.

    Grid i draws its centered patch (side grid_side/2 unless overridden)
    from the (seed, i) stream.
    """
    if count < 2:
        raise ValueError("count must be at least 2")
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    patch = patch_side if patch_side else grid_side // 2
    grids = np.stack(
        [
            centered_patch_state(grid_side, patch, substream(seed, i))
            for i in range(count)
        ]
    )
    finals = evolve_batch(grids, rule, horizon, backend)
    labels = finals.reshape(count, -1).max(axis=1) > HALT_THRESHOLD
    return HaltingDataset(grids, labels, horizon, rule)


def balance_fitness(active_fraction: float) -> float:
    """-(q - 1/2)^2: zero iff exactly half the grids stay active."""
    return -((active_fraction - 0.5) ** 2)


def simple_fitness(rule: RuleParams, cfg: HaltingFitnessConfig) -> float:
    ds = generate_dataset(
        rule,
        cfg.n_grids,
        cfg.grid_side,
        cfg.horizon,
        seed_path(cfg.seed, 0),
        patch_side=cfg.patch_side,
        backend=cfg.backend,
    )
    return balance_fitness(float(ds.labels.mean()))


def prediction_difficulty(accuracies) -> float:
    """Negated mean validation accuracy; in [-1, 0], higher = less predictable."""
    accs = np.asarray(accuracies, dtype=np.float64)
    if accs.size == 0:
        raise ValueError("need at least one accuracy")
    return -float(accs.mean())


def predictor_fitness_from_dataset(
    ds: HaltingDataset, cfg: HaltingFitnessConfig
) -> float:
    accs = [
        pred.train(
            ds.grids,
            ds.labels,
            epochs=cfg.epochs,
            split=cfg.split,
            seed=seed_path(cfg.seed, 1 + n),
        ).val_accuracy
        for n in range(cfg.n_predictors)
    ]
    return prediction_difficulty(accs)


def predictor_fitness(rule: RuleParams, cfg: HaltingFitnessConfig) -> float:
    ds = generate_dataset(
        rule,
        cfg.n_grids,
        cfg.grid_side,
        cfg.horizon,
        seed_path(cfg.seed, 0),
        patch_side=cfg.patch_side,
        backend=cfg.backend,
    )
    return predictor_fitness_from_dataset(ds, cfg)


# --- genome mapping ----------------------------------------------------------

def _logistic(z):
    return np.exp(-np.logaddexp(0.0, -z))


def _logit(p):
    return np.log(p) - np.log1p(-p)


def squash_genome(raw) -> np.ndarray:
    """Unbounded 4-vector -> (g_mu, g_sigma, p_mu, p_sigma) in bounds.

    mu coordinates map to (0, 1); sigma coordinates to (0.001, 0.3).
    Monotone per coordinate, hence bijective.
    """
    raw = np.asarray(raw, dtype=np.float64)
    if raw.shape != (GENOME_DIM,):
        raise ValueError(f"genome must have {GENOME_DIM} entries")
    s = _logistic(raw)
    out = s.copy()
    out[1::2] = SIGMA_LO + (SIGMA_HI - SIGMA_LO) * s[1::2]
    return out


def unsquash_genome(params) -> np.ndarray:
    """Inverse of squash_genome; bounded values must lie strictly inside."""
    p = np.asarray(params, dtype=np.float64)
    if p.shape != (GENOME_DIM,):
        raise ValueError(f"genome must have {GENOME_DIM} entries")
    unit = p.copy()
    unit[1::2] = (p[1::2] - SIGMA_LO) / (SIGMA_HI - SIGMA_LO)
    if np.any(unit <= 0.0) or np.any(unit >= 1.0):
        raise ValueError("parameters must lie strictly inside the squash bounds")
    return _logit(unit)


def genome_to_rule(
    raw, kernel: KernelSpec, dt: float, name: str = "candidate"
) -> RuleParams:
    g_mu, g_sigma, p_mu, p_sigma = squash_genome(raw)
    return RuleParams(
        name,
        GLABERISH,
        kernel,
        dt,
        genesis=GrowthBump(g_mu, g_sigma),
        persistence=GrowthBump(p_mu, p_sigma),
    )


# --- evolution loop ----------------------------------------------------------

@dataclass
class EvolveCaResult:
    best_rule: RuleParams
    best_raw: np.ndarray
    best_fitness: float
    history: list[dict]
    evaluations: int


def _evaluate(args) -> float:
    """Worker for one candidate; sanitizes non-finite fitness to -1."""
    raw, mode, cfg, eval_seed, fitness_fn = args
    if fitness_fn is not None:
        value = fitness_fn(raw, eval_seed)
    else:
        rule = genome_to_rule(raw, cfg.kernel, cfg.dt)
        fcfg = replace(cfg.fitness, seed=eval_seed)
        if mode == "predictor":
            value = predictor_fitness(rule, fcfg)
        else:
            value = simple_fitness(rule, fcfg)
    value = float(value)
    return value if np.isfinite(value) else -1.0


def _sample_uniform_genome(rng) -> np.ndarray:
    """Uniform draw in squash bounds, mapped back to unbounded space."""
    eps = 1e-9
    bounded = np.array(
        [
            rng.uniform(0.0, 1.0),
            rng.uniform(SIGMA_LO, SIGMA_HI),
            rng.uniform(0.0, 1.0),
            rng.uniform(SIGMA_LO, SIGMA_HI),
        ]
    )
    unit_lo = np.array([eps, SIGMA_LO * (1 + eps), eps, SIGMA_LO * (1 + eps)])
    unit_hi = np.array(
        [1 - eps, SIGMA_HI * (1 - eps), 1 - eps, SIGMA_HI * (1 - eps)]
    )
    return unsquash_genome(np.clip(bounded, unit_lo, unit_hi))


def evolve_rules(
    mode: str,
    cfg: EvolveCaConfig,
    seed: int,
    fitness_fn=None,
    workers: int = 1,
) -> EvolveCaResult:
    """Run one evolution: CMA-ES for simple/predictor, uniform for random.

    Candidate i of generation g is always evaluated under the derived
    seed (seed, g, i), so any evaluation schedule gives identical results.
    fitness_fn(raw, eval_seed) replaces the built-in fitness when given
    (used for landscape tests).
    """
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")
    popsize = cfg.popsize if cfg.popsize else None
    es = None
    if mode in ("simple", "predictor"):
        es = CmaEs(
            np.zeros(GENOME_DIM),
            cfg.sigma0,
            seed=list(seed_path(seed, 0)),
            popsize=popsize,
        )
        lam = es.popsize
    else:
        lam = popsize or 4 + int(3 * np.log(GENOME_DIM))

    history: list[dict] = []
    best_raw = None
    best_fit = -np.inf
    evaluations = 0
    for gen in range(1, cfg.generations + 1):
        if es is not None:
            cands = es.ask()
        else:
            cands = np.stack(
                [
                    _sample_uniform_genome(substream(seed, gen, i))
                    for i in range(lam)
                ]
            )
        jobs = [
            (cands[i], mode, cfg, seed_path(seed, gen, i), fitness_fn)
            for i in range(lam)
        ]
        fits = np.array(parallel_map(_evaluate, jobs, workers))
        evaluations += lam
        if es is not None:
            es.tell(cands, fits)
        gi = int(np.argmax(fits))
        if fits[gi] > best_fit:
            best_fit = float(fits[gi])
            best_raw = cands[gi].copy()
        history.append(
            {
                "generation": gen,
                "best_fitness": float(fits[gi]),
                "mean_fitness": float(fits.mean()),
                "best_genome": [float(v) for v in cands[gi]],
                "mode": mode,
                "seed": seed,
            }
        )
    best_rule = genome_to_rule(best_raw, cfg.kernel, cfg.dt, name=f"evolved_{mode}")
    return EvolveCaResult(best_rule, best_raw, best_fit, history, evaluations)
