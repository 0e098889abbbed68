"""Evolving seed patterns that travel: CPPN synthesis + truncation GA.

A genome is a fixed-topology coordinate network (4 -> 12 -> 12 -> 1)
with evolvable per-node activations. It paints a disc-masked tile from
(x, y, r, 1) inputs; the tile is dropped into the center of a larger
grid and simulated under a fixed rule. Fitness rewards net center-of-
mass travel, lightly penalizes drift in total mass, and hard-penalizes
dying out. Selection is plain truncation with mutation-only refill.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .config import PatternEvoConfig
from .grid import place_centered, seed_path, substream
from .parallel import parallel_map
from .rules import RuleParams, step

ACTIVATIONS = {
    "sine": np.sin,
    "gaussian": lambda z: np.exp(-z * z),
    "tanh": np.tanh,
    "identity": lambda z: z,
}
ACT_NAMES = tuple(ACTIVATIONS)  # fixed order: RNG draws index into this
N_INPUTS = 4
N_HIDDEN = 12

_LAYOUT = (
    ("w1", (N_HIDDEN, N_INPUTS)),
    ("b1", (N_HIDDEN,)),
    ("w2", (N_HIDDEN, N_HIDDEN)),
    ("b2", (N_HIDDEN,)),
    ("w3", (N_HIDDEN,)),
    ("b3", ()),
)


@dataclass(frozen=True)
class CppnGenome:
    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray
    w3: np.ndarray
    b3: np.ndarray
    acts1: tuple[str, ...]
    acts2: tuple[str, ...]

    def __post_init__(self):
        for name, shape in _LAYOUT:
            arr = np.array(getattr(self, name), dtype=np.float64)
            if arr.shape != shape:
                raise ValueError(f"{name} must have shape {shape}, got {arr.shape}")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} must be finite")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        for field in ("acts1", "acts2"):
            tags = tuple(getattr(self, field))
            if len(tags) != N_HIDDEN:
                raise ValueError(f"{field} must list {N_HIDDEN} activation tags")
            for tag in tags:
                if tag not in ACTIVATIONS:
                    raise ValueError(f"unknown activation {tag!r}")
            object.__setattr__(self, field, tags)


def random_genome(rng: np.random.Generator) -> CppnGenome:
    """Standard-normal weights, uniformly drawn activation tags.

    Draw order is fixed (w1, b1, acts1, w2, b2, acts2, w3, b3) so a given
    stream always produces the same genome.
    """
    w1 = rng.standard_normal((N_HIDDEN, N_INPUTS))
    b1 = rng.standard_normal(N_HIDDEN)
    acts1 = tuple(ACT_NAMES[i] for i in rng.integers(0, len(ACT_NAMES), N_HIDDEN))
    w2 = rng.standard_normal((N_HIDDEN, N_HIDDEN))
    b2 = rng.standard_normal(N_HIDDEN)
    acts2 = tuple(ACT_NAMES[i] for i in rng.integers(0, len(ACT_NAMES), N_HIDDEN))
    w3 = rng.standard_normal(N_HIDDEN)
    b3 = rng.standard_normal()
    return CppnGenome(w1, b1, w2, b2, w3, np.asarray(b3), acts1, acts2)


def mutate(
    genome: CppnGenome,
    rng: np.random.Generator,
    weight_std: float = 0.1,
    act_prob: float = 0.05,
) -> CppnGenome:
    """Gaussian noise on every weight; each node resamples its tag with prob p."""
    arrays = {
        name: getattr(genome, name) + rng.normal(0.0, weight_std, shape)
        for name, shape in _LAYOUT
    }

    def flip(tags):
        return tuple(
            ACT_NAMES[rng.integers(0, len(ACT_NAMES))]
            if rng.random() < act_prob
            else tag
            for tag in tags
        )

    return CppnGenome(**arrays, acts1=flip(genome.acts1), acts2=flip(genome.acts2))


def _logistic(z):
    return np.exp(-np.logaddexp(0.0, -z))


def synthesize(genome: CppnGenome, side: int) -> np.ndarray:
    """Evaluate the network over the tile; zero outside the inscribed disc."""
    if side < 3:
        raise ValueError("tile side must be at least 3")
    coords = np.linspace(-1.0, 1.0, side)
    x = np.broadcast_to(coords[None, :], (side, side))
    y = np.broadcast_to(coords[:, None], (side, side))
    r = np.hypot(x, y)
    inp = np.stack([x, y, r, np.ones_like(x)], axis=-1)
    h1 = inp @ genome.w1.T + genome.b1
    for j, tag in enumerate(genome.acts1):
        h1[..., j] = ACTIVATIONS[tag](h1[..., j])
    h2 = h1 @ genome.w2.T + genome.b2
    for j, tag in enumerate(genome.acts2):
        h2[..., j] = ACTIVATIONS[tag](h2[..., j])
    out = _logistic(h2 @ genome.w3 + genome.b3)
    out[r > 1.0] = 0.0
    return out


# --- center of mass ----------------------------------------------------------

def _axis_com(mass: np.ndarray) -> np.ndarray:
    """Circular mean position for (N, L) per-index mass; L/2 when degenerate."""
    n, length = mass.shape
    theta = 2.0 * np.pi * np.arange(length) / length
    # Row-wise reductions (not BLAS matvec): bitwise independent of batch size.
    s = (mass * np.sin(theta)).sum(axis=-1)
    c = (mass * np.cos(theta)).sum(axis=-1)
    com = (length / (2.0 * np.pi)) * np.arctan2(s, c) % length
    degenerate = np.hypot(s, c) < 1e-12
    return np.where(degenerate, length / 2.0, com)


def _com_batch(states: np.ndarray) -> np.ndarray:
    """(N, H, W) -> (N, 2) wrap-aware centers of mass."""
    n, h, w = states.shape
    rows = _axis_com(states.sum(axis=2))
    cols = _axis_com(states.sum(axis=1))
    empty = states.reshape(n, -1).sum(axis=1) < 1e-12
    rows = np.where(empty, h / 2.0, rows)
    cols = np.where(empty, w / 2.0, cols)
    return np.stack([rows, cols], axis=1)


def center_of_mass(grid: np.ndarray) -> tuple[float, float]:
    """Centroid on the torus; returns the grid center for (near-)empty grids."""
    grid = np.asarray(grid, dtype=np.float64)
    if grid.ndim != 2:
        raise ValueError("center_of_mass expects a single 2-D grid")
    row, col = _com_batch(grid[None])[0]
    return float(row), float(col)


def _wrap_delta(delta: np.ndarray, side: int) -> np.ndarray:
    """Reduce displacements into [-side/2, side/2) (shortest way around)."""
    out = (delta + side / 2.0) % side - side / 2.0
    over = np.abs(out) > side / 2.0
    if np.any(over):  # defensive: modular reduction already bounds |out|
        warnings.warn("center-of-mass delta exceeded half the grid; clamped")
        out = np.clip(out, -side / 2.0, side / 2.0)
    return out


# --- fitness -----------------------------------------------------------------

@dataclass(frozen=True)
class PatternFitness:
    motility: float  # | sum of wrapped checkpoint CoM deltas |
    homeostasis_penalty: float  # |mean_T - mean_0| / mean_0
    survived: bool  # max cell above threshold at every checkpoint
    total: float


def evaluate_tiles(
    tiles,
    rule: RuleParams,
    cfg: PatternEvoConfig,
    step_fn: Callable | None = None,
) -> list[PatternFitness]:
    """Score a batch of tiles under one rule; results are per-tile independent.

    Slices that reach the exact all-zero state are finished analytically
    (center CoM, zero mean, survived = False) instead of being simulated
    further; bitwise identical to the plain loop when zero is absorbing.
    """
    tiles = [np.asarray(t, dtype=np.float64) for t in tiles]
    side = cfg.grid_side
    states = np.stack([place_centered(side, t) for t in tiles])
    n = states.shape[0]

    checkpoints = set(range(cfg.stride, cfg.steps + 1, cfg.stride))
    checkpoints.add(cfg.steps)

    mean0 = states.mean(axis=(1, 2))
    com_prev = _com_batch(states)
    net = np.zeros((n, 2))
    survived = np.ones(n, dtype=bool)
    final_mean = np.zeros(n)

    center = np.array([side / 2.0, side / 2.0])
    can_drop = step_fn is None and rule.zero_is_absorbing()
    advance = step_fn if step_fn is not None else (
        lambda s: step(s, rule, cfg.backend)
    )

    active = np.arange(n)
    work = states
    for t in range(1, cfg.steps + 1):
        if active.size == 0:
            break
        work = advance(work)
        if can_drop:
            dead = work.reshape(work.shape[0], -1).max(axis=1) == 0.0
            if np.any(dead):
                for idx in active[dead]:
                    # Next checkpoint would see the center; afterwards deltas
                    # are exactly zero. final_mean stays 0, survived False.
                    net[idx] += _wrap_delta(center - com_prev[idx], side)
                    survived[idx] = False
                active = active[~dead]
                work = work[~dead]
                if active.size == 0:
                    break
        if t in checkpoints:
            com = _com_batch(work)
            net[active] += _wrap_delta(com - com_prev[active], side)
            com_prev[active] = com
            survived[active] &= (
                work.reshape(work.shape[0], -1).max(axis=1)
                > cfg.survival_threshold
            )
            if t == cfg.steps:
                final_mean[active] = work.mean(axis=(1, 2))

    motility = np.hypot(net[:, 0], net[:, 1])
    homeo = np.abs(final_mean - mean0) / np.maximum(mean0, 1e-12)
    results = []
    for i in range(n):
        total = (
            motility[i] - cfg.lambda_homeo * homeo[i] if survived[i] else -1000.0
        )
        results.append(
            PatternFitness(
                float(motility[i]), float(homeo[i]), bool(survived[i]), float(total)
            )
        )
    return results


def evaluate_tile(tile, rule, cfg, step_fn=None) -> PatternFitness:
    return evaluate_tiles([tile], rule, cfg, step_fn)[0]


def evaluate_pattern(genome: CppnGenome, rule, cfg, step_fn=None) -> PatternFitness:
    tile = synthesize(genome, cfg.effective_tile(rule.kernel.radius))
    return evaluate_tile(tile, rule, cfg, step_fn)


# --- evolution ---------------------------------------------------------------

@dataclass
class PatternEvoResult:
    best_genome: CppnGenome
    best_tile: np.ndarray
    best_fitness: PatternFitness
    history: list[dict]
    evaluations: int


def _eval_chunk(args):
    tiles, rule, cfg = args
    return evaluate_tiles(tiles, rule, cfg)


def _evaluate_genomes(genomes, rule, cfg, tile_side, workers) -> list[PatternFitness]:
    tiles = [synthesize(g, tile_side) for g in genomes]
    if workers <= 1 or len(tiles) < 2:
        return evaluate_tiles(tiles, rule, cfg)
    chunks = np.array_split(np.arange(len(tiles)), min(workers, len(tiles)))
    jobs = [([tiles[i] for i in chunk], rule, cfg) for chunk in chunks if len(chunk)]
    out: list[PatternFitness] = []
    for part in parallel_map(_eval_chunk, jobs, workers):
        out.extend(part)
    return out


def evolve_patterns(
    rule: RuleParams,
    cfg: PatternEvoConfig,
    seed: int,
    workers: int = 1,
) -> PatternEvoResult:
    """Truncation GA: keep the top quarter, refill with mutated survivors.

    Fitness is deterministic, so survivor scores are carried over instead
    of re-evaluated. Offspring in slot i of generation g draw parent
    choice and mutation noise from the (seed, g, i) stream.
    """
    tile_side = cfg.effective_tile(rule.kernel.radius)
    if tile_side > cfg.grid_side:
        raise ValueError("tile does not fit the simulation grid")
    keep = max(1, round(cfg.population * cfg.truncation))

    population = [
        random_genome(substream(seed, 0, i)) for i in range(cfg.population)
    ]
    fitnesses = _evaluate_genomes(population, rule, cfg, tile_side, workers)
    evaluations = cfg.population

    history: list[dict] = []

    def log(gen):
        totals = np.array([f.total for f in fitnesses])
        best = int(np.argmax(totals))
        history.append(
            {
                "generation": gen,
                "best_fitness": float(totals[best]),
                "mean_fitness": float(totals.mean()),
                "best_motility": fitnesses[best].motility,
                "best_homeostasis": fitnesses[best].homeostasis_penalty,
                "best_survived": fitnesses[best].survived,
                "mode": "pattern",
                "seed": seed,
            }
        )

    log(1)
    for gen in range(2, cfg.generations + 1):
        order = sorted(
            range(cfg.population), key=lambda i: fitnesses[i].total, reverse=True
        )
        survivors = [population[i] for i in order[:keep]]
        survivor_fits = [fitnesses[i] for i in order[:keep]]
        offspring = []
        for slot in range(keep, cfg.population):
            rng = substream(seed, gen, slot)
            parent = survivors[int(rng.integers(0, keep))]
            offspring.append(
                mutate(parent, rng, cfg.weight_std, cfg.act_prob)
            )
        child_fits = _evaluate_genomes(offspring, rule, cfg, tile_side, workers)
        evaluations += len(offspring)
        population = survivors + offspring
        fitnesses = survivor_fits + child_fits
        log(gen)

    best = max(range(cfg.population), key=lambda i: fitnesses[i].total)
    return PatternEvoResult(
        population[best],
        synthesize(population[best], tile_side),
        fitnesses[best],
        history,
        evaluations,
    )
