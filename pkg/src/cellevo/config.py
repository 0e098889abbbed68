"""Workflow configuration dataclasses with strict dict parsing.

Every field has a default, so a zero-argument construction runs end to
end at desk scale. `from_dict` rejects unknown keys by name — config
files fail loudly instead of silently ignoring typos.
"""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

from .rules import KernelSpec

# Kernel used when evolving new rules (the wide three-ring neighborhood).
DEFAULT_EVO_KERNEL = KernelSpec(radius=18, ring_weights=(0.5, 1.0, 0.667))


def _check_keys(data: dict, cls, what: str) -> None:
    allowed = {f.name for f in dataclasses.fields(cls)}
    for key in data:
        if key not in allowed:
            raise ValueError(f"unknown {what} key {key!r}")


def _kernel_from_dict(d: dict) -> KernelSpec:
    if not isinstance(d, dict):
        raise ValueError("kernel must be an object")
    allowed = {"radius", "ring_weights", "core", "core_param"}
    for key in d:
        if key not in allowed:
            raise ValueError(f"unknown kernel key {key!r}")
    return KernelSpec(
        radius=int(d["radius"]),
        ring_weights=tuple(float(b) for b in d["ring_weights"]),
        core=d.get("core", "lenia_shell"),
        core_param=float(d.get("core_param", 4.0)),
    )


@dataclass(frozen=True)
class SimulateConfig:
    side: int = 128
    steps: int = 512
    init: str = "patch"  # "patch" (centered noise) or "uniform" (full noise)
    patch_side: int = 0  # 0 = side // 2
    backend: str = "auto"
    frames_every: int = 0  # write a PGM frame every k steps; 0 = none

    def __post_init__(self):
        if self.side < 3:
            raise ValueError("side must be at least 3")
        if self.steps < 0:
            raise ValueError("steps must be nonnegative")
        if self.init not in ("patch", "uniform"):
            raise ValueError(f"unknown init {self.init!r}")
        if self.frames_every < 0:
            raise ValueError("frames_every must be nonnegative")

    @property
    def effective_patch(self) -> int:
        return self.patch_side if self.patch_side else self.side // 2

    @classmethod
    def from_dict(cls, data: dict) -> "SimulateConfig":
        _check_keys(data, cls, "simulate")
        return cls(**data)


@dataclass(frozen=True)
class HaltingFitnessConfig:
    """One fitness evaluation: dataset generation plus optional training."""

    n_grids: int = 128
    grid_side: int = 64
    horizon: int = 256
    patch_side: int = 0  # 0 = grid_side // 2
    n_predictors: int = 3
    epochs: int = 20
    split: float = 0.75
    backend: str = "auto"
    seed: int | tuple = 0

    def __post_init__(self):
        if self.n_grids < 2:
            raise ValueError("n_grids must be at least 2")
        if self.horizon < 1:
            raise ValueError("horizon must be at least 1")
        if self.n_predictors < 1:
            raise ValueError("n_predictors must be at least 1")
        if not 0.0 < self.split < 1.0:
            raise ValueError("split must lie strictly between 0 and 1")

    @property
    def effective_patch(self) -> int:
        return self.patch_side if self.patch_side else self.grid_side // 2

    @classmethod
    def from_dict(cls, data: dict) -> "HaltingFitnessConfig":
        _check_keys(data, cls, "fitness")
        return cls(**data)


@dataclass(frozen=True)
class EvolveCaConfig:
    generations: int = 10
    popsize: int = 0  # 0 = optimizer default (8 for 4 parameters)
    sigma0: float = 0.5
    dt: float = 0.1
    kernel: KernelSpec = DEFAULT_EVO_KERNEL
    fitness: HaltingFitnessConfig = field(default_factory=HaltingFitnessConfig)

    def __post_init__(self):
        if self.generations < 1:
            raise ValueError("generations must be at least 1")
        if self.popsize < 0:
            raise ValueError("popsize must be nonnegative")

    @classmethod
    def from_dict(cls, data: dict) -> "EvolveCaConfig":
        _check_keys(data, cls, "evolve-ca")
        kwargs = dict(data)
        if "kernel" in kwargs:
            kwargs["kernel"] = _kernel_from_dict(kwargs["kernel"])
        if "fitness" in kwargs:
            kwargs["fitness"] = HaltingFitnessConfig.from_dict(kwargs["fitness"])
        return cls(**kwargs)


@dataclass(frozen=True)
class PatternEvoConfig:
    grid_side: int = 128
    tile_side: int = 0  # 0 = 4 * kernel radius
    steps: int = 256
    stride: int = 8  # steps between center-of-mass checkpoints
    population: int = 32
    generations: int = 100
    truncation: float = 0.25  # surviving fraction per generation
    weight_std: float = 0.1  # mutation noise on weights/biases
    act_prob: float = 0.05  # per-node activation resample probability
    survival_threshold: float = 0.01
    lambda_homeo: float = 10.0
    backend: str = "auto"

    def __post_init__(self):
        if self.population < 2:
            raise ValueError("population must be at least 2")
        if self.generations < 1:
            raise ValueError("generations must be at least 1")
        if not 0.0 < self.truncation <= 0.5:
            raise ValueError("truncation must lie in (0, 0.5]")
        if self.steps < 1:
            raise ValueError("steps must be at least 1")
        if not 1 <= self.stride <= self.steps:
            raise ValueError("stride must lie in [1, steps]")

    def effective_tile(self, kernel_radius: int) -> int:
        return self.tile_side if self.tile_side else 4 * kernel_radius

    @classmethod
    def from_dict(cls, data: dict) -> "PatternEvoConfig":
        _check_keys(data, cls, "evolve-pattern")
        return cls(**data)


@dataclass(frozen=True)
class MetricsConfig:
    n_grids: int = 128
    grid_side: int = 128
    patch_side: int = 32
    box_side: int = 64  # escape box, centered
    window: int = 512  # two consecutive windows of this many steps
    backend: str = "auto"

    def __post_init__(self):
        if self.n_grids < 1:
            raise ValueError("n_grids must be at least 1")
        if self.window < 1:
            raise ValueError("window must be at least 1")
        if not 0 < self.patch_side <= self.grid_side:
            raise ValueError("patch_side must fit the grid")
        if not 0 < self.box_side < self.grid_side:
            raise ValueError("box_side must be strictly inside the grid")

    @classmethod
    def from_dict(cls, data: dict) -> "MetricsConfig":
        _check_keys(data, cls, "metrics")
        return cls(**data)


def load_config_file(path) -> dict:
    with open(Path(path)) as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise ValueError("config file must hold a JSON object")
    return data
