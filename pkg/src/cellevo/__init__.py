"""Continuous cellular automata with evolvable update rules and seed patterns."""

from .grid import Kernel, block_mean, convolve
from .rules import (
    GrowthBump,
    KernelSpec,
    RuleParams,
    build_kernel,
    growth_value,
    load_preset,
    preset_names,
    run,
    step,
)

__all__ = [
    "Kernel",
    "block_mean",
    "convolve",
    "GrowthBump",
    "KernelSpec",
    "RuleParams",
    "build_kernel",
    "growth_value",
    "load_preset",
    "preset_names",
    "run",
    "step",
]

__version__ = "0.1.0"
