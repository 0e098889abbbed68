"""Update rules for continuous cellular automata.

Two families share the same loop shape A' = clip(A + dt * delta, 0, 1):

* single-channel growth:  delta = G(n)
* gated growth:           delta = (1 - A) * G_gen(n) + A * G_per(n)

where n = K * A is the toroidal neighborhood sum and each G is a
Gaussian bump rescaled to (-1, 1]. Kernels are concentric rings over a
disc of radius R, built from a declarative spec so rules serialize to
plain JSON.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import NamedTuple

import numpy as np

from .grid import Kernel, _check_fits, convolve, radial_distances

LENIA = "lenia"
GLABERISH = "glaberish"
FRAMEWORKS = (LENIA, GLABERISH)

KERNEL_CORES = ("lenia_shell", "gaussian_ring")


@dataclass(frozen=True)
class GrowthBump:
    """Gaussian growth g(n) = 2 exp(-(n - mu)^2 / (2 sigma^2)) - 1."""

    mu: float
    sigma: float

    def __post_init__(self):
        if not math.isfinite(self.mu):
            raise ValueError("growth mu must be finite")
        if not (math.isfinite(self.sigma) and self.sigma > 0):
            raise ValueError("growth sigma must be positive")


def growth_value(bump: GrowthBump, n):
    """Evaluate the growth bump; peak +1 at n = mu, floor -1 far away."""
    z = (np.asarray(n, dtype=np.float64) - bump.mu) / bump.sigma
    out = 2.0 * np.exp(-0.5 * z * z) - 1.0
    return out.item() if out.ndim == 0 else out


@dataclass(frozen=True)
class KernelSpec:
    """Declarative ring kernel: radius, per-ring amplitudes, ring profile.

    With B rings, a cell at relative radius r in [0, 1] lands in ring
    k = min(floor(B r), B - 1) at intra-ring position q = B r - k; its
    unnormalized weight is ring_weights[k] * core(q).
    """

    radius: int
    ring_weights: tuple[float, ...]
    core: str = "lenia_shell"
    core_param: float = 4.0

    def __post_init__(self):
        if self.radius < 1:
            raise ValueError("kernel radius must be at least 1")
        if self.core not in KERNEL_CORES:
            raise ValueError(
                f"unknown kernel core {self.core!r}; expected one of {KERNEL_CORES}"
            )
        weights = tuple(float(b) for b in self.ring_weights)
        if not weights:
            raise ValueError("ring_weights must be non-empty")
        if any(b < 0 or not math.isfinite(b) for b in weights):
            raise ValueError("ring_weights must be finite and nonnegative")
        if all(b == 0 for b in weights):
            raise ValueError("ring_weights must include a positive entry")
        if not (math.isfinite(self.core_param) and self.core_param > 0):
            raise ValueError("core_param must be positive")
        object.__setattr__(self, "ring_weights", weights)


def _core_profile(spec: KernelSpec, q: np.ndarray) -> np.ndarray:
    if spec.core == "lenia_shell":
        # exp(alpha * (1 - 1/(4 q (1 - q)))): smooth bump, exactly 0 at q in {0, 1}.
        out = np.zeros_like(q)
        interior = (q > 0.0) & (q < 1.0)
        qi = q[interior]
        out[interior] = np.exp(spec.core_param * (1.0 - 0.25 / (qi * (1.0 - qi))))
        return out
    # gaussian_ring: exp(-(q - 1/2)^2 / (2 w^2)); positive at ring edges.
    z = (q - 0.5) / spec.core_param
    return np.exp(-0.5 * z * z)


@lru_cache(maxsize=None)
def build_kernel(spec: KernelSpec) -> Kernel:
    """Realize a KernelSpec as normalized weights on its (2R+1)^2 stencil."""
    r = radial_distances(spec.radius) / spec.radius
    nrings = len(spec.ring_weights)
    u = nrings * r
    ring = np.minimum(np.floor(u), nrings - 1).astype(int)
    q = u - ring
    amp = np.asarray(spec.ring_weights)[ring]
    weights = np.where(r <= 1.0, amp * _core_profile(spec, q), 0.0)
    total = weights.sum()
    if total <= 0.0:
        raise ValueError("degenerate kernel: weights sum to 0")
    return Kernel(spec.radius, weights / total)


@dataclass(frozen=True)
class RuleParams:
    """A complete update rule: kernel, growth bump(s), step size, framework.

    growth is used by the "lenia" framework; genesis/persistence by
    "glaberish". dt = 0 is allowed and freezes the state (useful as a
    null rule in tests and metrics baselines).
    """

    name: str
    framework: str
    kernel: KernelSpec
    dt: float
    growth: GrowthBump | None = None
    genesis: GrowthBump | None = None
    persistence: GrowthBump | None = None

    def __post_init__(self):
        if self.framework not in FRAMEWORKS:
            raise ValueError(
                f"unknown framework {self.framework!r}; expected one of {FRAMEWORKS}"
            )
        if not (math.isfinite(self.dt) and 0.0 <= self.dt <= 1.0):
            raise ValueError("dt must lie in [0, 1]")
        if self.framework == LENIA:
            if self.growth is None or self.genesis or self.persistence:
                raise ValueError("lenia rules take exactly one growth bump")
        else:
            if self.growth is not None or not (self.genesis and self.persistence):
                raise ValueError(
                    "glaberish rules take genesis and persistence bumps"
                )

    def zero_is_absorbing(self) -> bool:
        """True when an all-zero state is an exact fixed point.

        Empty cells see n = 0, so they stay empty iff the relevant growth
        at 0 is nonpositive (the clip floors the update at 0).
        """
        bump = self.growth if self.framework == LENIA else self.genesis
        return growth_value(bump, 0.0) <= 0.0


def step(state: np.ndarray, rule: RuleParams, backend: str = "auto") -> np.ndarray:
    """One update A' = clip(A + dt * delta(A, K*A), 0, 1), batched over leading axes."""
    state = np.asarray(state, dtype=np.float64)
    if rule.dt == 0.0:
        # delta is multiplied by 0: the state is exactly frozen.
        _check_fits(build_kernel(rule.kernel), state.shape)
        return np.clip(state, 0.0, 1.0)
    n = convolve(state, build_kernel(rule.kernel), backend)
    if rule.framework == LENIA:
        delta = growth_value(rule.growth, n)
    else:
        delta = (1.0 - state) * growth_value(rule.genesis, n) + state * growth_value(
            rule.persistence, n
        )
    return np.clip(state + rule.dt * delta, 0.0, 1.0)


class RunResult(NamedTuple):
    final: np.ndarray
    means: np.ndarray  # mean cell value after each step, shape (steps, ...)
    maxes: np.ndarray  # max cell value after each step


def run(state: np.ndarray, rule: RuleParams, steps: int, backend: str = "auto") -> RunResult:
    """Iterate `step` and record per-step mean/max summaries."""
    if steps < 0:
        raise ValueError("steps must be nonnegative")
    state = np.asarray(state, dtype=np.float64)
    lead = state.shape[:-2]
    means = np.zeros((steps, *lead))
    maxes = np.zeros((steps, *lead))
    for t in range(steps):
        state = step(state, rule, backend)
        means[t] = state.mean(axis=(-2, -1))
        maxes[t] = state.max(axis=(-2, -1))
    return RunResult(state, means, maxes)


def evolve_batch(
    state: np.ndarray, rule: RuleParams, steps: int, backend: str = "auto"
) -> np.ndarray:
    """Advance a (N, H, W) batch `steps` updates, returning only the final states.

    When the all-zero state is absorbing, slices that reach exactly 0 are
    dropped from the working batch (their future is known); per-slice FFTs
    are bitwise independent of batch composition, so results are unchanged.
    """
    state = np.array(state, dtype=np.float64)
    if state.ndim != 3:
        raise ValueError("evolve_batch expects a (N, H, W) batch")
    droppable = rule.zero_is_absorbing()
    active = np.arange(state.shape[0])
    work = state
    for _ in range(steps):
        if work.shape[0] == 0:
            break
        work = step(work, rule, backend)
        if droppable:
            alive = work.reshape(work.shape[0], -1).max(axis=1) > 0.0
            if not alive.all():
                state[active] = work
                active = active[alive]
                work = work[alive]
    state[active] = work
    return state


# --- serialization -----------------------------------------------------------

def _require_keys(mapping: dict, allowed: set[str], required: set[str], what: str):
    for key in mapping:
        if key not in allowed:
            raise ValueError(f"unknown {what} field {key!r}")
    for key in required:
        if key not in mapping:
            raise ValueError(f"missing {what} field {key!r}")


def _bump_from_dict(d: dict, what: str) -> GrowthBump:
    if not isinstance(d, dict):
        raise ValueError(f"{what} must be an object with mu and sigma")
    _require_keys(d, {"mu", "sigma"}, {"mu", "sigma"}, what)
    return GrowthBump(float(d["mu"]), float(d["sigma"]))


def rule_from_dict(d: dict) -> RuleParams:
    """Parse the JSON rule format; unknown fields are an error."""
    if not isinstance(d, dict):
        raise ValueError("rule must be a JSON object")
    allowed = {"name", "framework", "kernel", "dt", "growth", "genesis", "persistence"}
    _require_keys(d, allowed, {"name", "framework", "kernel", "dt"}, "rule")
    kd = d["kernel"]
    if not isinstance(kd, dict):
        raise ValueError("kernel must be an object")
    _require_keys(
        kd,
        {"radius", "ring_weights", "core", "core_param"},
        {"radius", "ring_weights"},
        "kernel",
    )
    kernel = KernelSpec(
        radius=int(kd["radius"]),
        ring_weights=tuple(float(b) for b in kd["ring_weights"]),
        core=kd.get("core", "lenia_shell"),
        core_param=float(kd.get("core_param", 4.0)),
    )
    framework = d["framework"]
    required_bumps = {LENIA: ("growth",), GLABERISH: ("genesis", "persistence")}
    for key in required_bumps.get(framework, ()):
        if key not in d:
            raise ValueError(f"missing rule field {key!r}")
    # Parse every bump present; RuleParams rejects ones foreign to the framework.
    bumps = {
        key: _bump_from_dict(d[key], key)
        for key in ("growth", "genesis", "persistence")
        if key in d
    }
    return RuleParams(
        name=str(d["name"]),
        framework=framework,
        kernel=kernel,
        dt=float(d["dt"]),
        **bumps,
    )


def rule_to_dict(rule: RuleParams) -> dict:
    out = {
        "name": rule.name,
        "framework": rule.framework,
        "kernel": {
            "radius": rule.kernel.radius,
            "ring_weights": list(rule.kernel.ring_weights),
            "core": rule.kernel.core,
            "core_param": rule.kernel.core_param,
        },
    }
    if rule.framework == LENIA:
        out["growth"] = {"mu": rule.growth.mu, "sigma": rule.growth.sigma}
    else:
        out["genesis"] = {"mu": rule.genesis.mu, "sigma": rule.genesis.sigma}
        out["persistence"] = {
            "mu": rule.persistence.mu,
            "sigma": rule.persistence.sigma,
        }
    out["dt"] = rule.dt
    return out


# --- bundled presets ---------------------------------------------------------

# Listing order: classic single-growth rules first, then the evolved rules.
PRESET_ORDER = (
    "Orbium",
    "P_s_labens",
    "S_valvatus",
    "D_valvatus",
    "H_natans",
    "s7",
    "s613",
    "s11",
    "s643",
    "s113",
)


@lru_cache(maxsize=1)
def _preset_index() -> dict[str, RuleParams]:
    loaded = {}
    root = resources.files(__package__) / "presets"
    for entry in root.iterdir():
        if entry.name.endswith(".json"):
            rule = rule_from_dict(json.loads(entry.read_text()))
            loaded[rule.name] = rule
    order = [n for n in PRESET_ORDER if n in loaded]
    order += sorted(n for n in loaded if n not in PRESET_ORDER)
    return {n: loaded[n] for n in order}


def preset_names() -> list[str]:
    return list(_preset_index())


def load_preset(name: str) -> RuleParams:
    presets = _preset_index()
    if name not in presets:
        known = ", ".join(presets)
        raise KeyError(f"unknown preset {name!r}; available: {known}")
    return presets[name]
