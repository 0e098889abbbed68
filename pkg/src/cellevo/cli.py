"""Command-line front end.

Subcommands: simulate, evolve-ca, evolve-pattern, metrics, render, presets.
Exit codes: 0 success, 1 usage error, 2 runtime error. Settings resolve as
CLI flags > --config JSON file > built-in defaults, and all output is
deterministic given the master --seed (no timestamps, no global RNG).
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import (
    EvolveCaConfig,
    MetricsConfig,
    PatternEvoConfig,
    SimulateConfig,
    load_config_file,
)
from .grid import centered_patch_state, place_centered, substream
from .halting import evolve_rules
from .io import (
    load_pattern,
    load_rule,
    save_history,
    save_metrics,
    save_metrics_csv,
    save_pattern,
    save_rule,
    write_frames,
)
from .metrics import CSV_HEADER, compute_metrics
from .patterns import evolve_patterns, random_genome, synthesize
from .rules import load_preset, preset_names, run, step


class _UsageError(Exception):
    """Bad arguments, unknown names, invalid config — exit code 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit(2); we map usage errors to 1
        raise _UsageError(message)


def _resolve_rule(args):
    try:
        if getattr(args, "rule_file", None):
            return load_rule(args.rule_file)
        return load_preset(args.rule)
    except KeyError as exc:
        raise _UsageError(exc.args[0]) from exc
    except ValueError as exc:
        raise _UsageError(str(exc)) from exc


def _build_config(cls, config_path, overrides, nested=()):
    """Overlay non-None CLI overrides on top of an optional JSON config file.

    `nested` lists (section, key, value) triples overlaid into sub-dicts,
    e.g. evolve-ca fitness settings.
    """
    try:
        base = dict(load_config_file(config_path)) if config_path else {}
        for key, value in overrides.items():
            if value is not None:
                base[key] = value
        for section, key, value in nested:
            if value is not None:
                sub = dict(base.get(section, {}))
                sub[key] = value
                base[section] = sub
        return cls.from_dict(base)
    except (KeyError, ValueError, OSError) as exc:
        raise _UsageError(str(exc)) from exc


def _write_json(data, path: Path) -> Path:
    path.write_text(json.dumps(data, indent=2) + "\n")
    return path


def _frame_run(state, rule, steps, every, backend):
    """Like rules.run but also collects frames at step 0, every `every`
    steps, and the final step."""
    frames = [state.copy()]
    means, maxes = [], []
    for t in range(1, steps + 1):
        state = step(state, rule, backend)
        means.append(float(state.mean()))
        maxes.append(float(state.max()))
        if t % every == 0 or t == steps:
            frames.append(state.copy())
    return state, means, maxes, frames


def _cmd_presets(args) -> int:
    for name in preset_names():
        print(name)
    return 0


def _cmd_simulate(args) -> int:
    rule = _resolve_rule(args)
    cfg = _build_config(
        SimulateConfig,
        args.config,
        {
            "side": args.side,
            "steps": args.steps,
            "init": args.init,
            "patch_side": args.patch_side,
            "backend": args.backend,
            "frames_every": args.frames_every,
        },
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rng = substream(args.seed, 0)
    if cfg.init == "patch":
        state = centered_patch_state(cfg.side, cfg.effective_patch, rng)
    else:
        state = rng.random((cfg.side, cfg.side))

    if cfg.frames_every > 0 and cfg.steps > 0:
        final, means, maxes, frames = _frame_run(
            state, rule, cfg.steps, cfg.frames_every, cfg.backend
        )
        write_frames(frames, out / "frames")
    else:
        result = run(state, rule, cfg.steps, cfg.backend)
        final = result.final
        means = [float(v) for v in result.means]
        maxes = [float(v) for v in result.maxes]

    summary = {
        "rule": rule.name,
        "framework": rule.framework,
        "side": cfg.side,
        "steps": cfg.steps,
        "init": cfg.init,
        "seed": args.seed,
        "backend": cfg.backend,
        "final_mean": float(final.mean()),
        "final_max": float(final.max()),
        "means": means,
        "maxes": maxes,
    }
    path = _write_json(summary, out / "summary.json")
    print(
        f"{rule.name}: {cfg.steps} steps, final mean {summary['final_mean']:.6g},"
        f" final max {summary['final_max']:.6g} -> {path}"
    )
    return 0


def _cmd_evolve_ca(args) -> int:
    cfg = _build_config(
        EvolveCaConfig,
        args.config,
        {
            "generations": args.generations,
            "popsize": args.popsize,
            "sigma0": args.sigma0,
            "dt": args.dt,
        },
        nested=[
            ("fitness", "n_grids", args.n_grids),
            ("fitness", "grid_side", args.grid_side),
            ("fitness", "horizon", args.horizon),
            ("fitness", "epochs", args.epochs),
            ("fitness", "backend", args.backend),
        ],
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    result = evolve_rules(args.mode, cfg, args.seed, workers=args.workers)
    save_history(result.history, out / "history.jsonl")
    save_rule(result.best_rule, out / "best_rule.json")
    print(
        f"{args.mode}: {cfg.generations} generations, {result.evaluations}"
        f" evaluations, best fitness {result.best_fitness:.6g} -> {out}"
    )
    return 0


def _cmd_evolve_pattern(args) -> int:
    rule = _resolve_rule(args)
    cfg = _build_config(
        PatternEvoConfig,
        args.config,
        {
            "grid_side": args.grid_side,
            "tile_side": args.tile_side,
            "steps": args.steps,
            "population": args.population,
            "generations": args.generations,
            "backend": args.backend,
        },
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    result = evolve_patterns(rule, cfg, args.seed, workers=args.workers)
    save_history(result.history, out / "history.jsonl")
    # Reference the rule by name when it came from a shipped preset so the
    # pattern file stays self-describing either way.
    rule_ref = args.rule if not args.rule_file else rule
    save_pattern(
        out / "best_pattern.json",
        name=f"{rule.name}-evolved-{args.seed}",
        tile=result.best_tile,
        rule=rule_ref,
    )
    best = result.best_fitness
    print(
        f"{rule.name}: {cfg.generations} generations, best total {best.total:.4g}"
        f" (motility {best.motility:.4g}, survived {best.survived}) -> {out}"
    )
    return 0


def _cmd_metrics(args) -> int:
    rule = _resolve_rule(args)
    cfg = _build_config(
        MetricsConfig,
        args.config,
        {
            "n_grids": args.n_grids,
            "grid_side": args.grid_side,
            "patch_side": args.patch_side,
            "box_side": args.box_side,
            "window": args.window,
            "backend": args.backend,
        },
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    report = compute_metrics(rule, cfg, args.seed)
    save_metrics(report, out / "metrics.json")
    save_metrics_csv([report], out / "metrics.csv")
    print(CSV_HEADER)
    print(report.csv_row())
    return 0


def _cmd_render(args) -> int:
    if args.pattern:
        pattern = load_pattern(args.pattern)
        rule, tile = pattern.rule, pattern.tile
        label = pattern.name
    else:
        # Demo mode: render a random synthesis tile under the Orbium rule.
        rule = load_preset("Orbium")
        tile = synthesize(random_genome(substream(args.seed, 0)),
                          4 * rule.kernel.radius)
        label = "demo"
    side = args.grid_side
    if tile.shape[0] > side or tile.shape[1] > side:
        raise _UsageError(
            f"tile {tile.shape} does not fit in a {side}x{side} grid"
        )
    state = place_centered(side, tile)
    _, _, _, frames = _frame_run(state, rule, args.steps, args.every,
                                 args.backend)
    paths = write_frames(frames, Path(args.out) / "frames")
    print(f"{label}: {len(paths)} frames -> {paths[0].parent}")
    return 0


def _add_common(parser, *, seed=0, out="."):
    parser.add_argument("--seed", type=int, default=seed,
                        help="master RNG seed (default %(default)s)")
    parser.add_argument("--out", default=out,
                        help="output directory (default %(default)s)")
    parser.add_argument("--config", default=None, metavar="FILE",
                        help="JSON config file; flags override its keys")
    parser.add_argument("--backend", choices=["auto", "fft", "direct"],
                        default=None, help="convolution backend")


def _add_rule_args(parser):
    group = parser.add_mutually_exclusive_group()
    group.add_argument("--rule", default="Orbium",
                       help="preset rule name (default %(default)s)")
    group.add_argument("--rule-file", default=None, metavar="FILE",
                       help="rule JSON file instead of a preset")


def build_parser() -> _Parser:
    parser = _Parser(prog="cellevo",
                     description="Continuous cellular automata: simulation, "
                                 "rule evolution, and glider search.")
    sub = parser.add_subparsers(dest="command", required=True,
                                parser_class=_Parser)

    p = sub.add_parser("simulate", help="run one grid and write summaries")
    _add_rule_args(p)
    _add_common(p)
    p.add_argument("--side", type=int, default=None)
    p.add_argument("--steps", type=int, default=None)
    p.add_argument("--init", choices=["patch", "uniform"], default=None)
    p.add_argument("--patch-side", type=int, default=None)
    p.add_argument("--frames-every", type=int, default=None,
                   help="write a PGM frame every K steps (0 = no frames)")
    p.set_defaults(handler=_cmd_simulate)

    p = sub.add_parser("evolve-ca", help="evolve rule parameters for "
                                         "halting unpredictability")
    _add_common(p)
    p.add_argument("--mode", choices=["simple", "predictor", "random"],
                   default="simple")
    p.add_argument("--generations", type=int, default=None)
    p.add_argument("--popsize", type=int, default=None)
    p.add_argument("--sigma0", type=float, default=None)
    p.add_argument("--dt", type=float, default=None)
    p.add_argument("--n-grids", type=int, default=None,
                   help="halting dataset size per candidate")
    p.add_argument("--grid-side", type=int, default=None)
    p.add_argument("--horizon", type=int, default=None)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(handler=_cmd_evolve_ca)

    p = sub.add_parser("evolve-pattern", help="evolve synthesis tiles under "
                                              "a fixed rule")
    _add_rule_args(p)
    _add_common(p)
    p.add_argument("--grid-side", type=int, default=None)
    p.add_argument("--tile-side", type=int, default=None)
    p.add_argument("--steps", type=int, default=None)
    p.add_argument("--population", type=int, default=None)
    p.add_argument("--generations", type=int, default=None)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(handler=_cmd_evolve_pattern)

    p = sub.add_parser("metrics", help="fertility/mortality over seeded grids")
    _add_rule_args(p)
    _add_common(p)
    p.add_argument("--n-grids", type=int, default=None)
    p.add_argument("--grid-side", type=int, default=None)
    p.add_argument("--patch-side", type=int, default=None)
    p.add_argument("--box-side", type=int, default=None)
    p.add_argument("--window", type=int, default=None)
    p.set_defaults(handler=_cmd_metrics)

    p = sub.add_parser("render", help="write PGM frames for a stored pattern")
    p.add_argument("--pattern", default=None, metavar="FILE",
                   help="pattern JSON file (default: a seeded demo tile "
                        "under Orbium)")
    p.add_argument("--seed", type=int, default=0,
                   help="seed for the demo tile (default %(default)s)")
    p.add_argument("--out", default=".",
                   help="output directory (default %(default)s)")
    p.add_argument("--backend", choices=["auto", "fft", "direct"],
                   default="auto")
    p.add_argument("--grid-side", type=int, default=128)
    p.add_argument("--steps", type=int, default=256)
    p.add_argument("--every", type=int, default=4,
                   help="frame stride in steps (default %(default)s)")
    p.set_defaults(handler=_cmd_render)

    p = sub.add_parser("presets", help="list shipped rule presets")
    p.set_defaults(handler=_cmd_presets)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"cellevo: error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    try:
        return args.handler(args)
    except _UsageError as exc:
        print(f"cellevo: error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:
        print(f"cellevo: error: {exc}", file=sys.stderr)
        return 2


def entrypoint() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entrypoint()
