"""Command-line surface.

Subcommands: run-iterated, run-beltrami, run-stripes-oracle, run-checkerboard,
run-hgx, run-twobump, run-calculus-checks, run-pde3d, render, validate-config.
Exit codes: 0 success, 1 configuration error, 2 numerical failure (partial
outputs are still flushed). --threads affects speed only, never results.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import apply_defaults, canonical_digest, parse_config, parse_config_dict
from .errors import ConfigurationError, SimulationError
from .experiments import RUNNERS
from .render import render_deformed_grid, render_dilatation
from .results import write_results

_RUN_COMMANDS = {
    "run-iterated": "iterated",
    "run-beltrami": "beltrami",
    "run-stripes-oracle": "stripes_oracle",
    "run-checkerboard": "checkerboard",
    "run-hgx": "hgx",
    "run-twobump": "twobump",
    "run-calculus-checks": "calculus",
    "run-pde3d": "pde3d",
}


def _canned_document(experiment: str, args) -> dict:
    """Built-in config for the convenience subcommands (flags override)."""
    if experiment == "stripes_oracle":
        return {
            "experiment": "stripes_oracle",
            "grid": {"d": 2, "N": args.N, "L": 4.0},
            "ladder": [args.j],
            "seeds": {"count": 1},
            "models": [{"kind": "stripes", "a": args.a}],
        }
    if experiment == "checkerboard":
        return {
            "experiment": "checkerboard",
            "grid": {"d": 2, "N": args.N, "L": 4.0},
            "ladder": [int(t) for t in args.ladder.split(",")],
            "seeds": {"count": args.seeds, "base": args.seed},
            "models": [{"kind": "model2_checkerboard", "a": args.a,
                        "masked": bool(args.masked)}],
        }
    if experiment == "hgx":
        return {
            "experiment": "hgx",
            "grid": {"d": 2, "N": 512, "L": 4.0},
            "ladder": [4],
            "seeds": {"count": 32, "base": args.seed},
            "models": [{"kind": "model3_bumpfield",
                        "profile": {"kind": "unit_square_indicator"},
                        "dist": {"kind": "rademacher"},
                        "envelope": {"kind": "constant", "a": 1.0}}],
            "params": {"a_grid": [0.3, 0.5, 0.7]},
        }
    if experiment == "twobump":
        return {
            "experiment": "twobump",
            "grid": {"d": 2, "N": 768, "L": 96.0},
            "ladder": [3],
            "seeds": {"count": 1},
        }
    if experiment == "calculus":
        return {
            "experiment": "calculus",
            "grid": {"d": 2, "N": 2048, "L": 4.0},
            "ladder": [3, 4, 5, 6],
            "seeds": {"count": 1},
        }
    if experiment == "pde3d":
        return {
            "experiment": "pde3d",
            "grid": {"d": 3, "N": 64, "L": 2.0},
            "ladder": [2, 3, 4],
            "seeds": {"count": 8, "base": args.seed},
            "models": [{"kind": "model2_checkerboard", "a": 0.99, "masked": True}],
            "operators": ["invlap(0,1)"],
            "solver": {"tol": 1e-10},
        }
    raise ConfigurationError(f"subcommand run-{experiment} requires --config")


def _load(args, experiment: str):
    if args.config:
        cfg, doc = parse_config(args.config)
        if cfg.experiment != experiment:
            raise ConfigurationError(
                f"config declares experiment {cfg.experiment!r}, "
                f"command expects {experiment!r}"
            )
    else:
        doc = _canned_document(experiment, args)
        cfg, doc = parse_config_dict(doc)
    if args.out:
        cfg.output_dir = args.out
    if args.threads:
        cfg.threads = args.threads
    if args.emit_ppm:
        cfg.emit_ppm = True
    return cfg, doc


def _emit_artifacts(result, outdir, models):
    paths = []
    for kind, j, seed, payload in result.artifacts:
        if kind == "dilatation":
            k = max((m.bound() for m in models), default=1.0) or 1.0
            p = Path(outdir) / f"dilatation_j{j}_seed{seed}.ppm"
            paths.append(render_dilatation(payload, p, k=k))
        elif kind == "map":
            p = Path(outdir) / f"deformed_grid_j{j}_seed{seed}.ppm"
            paths.append(render_deformed_grid(payload, p))
    return paths


def _cmd_run(args, experiment: str) -> int:
    cfg, doc = _load(args, experiment)
    digest = canonical_digest(doc)
    result = RUNNERS[experiment](cfg)
    paths = write_results(result, cfg.output_dir, digest, cfg.seeds)
    if cfg.emit_ppm:
        _emit_artifacts(result, cfg.output_dir, cfg.models)
    print(f"wrote {paths['csv']} and {paths['summary']}")
    if result.failures:
        print(f"{len(result.failures)} work item(s) failed; partial outputs flushed",
              file=sys.stderr)
        return 2
    return 0


def _cmd_validate(args) -> int:
    parse_config(args.path)
    print(f"{args.path}: OK")
    return 0


def _cmd_render(args) -> int:
    from .models import build_dilatation
    from .operators import beurling
    from .solver import normalize_3pt, reconstruct_map, solve_fixed_point

    cfg, _ = parse_config(args.config)
    if cfg.grid.d != 2:
        raise ConfigurationError("render requires a d = 2 config")
    j = args.j if args.j is not None else cfg.ladder[0]
    seed = args.seed if args.seed is not None else cfg.seeds[0]
    model = cfg.models[0]
    mu, _diag = build_dilatation(cfg.grid, model, j, seed)
    if args.kind == "dilatation":
        path = render_dilatation(mu, args.out, k=model.bound() or 1.0)
    else:
        report = solve_fixed_point(mu, beurling(), tol=cfg.tol, max_iter=cfg.max_iter)
        F = normalize_3pt(reconstruct_map(report))
        path = render_deformed_grid(F, args.out)
    print(f"wrote {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="beltramilab",
        description="Spectral laboratory for random Beltrami equations and "
                    "homogenization of iterated singular integrals",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for command in _RUN_COMMANDS:
        p = sub.add_parser(command)
        p.add_argument("--config", default=None)
        p.add_argument("--out", default=None)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--threads", type=int, default=None)
        p.add_argument("--emit-ppm", action="store_true")
        if command == "run-stripes-oracle":
            p.add_argument("--a", type=float, default=0.5)
            p.add_argument("--N", type=int, default=512)
            p.add_argument("--j", type=int, default=4)
        if command == "run-checkerboard":
            p.add_argument("--a", type=float, default=0.5)
            p.add_argument("--N", type=int, default=512)
            p.add_argument("--ladder", default="3,4,5,6")
            p.add_argument("--seeds", type=int, default=64)
            p.add_argument("--masked", action="store_true")
    pv = sub.add_parser("validate-config")
    pv.add_argument("path")
    pr = sub.add_parser("render")
    pr.add_argument("--config", required=True)
    pr.add_argument("--kind", choices=["dilatation", "deformed_grid"], required=True)
    pr.add_argument("--out", required=True)
    pr.add_argument("--j", type=int, default=None)
    pr.add_argument("--seed", type=int, default=None)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "validate-config":
            return _cmd_validate(args)
        if args.command == "render":
            return _cmd_render(args)
        return _cmd_run(args, _RUN_COMMANDS[args.command])
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    except SimulationError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


def entrypoint():
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
