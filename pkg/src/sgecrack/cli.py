"""Command-line entry point.

Usage::

    sgecrack run --config case.json --out results/
    sgecrack converge --config sweep.json --threads 4
    sgecrack size-effect --config size.json --out size/
    sgecrack mesh-dump --config case.json --out mesh/

Exit codes: 0 on success, 2 for configuration errors, 3 for solver errors.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .config import RunConfig, load_config
from .errors import ConfigurationError, SGECrackError
from .mesh import export_mesh, generate_quarter_mesh
from .studies import run_convergence, run_single, run_size_effect, write_json

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3

log = logging.getLogger("sgecrack")


def _non_negative_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {value}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sgecrack", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "run": "solve a single case and write summary, profiles and plots",
        "converge": "run a convergence sweep over R/ell, M or the quadrature rule",
        "size-effect": "sweep crack size d/L for each length scale ell/L",
        "mesh-dump": "generate the quarter mesh of a case and write it as text",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text, description=text)
        p.add_argument("--config", required=True, type=Path, help="JSON run configuration")
        p.add_argument("--out", type=Path, default=None, help="output directory (overrides the config)")
        p.add_argument("--threads", type=_non_negative_int, default=1, help="worker processes for sweeps")
        p.add_argument("--seed", type=_non_negative_int, default=0,
                       help="reserved; meshing and solving are deterministic")
        p.add_argument("-v", "--verbose", action="store_true", help="log progress")
    return parser


def _study_matches(cfg: RunConfig, command: str) -> None:
    expected = {"converge": "convergence", "size-effect": "size-effect"}.get(command)
    if expected and cfg.study.kind != expected:
        raise ConfigurationError(f"'{command}' needs study.kind = '{expected}', got '{cfg.study.kind}'")


def execute(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    if args.out is not None:
        cfg = replace(cfg, output=str(args.out))
    _study_matches(cfg, args.command)
    out = Path(cfg.output)
    log.info("%s: writing to %s", args.command, out)
    if args.command == "run":
        record = run_single(cfg, out)
        print(json.dumps(record["summary"], indent=2, sort_keys=True))
    elif args.command == "converge":
        result = run_convergence(cfg, out, threads=max(args.threads, 1))
        print(f"{len(result['rows'])} points, {len(result['failures'])} failures -> {out / 'convergence.csv'}")
    elif args.command == "size-effect":
        result = run_size_effect(cfg, out, threads=max(args.threads, 1))
        print(f"{len(result['rows'])} points, {len(result['failures'])} failures -> {out / 'size_effect.csv'}")
    else:
        mesh = generate_quarter_mesh(cfg.domain())
        out.mkdir(parents=True, exist_ok=True)
        export_mesh(mesh, out / "mesh.txt")
        write_json(out / "mesh_statistics.json", mesh.statistics())
        print(f"{mesh.n_nodes} nodes, {mesh.n_elements} elements -> {out / 'mesh.txt'}")
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return execute(args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SGECrackError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
