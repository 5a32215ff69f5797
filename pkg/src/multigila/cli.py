"""Command line entry point: ``multigila layout <input> [options]``."""

from __future__ import annotations

import argparse
import configparser
import logging
import os
import sys
from dataclasses import fields
from typing import Sequence

from .gila import LayoutConfig
from .pipeline import PipelineConfig, PipelineError, run_pipeline

WORKERS_ENV = "MULTIGILA_WORKERS"

# config-file keys handled by PipelineConfig; everything under [layout] or
# matching a LayoutConfig field goes to the layout section
_PIPELINE_KEYS = {
    "workers": int, "seed": int, "partitions": int, "sun_probability": float,
    "coarsen_threshold": int, "prune_iterations": int, "balance_epsilon": float,
    "partition_rounds": int,
    "repartition_per_level": bool,
}
_LAYOUT_KEYS = {f.name: f.type for f in fields(LayoutConfig)}


class ConfigError(ValueError):
    pass


def _convert(key: str, kind, raw: str):
    kind = {"int": int, "float": float, "bool": bool}.get(kind, kind)
    try:
        if kind is bool:
            low = raw.strip().lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        return kind(raw)
    except ValueError:
        raise ConfigError(f"bad value for {key}: {raw!r}") from None


def read_config_file(path: str) -> dict[str, object]:
    """``key = value`` lines, optionally grouped under ``[section]`` headers."""
    parser = configparser.ConfigParser(interpolation=None)
    with open(path) as fh:
        parser.read_string("[pipeline]\n" + fh.read(), source=path)
    out: dict[str, object] = {}
    for section in parser.sections():
        for key, raw in parser.items(section):
            key = key.replace("-", "_")
            if key in _PIPELINE_KEYS and section != "layout":
                out[key] = _convert(key, _PIPELINE_KEYS[key], raw)
            elif key in _LAYOUT_KEYS:
                out["layout." + key] = _convert(key, _LAYOUT_KEYS[key], raw)
            else:
                raise ConfigError(f"unknown config key {key!r} in [{section}]")
    return out


def build_config(args: argparse.Namespace, env: dict[str, str] | None = None) -> PipelineConfig:
    """Defaults, then environment, then config file, then explicit flags."""
    env = os.environ if env is None else env
    cfg = PipelineConfig()
    layout = LayoutConfig()
    if env.get(WORKERS_ENV):
        cfg.workers = _convert(WORKERS_ENV, int, env[WORKERS_ENV])
    if args.config:
        for key, val in read_config_file(args.config).items():
            if key.startswith("layout."):
                layout = layout.updated(**{key[7:]: val})
            else:
                setattr(cfg, key, val)
    for key in ("workers", "seed", "partitions", "sun_probability", "coarsen_threshold",
                "balance_epsilon", "partition_rounds"):
        val = getattr(args, key)
        if val is not None:
            setattr(cfg, key, val)
    if args.mass_repulsion is not None:
        layout = layout.updated(mass_repulsion=args.mass_repulsion == "on")
    cfg.layout = layout
    cfg.input = args.input
    cfg.svg, cfg.coords, cfg.report = args.svg, args.coords, args.report
    cfg.dump_levels = args.dump_levels
    cfg.verbosity = args.verbose
    if cfg.workers < 1:
        raise ConfigError("workers must be >= 1")
    return cfg


def format_config(cfg: PipelineConfig) -> str:
    lines = ["[pipeline]"]
    for key in _PIPELINE_KEYS:
        val = getattr(cfg, key)
        if val is not None:
            lines.append(f"{key} = {val}")
    lines.append("")
    lines.append("[layout]")
    for f in fields(LayoutConfig):
        lines.append(f"{f.name} = {getattr(cfg.layout, f.name)}")
    return "\n".join(lines) + "\n"


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="multigila",
                                     description="Multilevel force-directed graph layout.")
    sub = parser.add_subparsers(dest="command", required=True)
    lay = sub.add_parser("layout", help="draw an edge-list graph")
    lay.add_argument("input", nargs="?", help="edge list, one 'u v' pair per line")
    lay.add_argument("--svg")
    lay.add_argument("--coords")
    lay.add_argument("--report", help="JSON quality report")
    lay.add_argument("--workers", type=int, help=f"BSP workers (default ${WORKERS_ENV} or 1)")
    lay.add_argument("--seed", type=int)
    lay.add_argument("--partitions", type=int)
    lay.add_argument("--balance-epsilon", type=float)
    lay.add_argument("--partition-rounds", type=int)
    lay.add_argument("--sun-probability", type=float)
    lay.add_argument("--coarsen-threshold", type=int)
    lay.add_argument("--mass-repulsion", choices=("on", "off"))
    lay.add_argument("--dump-levels", metavar="DIR")
    lay.add_argument("--config", help="key=value file; flags take precedence")
    lay.add_argument("--print-config", action="store_true",
                     help="print the effective configuration and exit")
    lay.add_argument("-v", "--verbose", action="count", default=0)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        cfg = build_config(args)
    except (ConfigError, OSError, configparser.Error) as exc:
        print(f"config: {exc}", file=sys.stderr)
        return 2
    logging.basicConfig(level=logging.WARNING - 10 * min(cfg.verbosity, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    if args.print_config:
        sys.stdout.write(format_config(cfg))
        return 0
    if not cfg.input:
        parser.error("layout needs an input file")
    try:
        result = run_pipeline(cfg)
    except PipelineError as exc:
        print(f"error in {exc}", file=sys.stderr)
        return 1
    rep = result.report
    print(f"vertices={len(result.graph)} edges={rep.edge_count} components={len(result.components)}")
    print(f"levels={result.levels} supersteps={result.stats.supersteps_executed} "
          f"messages={result.stats.total_messages}")
    print(f"cre={rep.cre:.4f} neld={rep.neld:.4f} crossings={rep.crossings_total} "
          f"time={result.seconds:.1f}s")
    return 0


if __name__ == "__main__":
    sys.exit(main())
