"""Command-line entry point: ``ccotree generate | validate | stats``.

Exit codes: 0 success, 1 input or config error, 2 growth stalled,
3 validation failure, 4 I/O error.
"""

import argparse
import logging
import math
import sys
import time
from pathlib import Path

import numpy as np

from .errors import CcoError, ConfigError, GrowthStalled, InputError, TreeFileError, UsageError
from .growth import Grower
from .io import export_svg, load_config, parse_override, read_tree, write_tree
from .tree import validate

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_STALLED = 2
EXIT_INVALID = 3
EXIT_IO = 4


def _err(msg):
    print(f"ccotree: error: {msg}", file=sys.stderr)


def _partial_path(out):
    return out.with_name(out.stem + ".partial.csv")


def _load(args):
    overrides = [parse_override(item) for item in getattr(args, "set", None) or ()]
    return load_config(args.config, overrides)


def cmd_generate(args):
    cfg = _load(args)
    if args.out is not None:
        cfg.out = Path(args.out)
    if args.svg:
        if cfg.params.dim != 2:
            raise ConfigError("svg", "SVG export is 2D only")
        cfg.svg = True
    if args.log is not None:
        cfg.log = Path(args.log)
    if args.threads is not None:
        if args.threads < 1:
            raise ConfigError("threads", "must be >= 1")
        cfg.threads = args.threads
    domain = cfg.build_domain()
    seed = None
    if cfg.seed_tree is not None:
        seed = read_tree(cfg.seed_tree, dim=cfg.params.dim)

    started = time.perf_counter()
    log_stream = open(cfg.log, "w", encoding="utf-8", newline="\n") if cfg.log else None
    try:
        grower = Grower(cfg.params, domain, seed_tree=seed, root_position=cfg.root,
                        log_stream=log_stream, threads=cfg.threads)
        try:
            tree = grower.run()
        except GrowthStalled as e:
            if e.tree is not None:
                e.tree.realize_radii()
                write_tree(e.tree, _partial_path(cfg.out))
                _err(f"{e}; partial tree written to {_partial_path(cfg.out)}")
            else:
                _err(str(e))
            return EXIT_STALLED
    finally:
        if log_stream is not None:
            log_stream.close()
    elapsed = time.perf_counter() - started

    write_tree(tree, cfg.out)
    if cfg.svg:
        export_svg(tree, domain, cfg.svg_path)
    report = validate(tree, domain)
    print(f"terminals={tree.terminal_count} segments={tree.segment_count} "
          f"volume={tree.volume():.10g} time={elapsed:.2f}s")
    if not report.passed():
        _err("grown tree fails validation: " + ", ".join(report.failures()))
        return EXIT_INVALID
    return EXIT_OK


def cmd_validate(args):
    cfg = _load(args)
    domain = cfg.build_domain()
    tree = read_tree(args.tree, params=cfg.params, dim=cfg.params.dim)
    tree.realize_radii()
    report = validate(tree, domain)
    for line in report.lines():
        print(line)
    return EXIT_OK if report.passed() else EXIT_INVALID


def bifurcation_angles(tree):
    """Angle in degrees between each parent axis and each of its children's."""
    out = []
    for i in tree.preorder():
        u = tree._dist[i] - tree._prox[i]
        for c in tree.children(i):
            v = tree._dist[c] - tree._prox[c]
            cos = float(np.dot(u, v)) / (math.hypot(*u) * math.hypot(*v))
            out.append(math.degrees(math.acos(max(-1.0, min(1.0, cos)))))
    return out


def stats_lines(tree):
    r = tree.radii
    angles = bifurcation_angles(tree)
    mean = f"{sum(angles) / len(angles):.6f}" if angles else "n/a"
    return [
        f"terminals: {tree.terminal_count}",
        f"segments: {tree.segment_count}",
        f"total_volume: {tree.volume():.10g}",
        f"radius_min: {float(np.min(r)):.10g}",
        f"radius_max: {float(np.max(r)):.10g}",
        f"max_depth: {max(tree.depths())}",
        f"mean_bifurcation_angle_deg: {mean}",
    ]


def cmd_stats(args):
    if args.config is not None:
        cfg = _load(args)
        tree = read_tree(args.tree, params=cfg.params, dim=cfg.params.dim)
    else:
        tree = read_tree(args.tree)
    for line in stats_lines(tree):
        print(line)
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="ccotree", description="Grow, validate and summarize synthetic vascular trees.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="grow a tree from a config file")
    gen.add_argument("--config", required=True, help="run configuration (.cco)")
    gen.add_argument("--set", action="append", metavar="KEY=VALUE",
                     help="override a config entry (repeatable)")
    gen.add_argument("--svg", action="store_true", help="also write <out>.svg (2D only)")
    gen.add_argument("--log", metavar="PATH", help="write the per-candidate evaluation log")
    gen.add_argument("--threads", type=int, metavar="N", help="evaluation workers")
    gen.add_argument("--out", metavar="PATH", help="tree CSV path")
    gen.set_defaults(func=cmd_generate)

    val = sub.add_parser("validate", help="check a saved tree against a config")
    val.add_argument("tree")
    val.add_argument("--config", required=True)
    val.add_argument("--set", action="append", metavar="KEY=VALUE")
    val.set_defaults(func=cmd_validate)

    st = sub.add_parser("stats", help="summary statistics of a saved tree")
    st.add_argument("tree")
    st.add_argument("--config", help="take physiology from this config")
    st.add_argument("--set", action="append", metavar="KEY=VALUE")
    st.set_defaults(func=cmd_stats)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.verbose:
        logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, InputError, TreeFileError, UsageError) as e:
        _err(str(e))
        return EXIT_INPUT
    except OSError as e:
        _err(str(e))
        return EXIT_IO
    except CcoError as e:
        _err(str(e))
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
