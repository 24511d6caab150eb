"""Command-line front end: ``mrebench run | sweep | invert | export-slice | version``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4


def _cmd_run(args) -> int:
    from .config import parse_config
    from .harness import format_report, run_scenario

    cfg = parse_config(args.config)
    result = run_scenario(cfg, args.output)
    print(format_report(result.report))
    print(f"artifacts: {result.output}")
    return EXIT_OK


def _cmd_sweep(args) -> int:
    from .config import parse_config
    from .harness import run_resolution_sweep

    cfg = parse_config(args.config)
    anchor = None
    if args.anchor_nodes or args.anchor_tsamples:
        anchor = (args.anchor_nodes or args.nodes[len(args.nodes) // 2],
                  args.anchor_tsamples or args.tsamples[-1])
    res = run_resolution_sweep(cfg, args.nodes, args.tsamples, args.output, args.mode, anchor,
                               args.periods, args.allow_large, args.workers)
    for c in res.cells.values():
        if c.status != "ok":
            print(f"notice: cell {c.nodes}^3 x {c.steps_per_period} skipped: {c.notice}")
    print(res.difference_tables())
    print()
    print(res.delta_table("storage"))
    print()
    print(res.delta_table("loss"))
    print()
    print(res.cpu_table())
    return EXIT_OK


def _cmd_invert(args) -> int:
    from .archive import export_fields
    from .harness import invert_archive

    elastogram, regions = invert_archive(args.archive, args.stencil, rho=args.rho)
    stem = export_fields(elastogram, args.output)
    for name, r in regions.items():
        print(f"{name}: G' {r['storage']:.2f} Pa ({r['signed_storage_pct']:+.2f}%), "
              f"G'' {r['loss']:.2f} Pa ({r['signed_loss_pct']:+.2f}%)")
    if args.report:
        Path(args.report).write_text(json.dumps(regions, indent=2) + "\n")
    print(f"elastogram: {stem}.bin")
    return EXIT_OK


def _cmd_export_slice(args) -> int:
    from .archive import export_slice, read_archive

    arc = read_archive(args.archive)
    index = args.index
    if index is None:
        index = (arc.grid.nodes_per_axis["xyz".index(args.axis)] - 1) // 2
    path = export_slice(arc, args.axis, index, args.output)
    print(f"slice: {path}")
    return EXIT_OK


def _cmd_version(args) -> int:
    print(f"mrebench {__version__}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mrebench", description=__doc__)
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="forward run, inversion and report for one scenario")
    r.add_argument("config")
    r.add_argument("-o", "--output", help="artifact directory (default: config output)")
    r.set_defaults(func=_cmd_run)

    s = sub.add_parser("sweep", help="resolution sweep over node and sampling ladders")
    s.add_argument("config")
    s.add_argument("--nodes", type=int, nargs="+", required=True)
    s.add_argument("--tsamples", type=int, nargs="+", required=True)
    s.add_argument("--mode", choices=("cross", "axes"), default="cross",
                   help="full product, or the two ladders through an anchor cell")
    s.add_argument("--anchor-nodes", type=int)
    s.add_argument("--anchor-tsamples", type=int)
    s.add_argument("--periods", type=int, help="fixed number of drive periods per cell")
    s.add_argument("--allow-large", action="store_true", help="lift the 75^3 desk cap")
    s.add_argument("--workers", type=int, help="worker processes (default: MREBENCH_WORKERS)")
    s.add_argument("-o", "--output")
    s.set_defaults(func=_cmd_sweep)

    i = sub.add_parser("invert", help="re-invert a stored displacement history")
    i.add_argument("archive")
    i.add_argument("--stencil", choices=("standard", "nested"), default=None)
    i.add_argument("--rho", type=float, default=1000.0,
                   help="density when the archive carries no scenario config")
    i.add_argument("-o", "--output", default="elastogram")
    i.add_argument("--report", help="write region statistics as JSON")
    i.set_defaults(func=_cmd_invert)

    e = sub.add_parser("export-slice", help="write one lattice plane of an archive as CSV")
    e.add_argument("archive")
    e.add_argument("--axis", choices=("x", "y", "z"), default="y")
    e.add_argument("--index", type=int)
    e.add_argument("-o", "--output", default="slice.csv")
    e.set_defaults(func=_cmd_export_slice)

    v = sub.add_parser("version", help="print the version")
    v.set_defaults(func=_cmd_version)
    return p


def main(argv: list[str] | None = None) -> int:
    from .archive import ArchiveError
    from .assembly import AssemblyError
    from .config import ConfigError
    from .grid import GridError
    from .integrator import NumericalError
    from .inversion import InversionError
    from .material import MaterialError
    from .vessel import VesselError

    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, GridError, MaterialError, VesselError, AssemblyError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, InversionError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ArchiveError, OSError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
