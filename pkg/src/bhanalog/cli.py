"""Command-line interface: ``bhanalog run|preset|list-presets|validate|dispersion``."""

from __future__ import annotations

import argparse
import logging
import sys
import warnings
from pathlib import Path

from pydantic import ValidationError

from .errors import ConfigError, ExtractionError, NumericError
from .runner import run
from .scenarios import PRESETS, list_presets, load_scenario, preset, scenario_warnings

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 1, 2, 3

log = logging.getLogger("bhanalog")


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", type=Path, help="output directory (default runs/<name>)")
    common.add_argument("--format", choices=["csv", "json", "bin"], help="snapshot format")
    common.add_argument("--seed", type=int, help="seed for randomized initial states")
    common.add_argument("--quiet", action="store_true", help="only report errors")

    ap = argparse.ArgumentParser(prog="bhanalog", description="Bose-Hubbard analog-gravity simulator")
    sub = ap.add_subparsers(dest="command", required=True)
    p = sub.add_parser("run", parents=[common], help="run a scenario file")
    p.add_argument("config")
    p = sub.add_parser("preset", parents=[common], help="run a named preset")
    p.add_argument("name", help="one of: " + ", ".join(PRESETS))
    p.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                   help="dotted override, e.g. integrator.steps=100 (repeatable)")
    sub.add_parser("list-presets", parents=[common], help="list the preset catalog")
    p = sub.add_parser("validate", parents=[common], help="check a scenario file")
    p.add_argument("config")
    p = sub.add_parser("dispersion", parents=[common], help="measure the dispersion plan of a scenario")
    p.add_argument("config")
    return ap


def _report(man, quiet):
    if quiet:
        return
    print(f"{man.status}: {len(man.artifacts)} artifacts")
    for k, v in sorted(man.summary.items()):
        print(f"  {k} = {v}")


def _execute(args) -> int:
    if args.command == "list-presets":
        for name, desc in list_presets():
            print(f"{name:24s} {desc}")
        return EXIT_OK
    if args.command == "preset":
        s = preset(args.name, args.override)
        for w in scenario_warnings(s):
            log.warning(w)
    else:
        s = load_scenario(Path(args.config))
    if args.command == "validate":
        if not args.quiet:
            print(f"{s.name}: valid ({len(scenario_warnings(s))} warnings)")
        return EXIT_OK
    out = args.out or Path("runs") / s.name
    man = run(s, out, fmt=args.format, seed=args.seed, dispersion_only=args.command == "dispersion")
    _report(man, args.quiet)
    return EXIT_OK


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.ERROR if args.quiet else logging.INFO, format="%(levelname)s: %(message)s")
    logging.captureWarnings(True)
    if args.quiet:
        warnings.simplefilter("ignore")
    try:
        return _execute(args)
    except (ConfigError, ValidationError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericError, ExtractionError, FloatingPointError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"I/O failure: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
