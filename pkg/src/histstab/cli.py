"""Command line: ``histstab run|validate|list-scenarios``.

Exit codes: 0 success, 2 validation, 3 resource cap, 4 degenerate context,
5 I/O.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .errors import HistStabError
from .scenario import load_scenario, run_scenario, shipped_scenarios

log = logging.getLogger("histstab")


def _run(args) -> None:
    cfg = load_scenario(args.scenario)
    rep = run_scenario(cfg, args.out, seed=args.seed)
    print(f"wrote {len(rep.files)} files to {rep.out_dir}")


def _validate(args) -> None:
    cfg = load_scenario(args.scenario)
    print(f"{cfg.source}: ok")


def _list(args) -> None:
    for name, path in shipped_scenarios().items():
        print(f"{name}\t{path}")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="histstab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("run", help="run a scenario and write its report and tables")
    p.add_argument("scenario", help="scenario file or shipped fixture name")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    p.set_defaults(func=_run)
    p = sub.add_parser("validate", help="load and validate a scenario")
    p.add_argument("scenario")
    p.set_defaults(func=_validate)
    p = sub.add_parser("list-scenarios", help="list the shipped fixtures")
    p.set_defaults(func=_list)

    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(levelname)s: %(message)s")
    try:
        args.func(args)
    except HistStabError as exc:
        log.error("%s", exc)
        return exc.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
