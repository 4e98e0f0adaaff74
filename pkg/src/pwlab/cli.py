"""Command-line entry point.

    pwlab ground-state|evolve|dichotomy|stabilize|blowup|check <config.json>
          [--out DIR] [--dt X] [--modes N]

Prints one line per check and exits 0 iff all checks passed. The
PWLAB_THREADS environment variable caps sweep workers.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from .errors import PwlabError
from .scenario import SCENARIOS, load_config, run_scenario


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pwlab",
        description="Potential-well laboratory for the damped focusing "
                    "cubic wave equation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SCENARIOS:
        p = sub.add_parser(name, help=f"run the {name} scenario")
        p.add_argument("config", help="scenario config (JSON)")
        p.add_argument("--out", default="pwlab_out", help="output directory")
        p.add_argument("--dt", type=float, default=None, help="override dt")
        p.add_argument("--modes", type=int, default=None,
                       help="override n_modes")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        overrides = {"scenario": args.command}
        if args.dt is not None:
            overrides["dt"] = args.dt
        if args.modes is not None:
            overrides["n_modes"] = args.modes
        cfg = replace(cfg, **overrides)
        report = run_scenario(cfg, out_dir=args.out)
    except PwlabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for check in report.checks:
        status = "PASS" if check.passed else "FAIL"
        print(f"[{status}] {check.name}: value={check.value:g} "
              f"tolerance={check.tolerance:g}")
    for path in report.files:
        print(f"wrote {path}")
    print(f"scenario={report.scenario} wall_time={report.wall_time_s:.2f}s "
          f"result={'ok' if report.all_passed else 'FAILED'}")
    return 0 if report.all_passed else 1


if __name__ == "__main__":
    sys.exit(main())
