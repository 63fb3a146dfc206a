"""Command-line front end.

Subcommands: validate, run, gen-cube, report.  Structured results go to
stdout as JSON; errors go to stderr.  Exit codes: 0 success, 2 unreadable or
malformed input, 3 scenario failed validation.
"""
from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import scenario as sio

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_INVALID = 3


def _emit(payload: dict) -> None:
    print(json.dumps(payload, indent=2))


def _load_valid(path: str) -> sio.Scenario | int:
    sc = sio.load_scenario(path)
    report = sio.validate_scenario(sc)
    if not report.ok:
        _emit({"ok": False, "violations": report.violations})
        return EXIT_INVALID
    return sc


def _cmd_validate(args: argparse.Namespace) -> int:
    sc = sio.load_scenario(args.scenario)
    report = sio.validate_scenario(sc)
    _emit(
        {
            "ok": report.ok,
            "agents": sc.topology.n_agents,
            "followers": sc.topology.followers,
            "violations": report.violations,
        }
    )
    return EXIT_OK if report.ok else EXIT_INVALID


def _cmd_run(args: argparse.Namespace) -> int:
    sc = _load_valid(args.scenario)
    if isinstance(sc, int):
        return sc
    summary = sio.run(sc, trace_path=args.out)
    _emit(summary)
    return EXIT_OK


def _cmd_gen_cube(args: argparse.Namespace) -> int:
    sc = sio.generate_cube_scenario(
        side=args.side,
        seed=args.seed,
        noise_theta0=np.radians(args.noise_theta0_deg),
        noise_freq=args.noise_freq_hz,
        duration=args.duration,
        dt=args.dt,
        stride=args.stride,
    )
    text = json.dumps(sio.serialize_scenario(sc), indent=2) + "\n"
    if args.out == "-":
        sys.stdout.write(text)
    else:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    return EXIT_OK


def _cmd_report(args: argparse.Namespace) -> int:
    _emit(sio.report_from_trace(args.trace))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dirpose",
        description="Distributed direction-only pose localization simulator.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a scenario file, print a report")
    p.add_argument("scenario", help="scenario JSON file")
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("run", help="integrate a scenario, print a summary")
    p.add_argument("scenario", help="scenario JSON file")
    p.add_argument("-o", "--out", default=None, help="write the sampled trace CSV here")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("gen-cube", help="emit the 8-agent cube scenario")
    p.add_argument("--side", type=float, default=5.0, help="cube edge length")
    p.add_argument("--seed", type=int, default=1, help="base seed for all draws")
    p.add_argument(
        "--noise-theta0-deg", type=float, default=0.0, help="direction wobble amplitude"
    )
    p.add_argument("--noise-freq-hz", type=float, default=5.0, help="wobble frequency")
    p.add_argument("--duration", type=float, default=60.0, help="simulated seconds")
    p.add_argument("--dt", type=float, default=1e-3, help="integrator step")
    p.add_argument("--stride", type=int, default=50, help="steps between trace samples")
    p.add_argument("--out", default="-", help="output file, '-' for stdout")
    p.set_defaults(func=_cmd_gen_cube)

    p = sub.add_parser("report", help="summarize an existing trace CSV")
    p.add_argument("trace", help="trace CSV file")
    p.set_defaults(func=_cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except sio.ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
