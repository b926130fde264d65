"""Command-line entry point: parse a scenario file, run it, write reports.

Exit codes: 0 ok, 2 parse error, 3 strict-mode delivery failure, 4 internal
invariant violation. ``SOQN_LOG`` selects log verbosity (debug|info|warning),
``SOQN_BACKEND`` selects the kernel backend (auto|numba|numpy).
"""
from __future__ import annotations

import argparse
import logging
import os
import sys

from ._kernels import backend_name
from .runner import EXIT_PARSE_ERROR, run_scenario
from .scenario import PARAM_SPECS, ScenarioError, parse_scenario

log = logging.getLogger("soqn")


def _configure_logging() -> None:
    level = os.environ.get("SOQN_LOG", "warning").strip().lower()
    numeric = {"debug": logging.DEBUG, "info": logging.INFO,
               "warning": logging.WARNING}.get(level, logging.WARNING)
    logging.basicConfig(level=numeric, format="%(levelname)s %(name)s: %(message)s")


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="soqn",
                                description="Simulate a self-organizing free-space QKD network scenario.")
    p.add_argument("--scenario", required=True, help="scenario file to run")
    p.add_argument("--out", default="soqn_out", help="output directory (default: soqn_out)")
    p.add_argument("--until", type=float, default=None,
                   help="stop after processing events up to this time")
    p.add_argument("--strict", action="store_true",
                   help="exit 3 when any message fails to deliver")
    p.add_argument("--snapshot", type=float, action="append", default=[],
                   help="capture a routing-table snapshot at this time (repeatable)")
    p.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    p.add_argument("--sweep", default=None, metavar="PARAM=V1,V2,...",
                   help="run once per value of a param, each in its own subdirectory")
    return p


def _parse_sweep(spec: str) -> tuple[str, list]:
    if "=" not in spec:
        raise ValueError("--sweep expects PARAM=V1,V2,...")
    name, _, values = spec.partition("=")
    if name not in PARAM_SPECS:
        raise ValueError(f"unknown sweep param {name!r}")
    typ = PARAM_SPECS[name][1]
    parsed = []
    for raw in values.split(","):
        if typ is bool:
            if raw not in ("true", "false"):
                raise ValueError(f"sweep value for {name} must be true or false, got {raw!r}")
            parsed.append(raw == "true")
        else:
            parsed.append(typ(raw))
    if not parsed:
        raise ValueError("--sweep needs at least one value")
    return name, parsed


def main(argv: list[str] | None = None) -> int:
    _configure_logging()
    args = _build_parser().parse_args(argv)
    try:
        with open(args.scenario) as fh:
            text = fh.read()
    except OSError as exc:
        print(f"soqn: cannot read scenario: {exc}", file=sys.stderr)
        return EXIT_PARSE_ERROR
    try:
        sc = parse_scenario(text)
    except ScenarioError as exc:
        print(f"soqn: {args.scenario}: {exc}", file=sys.stderr)
        return EXIT_PARSE_ERROR

    log.info("backend: %s", backend_name())
    runs: list[tuple[str, dict]] = []
    if args.sweep:
        try:
            name, values = _parse_sweep(args.sweep)
        except ValueError as exc:
            print(f"soqn: {exc}", file=sys.stderr)
            return EXIT_PARSE_ERROR
        for v in values:
            sub = os.path.join(args.out, f"sweep-{name}-{v}")
            runs.append((sub, {name: v}))
    else:
        runs.append((args.out, {}))

    worst = 0
    for out_dir, overrides in runs:
        sweep_sc = sc
        if overrides:
            sweep_sc = parse_scenario(text)  # fresh copy per run
            sweep_sc.params.update(overrides)
        try:
            report, code = run_scenario(
                sweep_sc, until=args.until, strict=args.strict,
                snapshot_times=tuple(args.snapshot), seed_override=args.seed,
                out_dir=out_dir)
        except ValueError as exc:
            print(f"soqn: invalid configuration: {exc}", file=sys.stderr)
            return EXIT_PARSE_ERROR
        summary = " ".join(f"{k}={v}" for k, v in report.summary.items())
        print(f"{out_dir}: exit={code} {summary}")
        for v in report.violations:
            print(f"{out_dir}: VIOLATION {v}", file=sys.stderr)
        worst = max(worst, code)
    return worst


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
