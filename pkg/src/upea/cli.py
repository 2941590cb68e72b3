"""Command-line front end: one subcommand per experiment.

Sweep subcommands print CSV to stdout, or write it to --out together with a
.meta.json sidecar (config, RNG algorithm, wall time, calibration records).
calibrate emits a calibration record as JSON; verify-circuit emits a check
report and signals failure through its exit code.

Exit codes: 0 success, 1 usage error, 2 verify-circuit check failure,
3 I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace

from .counting import CalibrationRecord
from .harness import (
    EXPERIMENTS,
    PRESETS,
    SweepConfig,
    csv_text,
    run_sweep,
    run_verify_circuit,
    write_csv,
    write_metadata,
)
from .phase_math import ThetaMode

__all__ = ["main", "build_parser"]

_SWEEP_COMMANDS = tuple(e for e in EXPERIMENTS if e != "verify-circuit")


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad usage; the contract reserves 2 for
    # verify-circuit failures, so route usage problems through an exception
    def error(self, message: str) -> None:  # type: ignore[override]
        raise _UsageError(message)


def _parse_r(text: str) -> int | tuple[int, int]:
    try:
        if ".." in text:
            lo, hi = text.split("..", 1)
            return int(lo), int(hi)
        return int(text)
    except ValueError:
        raise _UsageError(f"--R expects an integer or lo..hi range, got {text!r}")


def _add_sweep_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--T", type=int, help="register dimension, a power of two")
    p.add_argument("--R", help="repetitions: integer, or lo..hi for range sweeps")
    p.add_argument("--grid", type=int, help="number of grid points")
    p.add_argument("--samples", type=int, help="trials per grid cell")
    p.add_argument(
        "--theta-mode",
        dest="theta_mode",
        metavar="{full|period|fixed:<x>}",
        help="reference-shift distribution",
    )
    p.add_argument("--seed", type=int, help="base seed (default 1)")
    p.add_argument("--out", help="CSV output path (stdout if omitted)")
    p.add_argument("--preset", choices=sorted(PRESETS), help="start from a named preset")
    p.add_argument("--calibration", help="calibration record JSON to apply")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="upea", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in _SWEEP_COMMANDS:
        _add_sweep_flags(sub.add_parser(name, help=f"run the {name} sweep"))
    v = sub.add_parser("verify-circuit", help="check circuits against analytic laws")
    v.add_argument("--seed", type=int, help="base seed (default 1)")
    v.add_argument("--out", help="report JSON path (stdout if omitted)")
    return parser


def _build_config(name: str, args: argparse.Namespace) -> SweepConfig:
    kwargs: dict = {}
    if args.T is not None:
        kwargs["T"] = args.T
    if args.R is not None:
        kwargs["R"] = _parse_r(args.R)
    if args.grid is not None:
        kwargs["grid_points"] = args.grid
    if args.samples is not None:
        kwargs["n_samples"] = args.samples
    if args.theta_mode is not None:
        kwargs["theta_mode"] = ThetaMode.parse(args.theta_mode)
    if args.seed is not None:
        kwargs["base_seed"] = args.seed
    if args.out is not None:
        kwargs["output_path"] = args.out

    if args.preset is not None:
        base = PRESETS[args.preset]
        if base.experiment != name:
            raise _UsageError(
                f"preset {args.preset} belongs to {base.experiment}, not {name}"
            )
        return replace(base, **kwargs)
    return SweepConfig(experiment=name, **kwargs)


def _load_calibration(path: str) -> CalibrationRecord:
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    try:
        return CalibrationRecord.from_json(text)
    except (KeyError, ValueError, json.JSONDecodeError) as exc:
        raise _UsageError(f"bad calibration record {path!r}: {exc}")


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    try:
        if args.command == "verify-circuit":
            report = run_verify_circuit(seed=args.seed if args.seed is not None else 1)
            _emit(json.dumps(report, indent=2) + "\n", args.out)
            if not report["passed"]:
                print("verify-circuit: FAILED", file=sys.stderr)
                return 2
            return 0

        config = _build_config(args.command, args)
        calibration = _load_calibration(args.calibration) if args.calibration else None
        report = run_sweep(config, calibration=calibration)

        if args.command == "calibrate":
            record = report.metadata["calibration_record"]
            _emit(json.dumps(record, indent=2) + "\n", config.output_path)
            return 0

        if config.output_path is None:
            sys.stdout.write(csv_text(report.entries))
        else:
            write_csv(report, config.output_path)
            write_metadata(report, config.output_path + ".meta.json")
            print(
                f"wrote {len(report.entries)} rows to {config.output_path}",
                file=sys.stderr,
            )
        return 0
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
