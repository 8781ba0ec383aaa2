"""Command-line interface.

Errors are printed to stderr as ``error[<category>]: <message>`` and map to
exit codes: 0 success, 2 configuration error, 3 runtime or I/O error.
"""
from __future__ import annotations

import argparse
import sys
import warnings

from .config import (
    PRESETS,
    ConfigError,
    ScenarioConfig,
    desk_scale,
    dump_config,
    fingerprint,
    full_scale,
    load_config,
    validate,
)
from .io import PLOT_KINDS, emit_csv, emit_plot, load_trace, read_csv, save_trace
from .runner import AXES, apply_equalizer, received_waveform, run_scenario, sweep

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


class _Failure(Exception):
    def __init__(self, category: str, message: str, code: int):
        super().__init__(message)
        self.category = category
        self.code = code


def _scenario(args) -> ScenarioConfig:
    if args.config and args.preset:
        raise ConfigError("--config and --preset are mutually exclusive")
    if args.config:
        try:
            cfg = load_config(args.config)
        except OSError as exc:
            raise _Failure("io", f"cannot read config: {exc}", EXIT_RUNTIME) from None
    elif args.preset:
        cfg = PRESETS[args.preset]()
    else:
        cfg = ScenarioConfig()
    if getattr(args, "desk", False):
        cfg = desk_scale(cfg)
    if getattr(args, "full", False):
        cfg = full_scale(cfg)
        print("warning: --full runs 20 WDM channels over 32 spans; expect hours per point",
              file=sys.stderr)
    if getattr(args, "equalizer", None):
        cfg = apply_equalizer(cfg, args.equalizer)
    validate(cfg)
    return cfg


def _parse_values(axis: str, text: str) -> list:
    parts = [p.strip() for p in text.split(",") if p.strip()]
    if axis in ("case", "equalizer"):
        return parts
    try:
        return [float(p) for p in parts]
    except ValueError:
        raise ConfigError(f"values: expected numbers for axis {axis}, got {text!r}") from None


def cmd_run(args) -> int:
    cfg = _scenario(args)
    trace = None
    if args.trace_in:
        try:
            trace = load_trace(args.trace_in)
        except (OSError, ValueError) as exc:
            raise _Failure("io", f"{args.trace_in}: {exc}", EXIT_RUNTIME) from None
    result = run_scenario(cfg, trace=trace)
    if args.trace_out:
        save_trace(received_waveform(cfg) if trace is None else trace, args.trace_out)
    if args.csv:
        emit_csv([result.row()], args.csv)
    if args.constellation:
        emit_plot([], "constellation", args.constellation, symbols=result.equalized)
    rep = result.report
    print(f"fingerprint   {result.fingerprint}")
    print(f"equalizer     {result.row()['equalizer']}")
    print(f"ber           {rep.ber:.6g} ({rep.n_errors}/{rep.n_bits_counted})")
    suffix = " (error-free ceiling)" if rep.q_is_ceiling else ""
    print(f"q_factor_db   {rep.q_factor_db:.3f}{suffix}")
    print(f"evm_percent   {rep.evm_percent:.3f}")
    print(f"net_bit_rate  {result.net_bit_rate / 1e9:.3f} Gbit/s")
    print(f"wall_time_s   {result.wall_time:.1f}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _scenario(args)
    values = _parse_values(args.axis, args.values)
    equalizers = [e.strip() for e in args.equalizers.split(",")] if args.equalizers else None

    def progress(task):
        idx, value, repeat, _ = task
        print(f"done {args.axis}={value} repeat={repeat}", file=sys.stderr)

    table = sweep(cfg, args.axis, values, repeats=args.repeats, equalizers=equalizers,
                  workers=args.workers, progress=progress)
    emit_csv(table.rows, args.csv)
    if args.summary:
        emit_csv(table.summary(), args.summary)
    for s in table.summary():
        print(f"{args.axis}={s['axis_value']}  {s['equalizer']:<16} mean Q {s['mean_q_db']:7.3f} dB"
              f"  [{s['min_q_db']:.3f}, {s['max_q_db']:.3f}]")
    return EXIT_OK


def cmd_plot(args) -> int:
    try:
        rows = read_csv(args.csv)
    except OSError as exc:
        raise _Failure("io", f"cannot read {args.csv}: {exc}", EXIT_RUNTIME) from None
    if args.kind == "constellation":
        raise ConfigError("kind: constellation plots come from `run --constellation`")
    emit_plot(rows, args.kind, args.out)
    return EXIT_OK


def cmd_validate(args) -> int:
    cfg = _scenario(args)
    print(f"ok {fingerprint(cfg)}")
    return EXIT_OK


def cmd_print_defaults(args) -> int:
    cfg = _scenario(args)
    sys.stdout.write(dump_config(cfg))
    return EXIT_OK


def _add_scenario_args(p, equalizer=True):
    p.add_argument("--config", help="YAML scenario file")
    p.add_argument("--preset", choices=sorted(PRESETS), help="start from a named preset")
    p.add_argument("--desk", action="store_true", help="2 km steps and 2x oversampling (more if a WDM comb needs it)")
    p.add_argument("--full", action="store_true", help="20 WDM channels over 32 spans (slow)")
    if equalizer:
        p.add_argument("--equalizer", help="linear | dbp[:steps] | ann | mimo_dl[:CaseN]")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="coofdm", description="CO-OFDM link simulator and equalizer bench")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one scenario")
    _add_scenario_args(p)
    p.add_argument("--csv", help="write the result row here")
    p.add_argument("--trace-out", help="save the received waveform")
    p.add_argument("--trace-in", help="replay a saved received waveform")
    p.add_argument("--constellation", help="write an SVG of the equalized symbols")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="sweep one axis with repeats")
    _add_scenario_args(p)
    p.add_argument("--axis", required=True, choices=AXES)
    p.add_argument("--values", required=True, help="comma-separated axis values")
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--equalizers", help="comma-separated equalizer labels run at every point")
    p.add_argument("--workers", type=int, help="worker processes (default: $COOFDM_WORKERS or 1)")
    p.add_argument("--csv", required=True, help="per-run rows")
    p.add_argument("--summary", help="per-point mean/min/max rows")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("plot", help="render a CSV table as SVG")
    p.add_argument("--csv", required=True)
    p.add_argument("--kind", required=True, choices=PLOT_KINDS)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("validate", help="check a scenario without running it")
    _add_scenario_args(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("print-defaults", help="emit a complete scenario file")
    _add_scenario_args(p, equalizer=False)
    p.set_defaults(func=cmd_print_defaults)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            return args.func(args)
    except _Failure as exc:
        print(f"error[{exc.category}]: {exc}", file=sys.stderr)
        return exc.code
    except ConfigError as exc:
        print(f"error[config]: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error[io]: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (ValueError, FloatingPointError, RuntimeError) as exc:
        print(f"error[runtime]: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
