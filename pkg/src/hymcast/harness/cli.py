"""Command-line entry point.

Exit codes: 0 success, 1 invalid configuration or arguments, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import MAX_SEED, ConfigError, load_config
from .io import write_aggregates, write_histogram, write_pattern, write_points, write_runs
from .presets import PRESET_NAMES, override, preset
from .sweep import beam_pattern_study, correlation_study, run_sweep

log = logging.getLogger("hymcast")

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _seed(text: str) -> int:
    try:
        value = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= value <= MAX_SEED:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return value


def _positive(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    source = common.add_mutually_exclusive_group()
    source.add_argument("--config", type=Path, help="scenario JSON file")
    source.add_argument("--preset", choices=PRESET_NAMES, help="built-in scenario")
    scale = common.add_mutually_exclusive_group()
    scale.add_argument("--desk", dest="full_scale", action="store_false", help="desk-scale preset (default)")
    scale.add_argument("--full-scale", dest="full_scale", action="store_true",
                       help="full-scale preset; may run for many hours")
    common.set_defaults(full_scale=False)
    common.add_argument("--out", type=Path, default=Path("."), help="output directory (default: .)")
    common.add_argument("--seed", type=_seed, help="override the master seed")
    common.add_argument("--mode", choices=("hybrid", "digital", "both"), help="override the precoder mode")
    common.add_argument("--workers", type=_positive, default=1, help="parallel worker processes")
    common.add_argument("--realizations", type=_positive, help="override the number of realizations")
    common.add_argument("--record-time", action="store_true",
                        help="write measured wall times (outputs are then no longer reproducible)")
    common.add_argument("-v", "--verbose", action="count", default=0, help="more logging")

    parser = _Parser(prog="hymcast", description="Hybrid multicast precoder and combiner design by alternating SDR.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("run", parents=[common], help="run one scenario (sweep axes ignored)")
    sub.add_parser("sweep", parents=[common], help="run the scenario's sweep axes")
    p = sub.add_parser("corrhist", parents=[common], help="channel-correlation histogram")
    p.add_argument("--bins", type=_positive, default=20)
    sub.add_parser("beampattern", parents=[common], help="beam patterns of one optimized realization")
    return parser


def _load(args):
    if args.config is not None:
        cfg = load_config(args.config)
    elif args.preset is not None:
        cfg = preset(args.preset, full_scale=args.full_scale)
        if args.full_scale:
            log.warning("full-scale preset %s selected; this can take many hours", args.preset)
    else:
        raise ConfigError("config: pass --config <path> or --preset <name>")
    try:
        return override(cfg, master_seed=args.seed, mode=args.mode, n_realizations=args.realizations)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _summary(table) -> str:
    lines = []
    for row in table.aggregates:
        lines.append(f"point {row.sweep_point} {row.mode}: packets {row.mean_n_packets:.3f}, "
                     f"P_tx {row.mean_p_tx_dbm:.2f} dBm over {row.n_realizations} realizations")
    return "\n".join(lines)


def _cmd_runs(args, cfg, sweep: bool) -> int:
    if sweep and not cfg.sweep:
        raise ConfigError("sweep: the scenario defines no sweep axes; use 'run' instead")
    if not sweep:
        cfg = cfg.with_point({})
    table = run_sweep(cfg, workers=args.workers, record_time=args.record_time)
    write_runs(args.out / "runs.csv", table.runs)
    write_aggregates(args.out / "aggregate.csv", table.aggregates)
    if sweep:
        write_points(args.out / "points.csv", table.points)
    print(_summary(table))
    if table.runs and not any(r.ok for r in table.runs):
        log.error("every realization failed")
        return EXIT_RUNTIME
    return EXIT_OK


def _cmd_corrhist(args, cfg) -> int:
    hist = correlation_study(cfg, bins=args.bins)
    write_histogram(args.out / "histogram.csv", hist)
    print(f"intra-cluster mean {hist.intra_mean:.4f}, inter-cluster mean {hist.inter_mean:.4f} "
          f"over {cfg.n_realizations} realizations")
    return EXIT_OK


def _cmd_beampattern(args, cfg) -> int:
    patterns = beam_pattern_study(cfg)
    for i, pattern in enumerate(patterns.tx):
        write_pattern(args.out / f"tx_group{i}.csv", pattern)
    for k, pattern in enumerate(patterns.rx):
        write_pattern(args.out / f"rx_user{k}.csv", pattern)
    m = patterns.result.metrics
    print(f"{m.n_packets} of {cfg.num_users} users served at {m.p_tx_dbm:.2f} dBm; "
          f"wrote {len(patterns.tx)} transmit and {len(patterns.rx)} receive patterns to {args.out}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _load(args)
        if args.command == "run":
            return _cmd_runs(args, cfg, sweep=False)
        if args.command == "sweep":
            return _cmd_runs(args, cfg, sweep=True)
        if args.command == "corrhist":
            return _cmd_corrhist(args, cfg)
        return _cmd_beampattern(args, cfg)
    except ConfigError as exc:
        print(f"hymcast: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:  # any other failure is a runtime error for the caller
        log.debug("runtime failure", exc_info=True)
        print(f"hymcast: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
