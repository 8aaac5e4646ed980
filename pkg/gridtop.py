import argparse
import logging
import os
import sys
from typing import Optional, Sequence, Tuple

from commands.benchmark import cmd_benchmark
from commands.generate import cmd_generate
from commands.identify import EXIT_INPUT_ERROR, EXIT_SUCCESS, cmd_identify
from commands.run_config import COMMANDS, NETWORKS, RunConfig
from config.noise import ACCURACY_CLASS_PCT, INTERVAL_MINUTES, LOSS_PCT_RANGE
from config.path import READINGS_FILE, TOPOLOGY_FILE
from simulation.readings import NoiseConfig
from utils.errors import GridTopError
from utils.logging_utils import setup_package_loggers

logger = logging.getLogger("gridtop")


def float_list(text: str) -> Tuple[float, ...]:
    try:
        return tuple(float(item) for item in text.split(",") if item.strip())
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got '{text}'") from e


def int_list(text: str) -> Tuple[int, ...]:
    try:
        return tuple(int(item) for item in text.split(",") if item.strip())
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got '{text}'") from e


def loss_range(text: str) -> Tuple[float, float]:
    values = float_list(text)
    if len(values) != 2:
        raise argparse.ArgumentTypeError(f"expected LOW,HIGH, got '{text}'")
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gridtop",
        description="Distribution-network topology identification from smart-meter energy readings",
    )
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--seed", type=int, help="Master seed; a fresh one is printed when omitted")
    parser.add_argument("--trials", type=int, default=10, help="Trials per benchmark cell")
    parser.add_argument(
        "--n-multiplier", type=float_list, default=(2.0,),
        help="Comma-separated sample-count multipliers of n_i (phase) or n (rbts)",
    )
    parser.add_argument("--interval-minutes", type=float, default=INTERVAL_MINUTES)
    parser.add_argument("--accuracy-class", type=float, help=f"Meter accuracy class in percent (default {ACCURACY_CLASS_PCT}, or the rbts profile's class)")
    parser.add_argument("--loss-range", type=loss_range, default=LOSS_PCT_RANGE, help="Line loss range in percent, LOW,HIGH")
    parser.add_argument("--network", choices=NETWORKS, default="phase")
    parser.add_argument("--spec", help="JSON network spec for the rbts network")
    parser.add_argument("--out", default="", help="Output directory")
    parser.add_argument("--orientation", choices=("intervals", "meters"), default="intervals")
    parser.add_argument("--bundle", help="Directory holding readings.csv and topology.json (identify)")
    parser.add_argument("--readings", help="Readings file (identify)")
    parser.add_argument("--layers", help="Topology file providing the layer of every meter (identify)")
    parser.add_argument("--no-whiten", action="store_true", help="Plain PCA without error-covariance scaling")
    parser.add_argument("--noise-free", action="store_true", help="Disable losses, meter and sync errors")
    parser.add_argument("--no-losses", action="store_true")
    parser.add_argument("--no-meter-error", action="store_true")
    parser.add_argument("--no-sync-error", action="store_true")
    parser.add_argument("--sweep-nodes", type=int_list, default=(), help="Consumer counts to sweep (benchmark)")
    parser.add_argument("--dump-noise", action="store_true", help="Write estimated noise statistics (identify)")
    parser.add_argument("--dump-spectrum", action="store_true", help="Write singular spectra (identify)")
    parser.add_argument("--threads", type=int, help="Worker threads, capped by GRIDTOP_THREADS")
    parser.add_argument("--log-level", help="Overrides GRIDTOP_LOG_LEVEL")
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    noise = NoiseConfig(
        loss_pct_range=args.loss_range,
        accuracy_class_pct=ACCURACY_CLASS_PCT if args.accuracy_class is None else args.accuracy_class,
        interval_minutes=args.interval_minutes,
        rng_seed=args.seed or 0,
        losses=not (args.noise_free or args.no_losses),
        meter_error=not (args.noise_free or args.no_meter_error),
        sync_error=not (args.noise_free or args.no_sync_error),
    )
    readings, layers = args.readings, args.layers
    if args.bundle:
        readings = readings or os.path.join(args.bundle, READINGS_FILE)
        layers = layers or os.path.join(args.bundle, TOPOLOGY_FILE)
    return RunConfig(
        command=args.command,
        out=args.out,
        seed=args.seed,
        trials=args.trials,
        n_multipliers=tuple(args.n_multiplier),
        noise=noise,
        network=args.network,
        spec_path=args.spec,
        readings_path=readings,
        layers_path=layers,
        orientation=args.orientation,
        whiten=not args.no_whiten,
        sweep_nodes=tuple(args.sweep_nodes),
        dump_noise=args.dump_noise,
        dump_spectrum=args.dump_spectrum,
        threads=args.threads,
        profile_accuracy=args.accuracy_class is None,
    )


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    setup_package_loggers(args.log_level)
    try:
        cfg = config_from_args(args)
        if cfg.command == "generate":
            paths = cmd_generate(cfg)
            for name, path in paths.items():
                print(f"{name}: {path}")
            return EXIT_SUCCESS
        if cfg.command == "identify":
            return cmd_identify(cfg)
        report = cmd_benchmark(cfg)
        print(report.summary())
        return EXIT_SUCCESS
    except (GridTopError, ValueError) as e:
        logger.error(f"{type(e).__name__}: {e}")
        return EXIT_INPUT_ERROR


if __name__ == '__main__':
    sys.exit(main())
