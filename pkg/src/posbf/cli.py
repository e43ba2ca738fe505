"""Command-line entry point: ``posbf {se-sweep,ee-sweep,beampattern,estimate}``."""
from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from .errors import ConfigError, NumericalError
from .harness import ExperimentConfig, read_config_file, run

log = logging.getLogger("posbf")

COMMANDS = {
    "se-sweep": "se_sweep",
    "ee-sweep": "ee_sweep",
    "beampattern": "beampattern",
    "estimate": "estimation",
}

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="posbf", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, experiment in COMMANDS.items():
        p = sub.add_parser(name, help=f"run the {experiment} experiment")
        p.add_argument("--config", help="YAML/JSON experiment config")
        p.add_argument("--seed", type=int, help="master seed (overrides the config)")
        p.add_argument("--out", help="output path; stdout if omitted")
        p.add_argument("--format", choices=("csv", "json"), help="output format")
        p.add_argument("--trials", type=int, help="Monte Carlo trials (overrides the config)")
        p.add_argument("--workers", type=int, default=1, help="worker processes")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def load_config(args, experiment: str) -> ExperimentConfig:
    data = read_config_file(args.config) if args.config else {}
    if data.get("experiment", experiment) != experiment:
        raise ConfigError(f"config is for {data['experiment']!r}, command runs {experiment!r}")
    data["experiment"] = experiment
    for key, attr in (("seed", "seed"), ("out", "output"), ("format", "format"), ("trials", "trials")):
        value = getattr(args, key)
        if value is not None:
            data[attr] = value
    if data.get("seed", 0) < 0:
        raise ConfigError("seed must be non-negative")
    return ExperimentConfig.from_dict(data)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = load_config(args, COMMANDS[args.command])
        log.info("running %s with %d trials, seed %d", config.experiment, config.trials, config.seed)
        table = run(config, workers=args.workers)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC

    text = table.dumps(config.format)
    if config.output:
        with open(config.output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        log.info("wrote %d rows to %s", len(table.rows), config.output)
    else:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
