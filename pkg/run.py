#!/usr/bin/env python3
"""
Command-line entry point for the NSF statistics toolkit
"""
import argparse
import sys

from config import get_config
from src.main.python.config import ingest_config
from src.main.python.core.exceptions import ConfigRejected, NSFError
from src.main.python.services.orchestrator import RunOrchestrator
from src.main.python.utils.logging_utils import set_verbosity, setup_logger

EXIT_OK = 0
EXIT_CONFIG_REJECTED = 2
EXIT_NUMERICAL_FAILURE = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="Statistical solutions of the Navier-Stokes-Fourier system on the periodic box"
    )
    parser.add_argument('--config', required=True, help="JSON run configuration (or a manifest to replay)")
    parser.add_argument('--mode', help="Override the configured mode")
    parser.add_argument('--seed', type=int, help="Override the base seed")
    parser.add_argument('--out', help="Output directory")
    parser.add_argument('--workers', type=int, help="Worker pool size for ensembles")
    parser.add_argument('--verbose', action='store_true', help="Debug logging")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    settings = get_config()
    set_verbosity(args.verbose, settings.LOG_LEVEL)
    logger = setup_logger("nsf-stat")

    try:
        run_config = ingest_config(args.config).with_overrides(
            mode=args.mode, seed=args.seed,
            output_dir=args.out, workers=args.workers,
        )
        if run_config.output_dir is None:
            run_config.output_dir = settings.init_output()
    except ConfigRejected as e:
        logger.error(str(e))
        return EXIT_CONFIG_REJECTED

    try:
        manifest = RunOrchestrator(settings.WORKERS).run(run_config)
    except ConfigRejected as e:
        logger.error(str(e))
        return EXIT_CONFIG_REJECTED
    except NSFError as e:
        logger.error(f"Run failed: {e}")
        return EXIT_NUMERICAL_FAILURE

    print(f"✅ {manifest.mode} run complete: {len(manifest.files)} file(s) in {run_config.output_dir}")
    print(f"🔑 Config hash {manifest.config_hash}")
    return EXIT_OK


if __name__ == '__main__':
    sys.exit(main())
