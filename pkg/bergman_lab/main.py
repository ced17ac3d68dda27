#!/usr/bin/env python3
"""Main module for the Bergman kernel laboratory.

This module ties together configuration, the experiment runner and the
result writer, and provides the CLI interface.
"""
import os
import sys
import logging

from bergman_lab.config import Config
from bergman_lab.experiments import EXIT_CONFIG, run_experiment

logger = logging.getLogger(__name__)

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
LOG_FILENAME = "bergman-lab.log"

# Numerically heavy modules whose diagnostics follow the root level down to DEBUG
DEBUG_MODULES = ('bergman_lab.oracle', 'bergman_lab.neumann', 'bergman_lab.dbar')


def setup_logging(level="INFO", log_file=None, out_dir=None):
    """Configure the root logger once.

    Args:
        level (str): Root log level
        log_file (str, optional): Explicit log file path
        out_dir (str, optional): Output directory; the log goes to bergman-lab.log inside it
    """
    handlers = [logging.StreamHandler()]
    path = log_file or (os.path.join(out_dir, LOG_FILENAME) if out_dir else None)
    if path:
        directory = os.path.dirname(path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        handlers.append(logging.FileHandler(path))

    level = getattr(logging, str(level).upper(), logging.INFO)
    logging.basicConfig(level=level, format=LOG_FORMAT, handlers=handlers, force=True)

    if level <= logging.DEBUG:
        for name in DEBUG_MODULES:
            logging.getLogger(name).setLevel(logging.DEBUG)


def setup_config(argv=None):
    """Set up and validate configuration.

    Args:
        argv (list, optional): Command-line arguments (sys.argv[1:] by default)

    Returns:
        tuple: (Config or None when validation failed, subcommand)
    """
    parser = Config.setup_argparse()
    args = parser.parse_args(argv)

    # Console logging until the configured handlers are known
    setup_logging()

    config = Config()

    if args.config:
        if not config.load_from_file(args.config):
            return None, args.subcommand

    config.update_from_env()

    # Command line has the highest precedence
    config.update_from_args(args)

    setup_logging(config.get("log_level"), config.get("log_file"), config.get("out_dir"))

    if not config.validate():
        logger.error("Configuration validation failed")
        return None, args.subcommand

    return config, args.subcommand


def main(argv=None):
    """Main entry point for the application.

    Returns:
        int: Exit status (0 success, 1 numerical or property failure, 2 configuration error)
    """
    config, subcommand = setup_config(argv)
    if not config:
        logger.error("Failed to configure the experiment. Exiting.")
        return EXIT_CONFIG

    logger.info(f"Starting bergman-lab {subcommand}")
    status = run_experiment(config, subcommand)
    if status == 0:
        logger.info(f"bergman-lab {subcommand} completed successfully")
    else:
        logger.error(f"bergman-lab {subcommand} failed with exit status {status}")
    return status


if __name__ == "__main__":
    sys.exit(main())
